//! Problem builder.
//!
//! Variables are grouped into blocks. A block is either a run of scalars
//! (free or nonnegative) or a matrix variable with a [`MatrixLayout`]; matrix
//! blocks may be declared positive semidefinite. Constraints are sparse
//! linear rows and linear matrix inequalities over the real symmetric
//! embedding.

use std::fmt::Write as _;

use crate::layout::{Field, MatrixLayout, SymEntry};
use crate::ConicError;

/// Sense of a linear row `a^T x (sense) rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Eq,
    Le,
    Ge,
}

/// Kind of a variable block.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockKind {
    Free,
    Nonneg,
    /// Matrix variable; `psd` adds the cone constraint `X >= 0`.
    Matrix { layout: MatrixLayout, psd: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub kind: BlockKind,
    pub offset: usize,
    pub len: usize,
}

/// Handle to a matrix variable.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixVar {
    pub block: usize,
    pub offset: usize,
    pub layout: MatrixLayout,
}

impl MatrixVar {
    /// Global index of coordinate `k`.
    pub fn var(&self, k: usize) -> usize {
        self.offset + k
    }

    /// Coefficients of `Tr X` over global variable indices.
    pub fn trace(&self) -> Vec<(usize, f64)> {
        self.shift(self.layout.trace_coeffs())
    }

    /// Coefficients of `Re(u^H X v)` over global variable indices.
    pub fn bilinear(
        &self,
        u: &[num_complex::Complex64],
        v: &[num_complex::Complex64],
    ) -> Vec<(usize, f64)> {
        self.shift(self.layout.bilinear_coeffs(u, v))
    }

    fn shift(&self, local: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
        local.into_iter().map(|(k, a)| (self.offset + k, a)).collect()
    }
}

/// Linear row `sum coeffs (sense) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Linear matrix inequality
/// `constant + sum coef * embed(X) + sum x_i F_i >= 0` of dimension `dim`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Lmi {
    pub dim: usize,
    pub constant: Vec<SymEntry>,
    pub matrix_terms: Vec<(MatrixVar, f64)>,
    pub scalar_terms: Vec<(usize, Vec<SymEntry>)>,
}

impl Lmi {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            ..Self::default()
        }
    }

    /// Adds `coef * embed(X)`.
    pub fn matrix(mut self, x: &MatrixVar, coef: f64) -> Self {
        self.matrix_terms.push((x.clone(), coef));
        self
    }

    /// Adds `x_var * scale * I`.
    pub fn scalar_identity(mut self, var: usize, scale: f64) -> Self {
        let entries = (0..self.dim).map(|i| (i, i, scale)).collect();
        self.scalar_terms.push((var, entries));
        self
    }

    /// Adds the constant `scale * I`.
    pub fn constant_identity(mut self, scale: f64) -> Self {
        self.constant.extend((0..self.dim).map(|i| (i, i, scale)));
        self
    }
}

/// A conic program `min c^T x + c0` over blocks, rows and LMIs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConicProblem {
    pub(crate) num_vars: usize,
    pub(crate) blocks: Vec<Block>,
    pub(crate) var_block: Vec<usize>,
    pub(crate) objective: Vec<(usize, f64)>,
    pub(crate) objective_constant: f64,
    pub(crate) rows: Vec<Row>,
    pub(crate) lmis: Vec<Lmi>,
}

impl ConicProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn lmis(&self) -> &[Lmi] {
        &self.lmis
    }

    /// Number of positive semidefinite cones (PSD blocks plus LMIs).
    pub fn num_psd_cones(&self) -> usize {
        let blocks = self
            .blocks
            .iter()
            .filter(|b| matches!(b.kind, BlockKind::Matrix { psd: true, .. }))
            .count();
        blocks + self.lmis.len()
    }

    fn push_block(&mut self, kind: BlockKind, len: usize) -> usize {
        let id = self.blocks.len();
        self.blocks.push(Block {
            kind,
            offset: self.num_vars,
            len,
        });
        self.var_block.extend(std::iter::repeat_n(id, len));
        self.num_vars += len;
        id
    }

    /// Adds `len` free scalars; returns the index of the first.
    pub fn add_free(&mut self, len: usize) -> usize {
        let b = self.push_block(BlockKind::Free, len);
        self.blocks[b].offset
    }

    /// Adds `len` nonnegative scalars; returns the index of the first.
    pub fn add_nonneg(&mut self, len: usize) -> usize {
        let b = self.push_block(BlockKind::Nonneg, len);
        self.blocks[b].offset
    }

    /// Adds a matrix variable.
    pub fn add_matrix(&mut self, layout: MatrixLayout, psd: bool) -> MatrixVar {
        let len = layout.num_coords();
        let block = self.push_block(
            BlockKind::Matrix {
                layout: layout.clone(),
                psd,
            },
            len,
        );
        MatrixVar {
            block,
            offset: self.blocks[block].offset,
            layout,
        }
    }

    /// Adds a positive semidefinite Hermitian `n x n` variable.
    pub fn add_hermitian_psd(&mut self, n: usize) -> MatrixVar {
        self.add_matrix(MatrixLayout::new(n, Field::Complex), true)
    }

    /// Adds `coef * x_var` to the objective.
    pub fn add_objective(&mut self, coeffs: &[(usize, f64)]) {
        self.objective.extend_from_slice(coeffs);
    }

    pub fn add_objective_constant(&mut self, c: f64) {
        self.objective_constant += c;
    }

    /// Adds a linear row; returns its index.
    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        self.rows.push(Row { coeffs, sense, rhs });
        self.rows.len() - 1
    }

    /// Adds a linear matrix inequality; returns its index.
    pub fn add_lmi(&mut self, lmi: Lmi) -> usize {
        self.lmis.push(lmi);
        self.lmis.len() - 1
    }

    /// Objective value at `x`.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_constant + self.objective.iter().map(|&(i, a)| a * x[i]).sum::<f64>()
    }

    /// Checks indices, dimensions and symmetric-coordinate addressing.
    pub fn validate(&self) -> Result<(), ConicError> {
        let check_var = |i: usize| {
            if i < self.num_vars {
                Ok(())
            } else {
                Err(ConicError::InvalidProblem(format!("variable {i} out of range")))
            }
        };
        for &(i, a) in &self.objective {
            check_var(i)?;
            if !a.is_finite() {
                return Err(ConicError::InvalidProblem("non-finite objective".into()));
            }
        }
        for (r, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(ConicError::InvalidProblem(format!("row {r}: non-finite rhs")));
            }
            for &(i, a) in &row.coeffs {
                check_var(i)?;
                if !a.is_finite() {
                    return Err(ConicError::InvalidProblem(format!("row {r}: non-finite coefficient")));
                }
            }
        }
        for (l, lmi) in self.lmis.iter().enumerate() {
            let entry_ok = |e: &SymEntry| e.0 <= e.1 && e.1 < lmi.dim && e.2.is_finite();
            if lmi.dim == 0 || !lmi.constant.iter().all(entry_ok) {
                return Err(ConicError::InvalidProblem(format!("lmi {l}: bad constant")));
            }
            for (x, _) in &lmi.matrix_terms {
                if x.layout.embed_dim() != lmi.dim || x.offset + x.layout.num_coords() > self.num_vars {
                    return Err(ConicError::InvalidProblem(format!("lmi {l}: matrix term mismatch")));
                }
            }
            for (v, entries) in &lmi.scalar_terms {
                check_var(*v)?;
                if !entries.iter().all(entry_ok) {
                    return Err(ConicError::InvalidProblem(format!(
                        "lmi {l}: scalar term addresses a non-upper-triangular entry"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Text interchange dump.
    ///
    /// Format, one item per line:
    /// `vars N`, `block ID KIND OFFSET LEN [n FIELD psd]`,
    /// `obj I A` and `objconst C`, `row R SENSE RHS` followed by `a I A`
    /// lines, `lmi L DIM` followed by `c R C V` (constant), `m OFFSET N FIELD COEF`
    /// (matrix term) and `s I R C V` (scalar term) lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "vars {}", self.num_vars);
        for (id, b) in self.blocks.iter().enumerate() {
            match &b.kind {
                BlockKind::Free => {
                    let _ = writeln!(out, "block {id} free {} {}", b.offset, b.len);
                }
                BlockKind::Nonneg => {
                    let _ = writeln!(out, "block {id} nonneg {} {}", b.offset, b.len);
                }
                BlockKind::Matrix { layout, psd } => {
                    let _ = writeln!(
                        out,
                        "block {id} matrix {} {} {} {} {}",
                        b.offset,
                        b.len,
                        layout.n(),
                        field_name(layout.field()),
                        if *psd { "psd" } else { "any" }
                    );
                }
            }
        }
        for &(i, a) in &self.objective {
            let _ = writeln!(out, "obj {i} {a:e}");
        }
        let _ = writeln!(out, "objconst {:e}", self.objective_constant);
        for (r, row) in self.rows.iter().enumerate() {
            let sense = match row.sense {
                Sense::Eq => "eq",
                Sense::Le => "le",
                Sense::Ge => "ge",
            };
            let _ = writeln!(out, "row {r} {sense} {:e}", row.rhs);
            for &(i, a) in &row.coeffs {
                let _ = writeln!(out, "a {i} {a:e}");
            }
        }
        for (l, lmi) in self.lmis.iter().enumerate() {
            let _ = writeln!(out, "lmi {l} {}", lmi.dim);
            for &(r, c, v) in &lmi.constant {
                let _ = writeln!(out, "c {r} {c} {v:e}");
            }
            for (x, coef) in &lmi.matrix_terms {
                let _ = writeln!(
                    out,
                    "m {} {} {} {coef:e}",
                    x.offset,
                    x.layout.n(),
                    field_name(x.layout.field())
                );
            }
            for (v, entries) in &lmi.scalar_terms {
                for &(r, c, a) in entries {
                    let _ = writeln!(out, "s {v} {r} {c} {a:e}");
                }
            }
        }
        out
    }

    /// Parses the format written by [`ConicProblem::to_text`].
    pub fn from_text(text: &str) -> Result<Self, ConicError> {
        let bad = |line: usize, msg: &str| ConicError::Parse {
            line: line + 1,
            msg: msg.to_string(),
        };
        let mut p = ConicProblem::new();
        let mut declared = None;
        for (ln, line) in text.lines().enumerate() {
            let tok: Vec<&str> = line.split_whitespace().collect();
            if tok.is_empty() {
                continue;
            }
            let num = |i: usize| -> Result<f64, ConicError> {
                tok.get(i)
                    .and_then(|t| t.parse::<f64>().ok())
                    .ok_or_else(|| bad(ln, "expected a number"))
            };
            let idx = |i: usize| -> Result<usize, ConicError> {
                tok.get(i)
                    .and_then(|t| t.parse::<usize>().ok())
                    .ok_or_else(|| bad(ln, "expected an index"))
            };
            match tok[0] {
                "vars" => declared = Some(idx(1)?),
                "block" => {
                    let len = idx(4)?;
                    match tok.get(2).copied() {
                        Some("free") => {
                            p.add_free(len);
                        }
                        Some("nonneg") => {
                            p.add_nonneg(len);
                        }
                        Some("matrix") => {
                            let field = parse_field(tok.get(6).copied()).ok_or_else(|| bad(ln, "bad field"))?;
                            let psd = tok.get(7) == Some(&"psd");
                            p.add_matrix(MatrixLayout::new(idx(5)?, field), psd);
                        }
                        _ => return Err(bad(ln, "unknown block kind")),
                    }
                }
                "obj" => p.objective.push((idx(1)?, num(2)?)),
                "objconst" => p.objective_constant = num(1)?,
                "row" => {
                    let sense = match tok.get(2).copied() {
                        Some("eq") => Sense::Eq,
                        Some("le") => Sense::Le,
                        Some("ge") => Sense::Ge,
                        _ => return Err(bad(ln, "unknown sense")),
                    };
                    p.add_row(Vec::new(), sense, num(3)?);
                }
                "a" => {
                    let row = p.rows.last_mut().ok_or_else(|| bad(ln, "coefficient before row"))?;
                    row.coeffs.push((idx(1)?, num(2)?));
                }
                "lmi" => {
                    p.add_lmi(Lmi::new(idx(2)?));
                }
                "c" | "m" | "s" => {
                    let (r, c) = (idx(1)?, idx(2)?);
                    let matrix_var = if tok[0] == "m" {
                        let field = parse_field(tok.get(3).copied()).ok_or_else(|| bad(ln, "bad field"))?;
                        let offset = r;
                        let block = *p.var_block.get(offset).ok_or_else(|| bad(ln, "bad offset"))?;
                        Some(MatrixVar {
                            block,
                            offset,
                            layout: MatrixLayout::new(c, field),
                        })
                    } else {
                        None
                    };
                    let lmi = p.lmis.last_mut().ok_or_else(|| bad(ln, "term before lmi"))?;
                    match tok[0] {
                        "c" => lmi.constant.push((r, c, num(3)?)),
                        "m" => lmi.matrix_terms.push((matrix_var.expect("matrix term"), num(4)?)),
                        _ => {
                            let (row, col, v) = (c, idx(3)?, num(4)?);
                            match lmi.scalar_terms.last_mut() {
                                Some((var, entries)) if *var == r => entries.push((row, col, v)),
                                _ => lmi.scalar_terms.push((r, vec![(row, col, v)])),
                            }
                        }
                    }
                }
                _ => return Err(bad(ln, "unknown record")),
            }
        }
        if declared != Some(p.num_vars) {
            return Err(ConicError::Parse {
                line: 0,
                msg: "variable count does not match blocks".into(),
            });
        }
        p.validate()?;
        Ok(p)
    }
}

fn field_name(f: Field) -> &'static str {
    match f {
        Field::Real => "real",
        Field::Complex => "complex",
    }
}

fn parse_field(s: Option<&str>) -> Option<Field> {
    match s {
        Some("real") => Some(Field::Real),
        Some("complex") => Some(Field::Complex),
        _ => None,
    }
}
