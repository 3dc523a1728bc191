//! Homogeneous self-dual primal-dual interior-point method with
//! Nesterov-Todd scaling and Mehrotra predictor-corrector steps.
//!
//! Internally the problem is
//! `min c^T x  s.t.  s = h + L(x) in K,  A x = b`
//! where `K` is a product of a nonnegative orthant and real PSD cones.
//! The Newton systems are reduced to normal equations in `x`; the part of
//! the Hessian coming from PSD cones and short rows is factored by a
//! block-sparse Cholesky, long rows and equalities enter through a small
//! dense Schur complement.

use nalgebra::{DMatrix, DVector};

use crate::cholesky::{dense_cholesky, BlockCholesky, BlockPattern};
use crate::layout::{MatrixLayout, SymEntry};
use crate::problem::{BlockKind, ConicProblem, Sense};
use crate::{ConicSolution, SolverSettings, Status};

/// Rows touching more blocks than this are handled in the dense Schur part.
const DENSE_ROW_BLOCKS: usize = 4;

struct LpRow {
    coeffs: Vec<(usize, f64)>,
    constant: f64,
    dense: bool,
}

struct MatTerm {
    offset: usize,
    layout: usize,
    coef: f64,
}

struct PsdCone {
    dim: usize,
    constant: DMatrix<f64>,
    terms: Vec<MatTerm>,
    scalars: Vec<(usize, Vec<SymEntry>)>,
    /// Distinct layouts used by the matrix terms, with their bases.
    layouts: Vec<(MatrixLayout, Vec<Vec<SymEntry>>)>,
    /// Local variable list: global index per local slot.
    local_vars: Vec<usize>,
    /// Local slot range of each matrix term.
    term_slots: Vec<usize>,
    /// Local slot of each scalar term.
    scalar_slots: Vec<usize>,
    groups: Vec<Group>,
}

/// Local slots that fall into one variable block.
struct Group {
    block: usize,
    slots: Vec<(usize, usize)>,
}

/// Closed-form inverse of the Hessian, available when every variable is a
/// bounded scalar or lies in exactly one PSD cone (its own). All general
/// rows then go to the Schur part and no ill-conditioned block is factored.
struct Separable {
    blocks: Vec<SepBlock>,
}

enum SepBlock {
    /// Scalars whose bound rows start at this LP row.
    Nonneg { first_row: usize, len: usize },
    /// Matrix block in cone `cone`; `ginv` inverts the coordinate metric.
    Matrix { cone: usize, ginv: DVector<f64> },
}

struct Compiled {
    n: usize,
    c: DVector<f64>,
    lp: Vec<LpRow>,
    lp_groups: Vec<Vec<Group>>,
    psd: Vec<PsdCone>,
    eq: Vec<(Vec<(usize, f64)>, f64)>,
    /// For each user row: (is_equality, index into `eq` or `lp`, sign).
    row_map: Vec<(bool, usize, f64)>,
    var_block: Vec<usize>,
    block_offset: Vec<usize>,
    pattern: BlockPattern,
    dense_rows: Vec<usize>,
    separable: Option<Separable>,
}

fn groups_for(vars: &[usize], var_block: &[usize], block_offset: &[usize]) -> Vec<Group> {
    let mut groups: Vec<Group> = Vec::new();
    for (slot, &v) in vars.iter().enumerate() {
        let b = var_block[v];
        let local = v - block_offset[b];
        match groups.iter_mut().find(|g| g.block == b) {
            Some(g) => g.slots.push((slot, local)),
            None => groups.push(Group {
                block: b,
                slots: vec![(slot, local)],
            }),
        }
    }
    groups.sort_by_key(|g| g.block);
    groups
}

fn compile(p: &ConicProblem) -> Compiled {
    let n = p.num_vars;
    let mut c = DVector::zeros(n);
    for &(i, a) in &p.objective {
        c[i] += a;
    }
    let block_offset: Vec<usize> = p.blocks.iter().map(|b| b.offset).collect();
    let sizes: Vec<usize> = p.blocks.iter().map(|b| b.len).collect();
    let var_block = p.var_block.clone();

    let mut lp = Vec::new();
    let mut eq = Vec::new();
    let mut row_map = Vec::with_capacity(p.rows.len());
    for row in &p.rows {
        let mut coeffs = merge(&row.coeffs);
        match row.sense {
            Sense::Eq => {
                row_map.push((true, eq.len(), 1.0));
                eq.push((coeffs, row.rhs));
            }
            Sense::Ge => {
                row_map.push((false, lp.len(), 1.0));
                lp.push(LpRow {
                    coeffs,
                    constant: -row.rhs,
                    dense: false,
                });
            }
            Sense::Le => {
                for t in &mut coeffs {
                    t.1 = -t.1;
                }
                row_map.push((false, lp.len(), -1.0));
                lp.push(LpRow {
                    coeffs,
                    constant: row.rhs,
                    dense: false,
                });
            }
        }
    }
    let num_general = lp.len();
    let separable_ok = p.lmis.is_empty()
        && p.blocks.iter().all(|b| {
            b.kind == BlockKind::Nonneg || matches!(b.kind, BlockKind::Matrix { psd: true, .. })
        });
    let mut sep_blocks = Vec::new();
    let mut next_cone = 0;
    for b in &p.blocks {
        match &b.kind {
            BlockKind::Nonneg => sep_blocks.push(SepBlock::Nonneg {
                first_row: lp.len(),
                len: b.len,
            }),
            BlockKind::Matrix { layout, .. } => {
                let ginv = DVector::from_iterator(
                    layout.num_coords(),
                    (0..layout.num_coords()).map(|k| {
                        let g: f64 = layout
                            .basis(k)
                            .iter()
                            .map(|&(r, c, v)| if r == c { v * v } else { 2.0 * v * v })
                            .sum();
                        1.0 / g
                    }),
                );
                sep_blocks.push(SepBlock::Matrix { cone: next_cone, ginv });
                next_cone += 1;
            }
            _ => {}
        }
        if b.kind == BlockKind::Nonneg {
            for i in b.offset..b.offset + b.len {
                lp.push(LpRow {
                    coeffs: vec![(i, 1.0)],
                    constant: 0.0,
                    dense: false,
                });
            }
        }
    }

    let mut psd = Vec::new();
    for b in &p.blocks {
        if let BlockKind::Matrix { layout, psd: true } = &b.kind {
            psd.push(make_cone(
                layout.embed_dim(),
                &[],
                &[(b.offset, layout.clone(), 1.0)],
                &[],
            ));
        }
    }
    for lmi in &p.lmis {
        let terms: Vec<(usize, MatrixLayout, f64)> = lmi
            .matrix_terms
            .iter()
            .map(|(x, coef)| (x.offset, x.layout.clone(), *coef))
            .collect();
        psd.push(make_cone(lmi.dim, &lmi.constant, &terms, &lmi.scalar_terms));
    }
    for cone in &mut psd {
        cone.groups = groups_for(&cone.local_vars, &var_block, &block_offset);
    }

    let mut edges = Vec::new();
    let mut lp_groups = Vec::with_capacity(lp.len());
    let mut dense_rows = Vec::new();
    for (r, row) in lp.iter_mut().enumerate() {
        let vars: Vec<usize> = row.coeffs.iter().map(|t| t.0).collect();
        let g = groups_for(&vars, &var_block, &block_offset);
        if g.len() > DENSE_ROW_BLOCKS || (separable_ok && r < num_general) {
            row.dense = true;
            dense_rows.push(r);
            lp_groups.push(Vec::new());
        } else {
            for a in 0..g.len() {
                for b in (a + 1)..g.len() {
                    edges.push((g[a].block, g[b].block));
                }
            }
            lp_groups.push(g);
        }
    }
    for cone in &psd {
        let g = &cone.groups;
        for a in 0..g.len() {
            for b in (a + 1)..g.len() {
                edges.push((g[a].block, g[b].block));
            }
        }
    }
    let pattern = BlockPattern::new(sizes, edges);
    Compiled {
        n,
        c,
        lp,
        lp_groups,
        psd,
        eq,
        row_map,
        var_block,
        block_offset,
        pattern,
        dense_rows,
        separable: separable_ok.then_some(Separable { blocks: sep_blocks }),
    }
}

fn merge(coeffs: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mut v = coeffs.to_vec();
    v.sort_by_key(|t| t.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(v.len());
    for (i, a) in v {
        match out.last_mut() {
            Some(last) if last.0 == i => last.1 += a,
            _ => out.push((i, a)),
        }
    }
    out
}

fn make_cone(
    dim: usize,
    constant: &[SymEntry],
    terms: &[(usize, MatrixLayout, f64)],
    scalars: &[(usize, Vec<SymEntry>)],
) -> PsdCone {
    let mut cm = DMatrix::zeros(dim, dim);
    for &(r, c, v) in constant {
        cm[(r, c)] += v;
        if r != c {
            cm[(c, r)] += v;
        }
    }
    let mut layouts: Vec<(MatrixLayout, Vec<Vec<SymEntry>>)> = Vec::new();
    let mut mterms = Vec::new();
    let mut local_vars = Vec::new();
    let mut term_slots = Vec::new();
    for (offset, layout, coef) in terms {
        let li = match layouts.iter().position(|(l, _)| l == layout) {
            Some(i) => i,
            None => {
                let basis = (0..layout.num_coords()).map(|k| layout.basis(k)).collect();
                layouts.push((layout.clone(), basis));
                layouts.len() - 1
            }
        };
        term_slots.push(local_vars.len());
        local_vars.extend(*offset..*offset + layout.num_coords());
        mterms.push(MatTerm {
            offset: *offset,
            layout: li,
            coef: *coef,
        });
    }
    let mut scalar_slots = Vec::new();
    for (v, _) in scalars {
        scalar_slots.push(local_vars.len());
        local_vars.push(*v);
    }
    PsdCone {
        dim,
        constant: cm,
        terms: mterms,
        scalars: scalars.to_vec(),
        layouts,
        local_vars,
        term_slots,
        scalar_slots,
        groups: Vec::new(),
    }
}

/// Element of the cone product.
#[derive(Clone, Debug)]
struct CVec {
    lp: DVector<f64>,
    psd: Vec<DMatrix<f64>>,
}

impl CVec {
    fn zeros(cp: &Compiled) -> Self {
        Self {
            lp: DVector::zeros(cp.lp.len()),
            psd: cp.psd.iter().map(|c| DMatrix::zeros(c.dim, c.dim)).collect(),
        }
    }

    fn identity(cp: &Compiled) -> Self {
        Self {
            lp: DVector::from_element(cp.lp.len(), 1.0),
            psd: cp.psd.iter().map(|c| DMatrix::identity(c.dim, c.dim)).collect(),
        }
    }

    fn dot(&self, o: &CVec) -> f64 {
        self.lp.dot(&o.lp) + self.psd.iter().zip(&o.psd).map(|(a, b)| a.dot(b)).sum::<f64>()
    }

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    fn axpy(&mut self, a: f64, o: &CVec) {
        self.lp.axpy(a, &o.lp, 1.0);
        for (x, y) in self.psd.iter_mut().zip(&o.psd) {
            x.zip_apply(y, |p, q| *p += a * q);
        }
    }

    fn scaled(&self, a: f64) -> CVec {
        CVec {
            lp: &self.lp * a,
            psd: self.psd.iter().map(|m| m * a).collect(),
        }
    }

    fn is_finite(&self) -> bool {
        self.lp.iter().all(|v| v.is_finite()) && self.psd.iter().all(|m| m.iter().all(|v| v.is_finite()))
    }
}

fn sym_dot(entries: &[SymEntry], z: &DMatrix<f64>) -> f64 {
    entries
        .iter()
        .map(|&(r, c, v)| if r == c { v * z[(r, c)] } else { v * (z[(r, c)] + z[(c, r)]) })
        .sum()
}

impl Compiled {
    /// `h`: the constant part of the slack.
    fn h(&self) -> CVec {
        CVec {
            lp: DVector::from_iterator(self.lp.len(), self.lp.iter().map(|r| r.constant)),
            psd: self.psd.iter().map(|c| c.constant.clone()).collect(),
        }
    }

    /// Linear part `L(x)` of the slack.
    fn lin(&self, x: &DVector<f64>) -> CVec {
        let lp = DVector::from_iterator(
            self.lp.len(),
            self.lp.iter().map(|r| r.coeffs.iter().map(|&(i, a)| a * x[i]).sum::<f64>()),
        );
        let psd = self
            .psd
            .iter()
            .map(|cone| {
                let mut m = DMatrix::zeros(cone.dim, cone.dim);
                for t in &cone.terms {
                    let basis = &cone.layouts[t.layout].1;
                    for (k, b) in basis.iter().enumerate() {
                        let v = t.coef * x[t.offset + k];
                        if v == 0.0 {
                            continue;
                        }
                        for &(r, c, w) in b {
                            m[(r, c)] += v * w;
                            if r != c {
                                m[(c, r)] += v * w;
                            }
                        }
                    }
                }
                for (var, entries) in &cone.scalars {
                    let v = x[*var];
                    for &(r, c, w) in entries {
                        m[(r, c)] += v * w;
                        if r != c {
                            m[(c, r)] += v * w;
                        }
                    }
                }
                m
            })
            .collect();
        CVec { lp, psd }
    }

    /// Adjoint `L^T(z)`.
    fn lin_t(&self, z: &CVec) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        for (r, row) in self.lp.iter().enumerate() {
            for &(i, a) in &row.coeffs {
                out[i] += a * z.lp[r];
            }
        }
        for (cone, zm) in self.psd.iter().zip(&z.psd) {
            for t in &cone.terms {
                let basis = &cone.layouts[t.layout].1;
                for (k, b) in basis.iter().enumerate() {
                    out[t.offset + k] += t.coef * sym_dot(b, zm);
                }
            }
            for (var, entries) in &cone.scalars {
                out[*var] += sym_dot(entries, zm);
            }
        }
        out
    }

    fn a_mul(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.eq.len(),
            self.eq.iter().map(|(row, _)| row.iter().map(|&(i, a)| a * x[i]).sum::<f64>()),
        )
    }

    fn at_mul(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        for (r, (row, _)) in self.eq.iter().enumerate() {
            for &(i, a) in row {
                out[i] += a * y[r];
            }
        }
        out
    }

    fn b(&self) -> DVector<f64> {
        DVector::from_iterator(self.eq.len(), self.eq.iter().map(|e| e.1))
    }

    fn degree(&self) -> f64 {
        (self.lp.len() + self.psd.iter().map(|c| c.dim).sum::<usize>()) as f64
    }
}

/// Nesterov-Todd scaling at a strictly feasible pair `(s, z)`.
struct Scaling {
    /// LP: `w = sqrt(s / z)`.
    w: DVector<f64>,
    lambda_lp: DVector<f64>,
    psd: Vec<PsdScaling>,
}

struct PsdScaling {
    r: DMatrix<f64>,
    rinv: DMatrix<f64>,
    lambda: DVector<f64>,
    /// `(r r^T)^{-1}`.
    rr_inv: DMatrix<f64>,
    /// `r r^T`.
    rr: DMatrix<f64>,
}

impl Scaling {
    fn identity(cp: &Compiled) -> Self {
        Self {
            w: DVector::from_element(cp.lp.len(), 1.0),
            lambda_lp: DVector::from_element(cp.lp.len(), 1.0),
            psd: cp
                .psd
                .iter()
                .map(|c| PsdScaling {
                    r: DMatrix::identity(c.dim, c.dim),
                    rinv: DMatrix::identity(c.dim, c.dim),
                    lambda: DVector::from_element(c.dim, 1.0),
                    rr_inv: DMatrix::identity(c.dim, c.dim),
                    rr: DMatrix::identity(c.dim, c.dim),
                })
                .collect(),
        }
    }

    fn compute(s: &CVec, z: &CVec) -> Option<Self> {
        let w = s.lp.zip_map(&z.lp, |a, b| (a / b).sqrt());
        let lambda_lp = s.lp.zip_map(&z.lp, |a, b| (a * b).sqrt());
        let mut psd = Vec::with_capacity(s.psd.len());
        for (sm, zm) in s.psd.iter().zip(&z.psd) {
            let ls = nalgebra::Cholesky::new(sm.clone())?.unpack();
            let lz = nalgebra::Cholesky::new(zm.clone())?.unpack();
            let prod = lz.tr_mul(&ls);
            let svd = prod.svd(true, true);
            let u = svd.u?;
            let vt = svd.v_t?;
            let sv = svd.singular_values;
            if sv.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return None;
            }
            let isqrt = sv.map(|x| 1.0 / x.sqrt());
            // r = L_s V diag(sv)^{-1/2}
            let mut r = ls * vt.transpose();
            for (j, mut col) in r.column_iter_mut().enumerate() {
                col *= isqrt[j];
            }
            // r^{-1} = diag(sv)^{-1/2} U^T L_z^T
            let mut rinv = u.transpose() * lz.transpose();
            for (i, mut row) in rinv.row_iter_mut().enumerate() {
                row *= isqrt[i];
            }
            let rr_inv = rinv.tr_mul(&rinv);
            let rr = &r * r.transpose();
            psd.push(PsdScaling {
                r,
                rinv,
                lambda: sv,
                rr_inv,
                rr,
            });
        }
        Some(Self { w, lambda_lp, psd })
    }

    /// `W z`.
    fn apply_w(&self, z: &CVec) -> CVec {
        CVec {
            lp: z.lp.component_mul(&self.w),
            psd: self
                .psd
                .iter()
                .zip(&z.psd)
                .map(|(sc, m)| sc.r.transpose() * m * &sc.r)
                .collect(),
        }
    }

    /// `W^{-T} s`.
    fn apply_w_inv_t(&self, s: &CVec) -> CVec {
        CVec {
            lp: s.lp.component_div(&self.w),
            psd: self
                .psd
                .iter()
                .zip(&s.psd)
                .map(|(sc, m)| &sc.rinv * m * sc.rinv.transpose())
                .collect(),
        }
    }

    /// `W^T y`.
    fn apply_w_t(&self, y: &CVec) -> CVec {
        CVec {
            lp: y.lp.component_mul(&self.w),
            psd: self
                .psd
                .iter()
                .zip(&y.psd)
                .map(|(sc, m)| &sc.r * m * sc.r.transpose())
                .collect(),
        }
    }

    /// `(W^T W)^{-1} x`.
    fn apply_wtw_inv(&self, x: &CVec) -> CVec {
        CVec {
            lp: x.lp.component_div(&self.w).component_div(&self.w),
            psd: self
                .psd
                .iter()
                .zip(&x.psd)
                .map(|(sc, m)| &sc.rr_inv * m * &sc.rr_inv)
                .collect(),
        }
    }

    /// `W^T W x`.
    fn apply_wtw(&self, x: &CVec) -> CVec {
        CVec {
            lp: x.lp.component_mul(&self.w).component_mul(&self.w),
            psd: self
                .psd
                .iter()
                .zip(&x.psd)
                .map(|(sc, m)| &sc.rr * m * &sc.rr)
                .collect(),
        }
    }

    /// `lambda o lambda`.
    fn lambda_sq(&self) -> CVec {
        CVec {
            lp: self.lambda_lp.component_mul(&self.lambda_lp),
            psd: self
                .psd
                .iter()
                .map(|sc| DMatrix::from_diagonal(&sc.lambda.component_mul(&sc.lambda)))
                .collect(),
        }
    }

    /// Solves `lambda o y = d`.
    fn lambda_div(&self, d: &CVec) -> CVec {
        CVec {
            lp: d.lp.component_div(&self.lambda_lp),
            psd: self
                .psd
                .iter()
                .zip(&d.psd)
                .map(|(sc, m)| {
                    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
                        2.0 * m[(i, j)] / (sc.lambda[i] + sc.lambda[j])
                    })
                })
                .collect(),
        }
    }

    /// Largest step `a` with `lambda + a * d` in the cone (`f64::INFINITY` if unbounded).
    fn max_step(&self, d: &CVec) -> f64 {
        let mut a = f64::INFINITY;
        for (l, v) in self.lambda_lp.iter().zip(d.lp.iter()) {
            if *v < 0.0 {
                a = a.min(-l / v);
            }
        }
        for (sc, m) in self.psd.iter().zip(&d.psd) {
            let isq = sc.lambda.map(|x| 1.0 / x.sqrt());
            let t = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| isq[i] * m[(i, j)] * isq[j]);
            let t = (&t + t.transpose()) * 0.5;
            let emin = t.symmetric_eigenvalues().min();
            if emin < 0.0 {
                a = a.min(-1.0 / emin);
            }
        }
        a
    }
}

fn jordan(a: &CVec, b: &CVec) -> CVec {
    CVec {
        lp: a.lp.component_mul(&b.lp),
        psd: a
            .psd
            .iter()
            .zip(&b.psd)
            .map(|(x, y)| (x * y + y * x) * 0.5)
            .collect(),
    }
}

/// Largest `t` such that `x - t e` is not in the interior; i.e. `-min eig`.
fn max_violation(x: &CVec) -> f64 {
    let mut t = f64::NEG_INFINITY;
    for v in x.lp.iter() {
        t = t.max(-v);
    }
    for m in &x.psd {
        let sym = (m + m.transpose()) * 0.5;
        t = t.max(-sym.symmetric_eigenvalues().min());
    }
    t
}

/// Factored reduced KKT system for a fixed scaling.
struct Kkt<'a> {
    cp: &'a Compiled,
    chol: BlockCholesky,
    /// Dense Schur part: rows `B` (dense LP rows then equalities),
    /// `Y = Hs^{-1} B^T` and the Cholesky factor of `B Y + E`.
    bmat: Vec<Vec<(usize, f64)>>,
    y: Vec<DVector<f64>>,
    schur: Option<DMatrix<f64>>,
    /// Separable mode: `r r^T` per PSD cone and `w^2` per LP row.
    sep: Option<(Vec<DMatrix<f64>>, DVector<f64>)>,
}

impl<'a> Kkt<'a> {
    fn factor(cp: &'a Compiled, sc: &Scaling, mut chol: BlockCholesky, reg: f64) -> Option<Self> {
        chol.clear();
        let sep = cp.separable.as_ref().map(|_| {
            (
                sc.psd.iter().map(|p| p.rr.clone()).collect::<Vec<_>>(),
                sc.w.component_mul(&sc.w),
            )
        });
        if sep.is_some() {
            return Self::with_schur(cp, sc, chol, sep);
        }
        // LP sparse rows: d_i a a^T with d_i = 1 / w_i^2
        for (r, row) in cp.lp.iter().enumerate() {
            if row.dense {
                continue;
            }
            let d = 1.0 / (sc.w[r] * sc.w[r]);
            let groups = &cp.lp_groups[r];
            scatter(&mut chol, groups, |i, j| d * row.coeffs[i].1 * row.coeffs[j].1);
        }
        for (cone, psc) in cp.psd.iter().zip(&sc.psd) {
            let hc = cone_hessian(cone, &psc.rr_inv);
            scatter(&mut chol, &cone.groups, |i, j| hc[(i, j)]);
        }
        let maxd = chol.max_diagonal().max(1e-300);
        // tiny static shift keeps blocks touched only by equalities solvable
        chol.add_diagonal(reg * maxd);
        if !chol.factor(1e-13) {
            return None;
        }
        Self::with_schur(cp, sc, chol, None)
    }

    fn with_schur(
        cp: &'a Compiled,
        sc: &Scaling,
        chol: BlockCholesky,
        sep: Option<(Vec<DMatrix<f64>>, DVector<f64>)>,
    ) -> Option<Self> {
        let mut kkt = Self {
            cp,
            chol,
            bmat: Vec::new(),
            y: Vec::new(),
            schur: None,
            sep,
        };
        let mut bmat: Vec<Vec<(usize, f64)>> = Vec::new();
        let mut e = Vec::new();
        for &r in &cp.dense_rows {
            bmat.push(cp.lp[r].coeffs.clone());
            e.push(sc.w[r] * sc.w[r]);
        }
        for (row, _) in &cp.eq {
            bmat.push(row.clone());
            e.push(0.0);
        }
        let nb = bmat.len();
        let mut y = Vec::with_capacity(nb);
        for row in &bmat {
            let mut v = DVector::zeros(cp.n);
            for &(i, a) in row {
                v[i] += a;
            }
            y.push(kkt.hsolve(&v));
        }
        let schur = if nb > 0 {
            let mut s = DMatrix::zeros(nb, nb);
            for a in 0..nb {
                for b in 0..nb {
                    s[(a, b)] = bmat[a].iter().map(|&(i, v)| v * y[b][i]).sum::<f64>();
                }
            }
            let s = (&s + s.transpose()) * 0.5;
            let scale = (0..nb).map(|i| s[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
            let mut s = s;
            for i in 0..nb {
                s[(i, i)] += e[i] + 1e-14 * scale;
            }
            let mut shift = 0.0;
            Some(dense_cholesky(&mut s, 1e-13, &mut shift)?)
        } else {
            None
        };
        kkt.bmat = bmat;
        kkt.y = y;
        kkt.schur = schur;
        Some(kkt)
    }

    /// Separable elimination: the cone part of `dz` comes from the dual
    /// equation and `dx` from the scaled complementarity equation, so the
    /// inverse scaling is never applied.
    fn solve_once_separable(
        &self,
        rx: &DVector<f64>,
        ry: &DVector<f64>,
        rz: &CVec,
    ) -> (DVector<f64>, DVector<f64>, CVec) {
        let cp = self.cp;
        let sep = cp.separable.as_ref().expect("separable problem");
        let nd = cp.dense_rows.len();
        let nb = self.bmat.len();
        // d0 = -(own-cone part of rz), mapped to coordinates
        let mut d0 = DVector::zeros(cp.n);
        for (b, blk) in sep.blocks.iter().enumerate() {
            let off = cp.block_offset[b];
            match blk {
                SepBlock::Nonneg { first_row, len } => {
                    for i in 0..*len {
                        d0[off + i] = -rz.lp[first_row + i];
                    }
                }
                SepBlock::Matrix { cone, ginv } => {
                    let c = &cp.psd[*cone];
                    let basis = &c.layouts[c.terms[0].layout].1;
                    for (k, e) in basis.iter().enumerate() {
                        d0[off + k] = -ginv[k] * sym_dot(e, &rz.psd[*cone]);
                    }
                }
            }
        }
        let p = &d0 + self.hsolve(rx);
        let mut nu = DVector::zeros(nb);
        for a in 0..nb {
            let dot = self.bmat[a].iter().map(|&(i, v)| v * p[i]).sum::<f64>();
            nu[a] = if a < nd { rz.lp[cp.dense_rows[a]] + dot } else { dot - ry[a - nd] };
        }
        if let Some(l) = &self.schur {
            let _ = l.solve_lower_triangular_mut(&mut nu);
            let _ = l.tr_solve_lower_triangular_mut(&mut nu);
        }
        let mut u = -rx;
        for a in 0..nb {
            for &(i, v) in &self.bmat[a] {
                u[i] += v * nu[a];
            }
        }
        let dx = &d0 - self.hsolve(&u);
        let mut dz = CVec::zeros(cp);
        for (a, &r) in cp.dense_rows.iter().enumerate() {
            dz.lp[r] = -nu[a];
        }
        for (b, blk) in sep.blocks.iter().enumerate() {
            let off = cp.block_offset[b];
            match blk {
                SepBlock::Nonneg { first_row, len } => {
                    for i in 0..*len {
                        dz.lp[first_row + i] = u[off + i];
                    }
                }
                SepBlock::Matrix { cone, ginv } => {
                    let c = &cp.psd[*cone];
                    let basis = &c.layouts[c.terms[0].layout].1;
                    let z = &mut dz.psd[*cone];
                    for (k, e) in basis.iter().enumerate() {
                        let v = u[off + k] * ginv[k];
                        for &(r, cc, w) in e {
                            z[(r, cc)] += v * w;
                            if r != cc {
                                z[(cc, r)] += v * w;
                            }
                        }
                    }
                }
            }
        }
        let dy = DVector::from_iterator(nb - nd, nu.iter().skip(nd).copied());
        (dx, dy, dz)
    }

    /// Applies the inverse of the factored (or separable) Hessian.
    fn hsolve(&self, v: &DVector<f64>) -> DVector<f64> {
        let Some((rr, w2)) = &self.sep else {
            return self.chol.solve(v);
        };
        let cp = self.cp;
        let sep = cp.separable.as_ref().expect("separable problem");
        let mut out = DVector::zeros(cp.n);
        for (b, blk) in sep.blocks.iter().enumerate() {
            let off = cp.block_offset[b];
            match blk {
                SepBlock::Nonneg { first_row, len } => {
                    for i in 0..*len {
                        out[off + i] = v[off + i] * w2[first_row + i];
                    }
                }
                SepBlock::Matrix { cone, ginv } => {
                    let c = &cp.psd[*cone];
                    let basis = &c.layouts[c.terms[0].layout].1;
                    let mut z = DMatrix::zeros(c.dim, c.dim);
                    for (k, e) in basis.iter().enumerate() {
                        let u = v[off + k] * ginv[k];
                        for &(r, cc, w) in e {
                            z[(r, cc)] += u * w;
                            if r != cc {
                                z[(cc, r)] += u * w;
                            }
                        }
                    }
                    let zz = &rr[*cone] * z * &rr[*cone];
                    for (k, e) in basis.iter().enumerate() {
                        out[off + k] = ginv[k] * sym_dot(e, &zz);
                    }
                }
            }
        }
        out
    }

    fn into_storage(self) -> BlockCholesky {
        self.chol
    }

    /// Solves `H dx + A^T dy = q`, `A dx = ry` (with dense LP rows folded in).
    fn solve_reduced(&self, q: &DVector<f64>, ry: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let cp = self.cp;
        let hq = self.hsolve(q);
        let nd = cp.dense_rows.len();
        let nb = self.bmat.len();
        if nb == 0 {
            return (hq, DVector::zeros(0));
        }
        let mut rhs = DVector::zeros(nb);
        for a in 0..nb {
            rhs[a] = self.bmat[a].iter().map(|&(i, v)| v * hq[i]).sum::<f64>();
            if a >= nd {
                rhs[a] -= ry[a - nd];
            }
        }
        let l = self.schur.as_ref().expect("schur factor");
        let _ = l.solve_lower_triangular_mut(&mut rhs);
        let _ = l.tr_solve_lower_triangular_mut(&mut rhs);
        let mut dx = hq;
        for a in 0..nb {
            dx.axpy(-rhs[a], &self.y[a], 1.0);
        }
        let dy = DVector::from_iterator(nb - nd, rhs.iter().skip(nd).copied());
        (dx, dy)
    }

    /// Solves the full system
    /// `[0 A^T G^T; A 0 0; G 0 -W^T W] [dx; dy; dz] = [rx; ry; rz]`
    /// with `G = -L`, followed by iterative refinement.
    fn solve(
        &self,
        sc: &Scaling,
        rx: &DVector<f64>,
        ry: &DVector<f64>,
        rz: &CVec,
    ) -> (DVector<f64>, DVector<f64>, CVec) {
        let (mut dx, mut dy, mut dz) = self.solve_once(sc, rx, ry, rz);
        let norm0 = rx.norm() + ry.norm() + rz.norm();
        for _ in 0..3 {
            // residual of the full system
            let ex = rx - (self.cp.at_mul(&dy) - self.cp.lin_t(&dz));
            let ey = ry - self.cp.a_mul(&dx);
            let mut ez = rz.clone();
            let gdx = self.cp.lin(&dx);
            ez.axpy(1.0, &gdx);
            ez.axpy(1.0, &sc.apply_wtw(&dz));
            let err = ex.norm() + ey.norm() + ez.norm();
            if !(err > 1e-15 * norm0.max(1e-300)) {
                break;
            }
            let (cx, cy, cz) = self.solve_once(sc, &ex, &ey, &ez);
            dx += cx;
            dy += cy;
            dz.axpy(1.0, &cz);
        }
        (dx, dy, dz)
    }

    fn solve_once(
        &self,
        sc: &Scaling,
        rx: &DVector<f64>,
        ry: &DVector<f64>,
        rz: &CVec,
    ) -> (DVector<f64>, DVector<f64>, CVec) {
        if self.sep.is_some() {
            return self.solve_once_separable(rx, ry, rz);
        }
        let drz = sc.apply_wtw_inv(rz);
        let q = rx - self.cp.lin_t(&drz);
        let (dx, dy) = self.solve_reduced(&q, ry);
        // dz = -D (L dx + rz)
        let mut t = self.cp.lin(&dx);
        t.axpy(1.0, rz);
        let dz = sc.apply_wtw_inv(&t).scaled(-1.0);
        (dx, dy, dz)
    }
}

/// Adds a local symmetric matrix `f(i, j)` (over local slots) into the block storage.
fn scatter(chol: &mut BlockCholesky, groups: &[Group], f: impl Fn(usize, usize) -> f64) {
    for (ga, g1) in groups.iter().enumerate() {
        for g2 in &groups[ga..] {
            let view = chol.view(g1.block, g2.block);
            for &(si, li) in &g1.slots {
                for &(sj, lj) in &g2.slots {
                    view.add(chol, li, lj, f(si, sj));
                }
            }
        }
    }
}

/// `Tr(E_p R E_q R)` for symmetric unit entries `E_(a,b)`, `E_(r,c)`.
#[inline]
fn pair_term(rm: &DMatrix<f64>, a: usize, b: usize, r: usize, c: usize) -> f64 {
    let k1 = if a == b { 0.5 } else { 1.0 };
    let k2 = if r == c { 0.5 } else { 1.0 };
    2.0 * k1 * k2 * (rm[(b, r)] * rm[(c, a)] + rm[(b, c)] * rm[(r, a)])
}

fn basis_pair(rm: &DMatrix<f64>, b1: &[SymEntry], b2: &[SymEntry]) -> f64 {
    let mut acc = 0.0;
    for &(a, b, v) in b1 {
        for &(r, c, w) in b2 {
            acc += v * w * pair_term(rm, a, b, r, c);
        }
    }
    acc
}

/// Local Hessian `[Tr(F_i R F_j R)]` of a PSD cone over its local slots.
fn cone_hessian(cone: &PsdCone, rm: &DMatrix<f64>) -> DMatrix<f64> {
    let nl = cone.local_vars.len();
    let mut hc = DMatrix::zeros(nl, nl);
    // layout-by-layout kernels
    let nlay = cone.layouts.len();
    let mut kern: Vec<Vec<Option<DMatrix<f64>>>> = vec![vec![None; nlay]; nlay];
    for la in 0..nlay {
        for lb in la..nlay {
            let ba = &cone.layouts[la].1;
            let bb = &cone.layouts[lb].1;
            let mut k = DMatrix::zeros(ba.len(), bb.len());
            for i in 0..ba.len() {
                let j0 = if la == lb { i } else { 0 };
                for j in j0..bb.len() {
                    let v = basis_pair(rm, &ba[i], &bb[j]);
                    k[(i, j)] = v;
                    if la == lb {
                        k[(j, i)] = v;
                    }
                }
            }
            kern[la][lb] = Some(k);
        }
    }
    for (ti, t) in cone.terms.iter().enumerate() {
        for (ui, u) in cone.terms.iter().enumerate() {
            let (la, lb) = (t.layout, u.layout);
            let coef = t.coef * u.coef;
            let s0 = cone.term_slots[ti];
            let s1 = cone.term_slots[ui];
            if la <= lb {
                let k = kern[la][lb].as_ref().expect("kernel");
                for i in 0..k.nrows() {
                    for j in 0..k.ncols() {
                        hc[(s0 + i, s1 + j)] += coef * k[(i, j)];
                    }
                }
            } else {
                let k = kern[lb][la].as_ref().expect("kernel");
                for i in 0..k.ncols() {
                    for j in 0..k.nrows() {
                        hc[(s0 + i, s1 + j)] += coef * k[(j, i)];
                    }
                }
            }
        }
    }
    for (vi, (_, fe)) in cone.scalars.iter().enumerate() {
        let sv = cone.scalar_slots[vi];
        for (ti, t) in cone.terms.iter().enumerate() {
            let basis = &cone.layouts[t.layout].1;
            let s0 = cone.term_slots[ti];
            for (k, b) in basis.iter().enumerate() {
                let v = t.coef * basis_pair(rm, fe, b);
                hc[(sv, s0 + k)] += v;
                hc[(s0 + k, sv)] += v;
            }
        }
        for (wi, (_, ge)) in cone.scalars.iter().enumerate() {
            let sw = cone.scalar_slots[wi];
            hc[(sv, sw)] += basis_pair(rm, fe, ge);
        }
    }
    hc
}

#[derive(Clone)]
struct Iterate {
    x: DVector<f64>,
    y: DVector<f64>,
    s: CVec,
    z: CVec,
    tau: f64,
    kappa: f64,
}

type Metrics = (f64, f64, f64, Option<f64>);

/// Runs the interior-point method.
pub(crate) fn solve(problem: &ConicProblem, settings: &SolverSettings) -> ConicSolution {
    let cp = compile(problem);
    let n = cp.n;
    let b = cp.b();
    let h = cp.h();
    let c = cp.c.clone();
    let nu = cp.degree();
    let feastol = settings.tol;
    let reltol = settings.tol;
    let abstol = settings.tol * 1e-2;
    let resx0 = c.norm().max(1.0);
    let resy0 = b.norm().max(1.0);
    let resz0 = h.norm().max(1.0);
    let mut storage = BlockCholesky::new(cp.pattern.clone());

    let failure = |iters: usize, msg: &str, it: Option<&Iterate>| {
        let mut sol = ConicSolution::empty(Status::NumericalFailure, n, iters);
        sol.message = msg.to_string();
        if let Some(it) = it {
            fill_solution(&mut sol, &cp, problem, it);
        }
        sol
    };

    // On a stall, the best iterate seen is accepted if it meets the reduced
    // tolerance.
    let give_up = |iters: usize, msg: &str, it: &Iterate, m: Metrics, best: &Option<(f64, Iterate, Metrics)>| {
        if let Some((merit, b, bm)) = best {
            if *merit <= settings.reduced_tol {
                let mut sol = ConicSolution::empty(Status::Optimal, n, iters);
                sol.message = format!("reduced accuracy after {msg}");
                fill_solution(&mut sol, &cp, problem, b);
                return sol.with_metrics(bm.0, bm.1, bm.2, bm.3);
            }
        }
        failure(iters, msg, Some(it)).with_metrics(m.0, m.1, m.2, m.3)
    };
    let mut best: Option<(f64, Iterate, Metrics)> = None;

    // starting point
    let ident = Scaling::identity(&cp);
    let Some(kkt) = Kkt::factor(&cp, &ident, storage, settings.regularization) else {
        return failure(0, "initial factorization failed", None);
    };
    let zero_x = DVector::zeros(n);
    let zero_y = DVector::zeros(cp.eq.len());
    let zero_z = CVec::zeros(&cp);
    let (x0, _, zp) = kkt.solve(&ident, &zero_x, &b, &h);
    let (_, y0, zd) = kkt.solve(&ident, &(-&c), &zero_y, &zero_z);
    storage = kkt.into_storage();
    let mut s = zp.scaled(-1.0);
    let mut z = zd;
    let e = CVec::identity(&cp);
    let ts = max_violation(&s);
    if ts >= -1e-8 * s.norm().max(1.0) {
        s.axpy(1.0 + ts, &e);
    }
    let tz = max_violation(&z);
    if tz >= -1e-8 * z.norm().max(1.0) {
        z.axpy(1.0 + tz, &e);
    }
    let mut it = Iterate {
        x: x0,
        y: y0,
        s,
        z,
        tau: 1.0,
        kappa: 1.0,
    };

    let mut last = None;
    for iter in 0..=settings.max_iter {
        // residuals
        let atyx = cp.at_mul(&it.y) - cp.lin_t(&it.z);
        let rx = &atyx + &c * it.tau;
        let ax = cp.a_mul(&it.x);
        let ry = &ax - &b * it.tau;
        let lx = cp.lin(&it.x);
        let mut rz = it.s.clone();
        rz.axpy(-1.0, &lx);
        rz.axpy(-it.tau, &h);
        let cx = c.dot(&it.x);
        let by = b.dot(&it.y);
        let hz = h.dot(&it.z);
        let rt = it.kappa + cx + by + hz;

        let pcost = cx / it.tau;
        let dcost = -(by + hz) / it.tau;
        let gap = it.s.dot(&it.z) / (it.tau * it.tau);
        let pres = (ry.norm() / resy0).max(rz.norm() / resz0) / it.tau;
        let dres = rx.norm() / resx0 / it.tau;
        let relgap = if pcost < 0.0 {
            Some(gap / -pcost)
        } else if dcost > 0.0 {
            Some(gap / dcost)
        } else {
            None
        };
        let hresx = atyx.norm();
        let hresy = ax.norm();
        let mut gxs = lx.scaled(-1.0);
        gxs.axpy(1.0, &it.s);
        let hresz = gxs.norm();
        let pinfres = if hz + by < 0.0 {
            Some(hresx / resx0 / (-hz - by))
        } else {
            None
        };
        let dinfres = if cx < 0.0 {
            Some((hresy / resy0).max(hresz / resz0) / -cx)
        } else {
            None
        };
        last = Some((pres, dres, gap, relgap));
        let merit = pres.max(dres).max(relgap.unwrap_or(f64::INFINITY).min(gap / abstol * reltol));
        if merit.is_finite() && best.as_ref().is_none_or(|b| merit < b.0) {
            best = Some((merit, it.clone(), (pres, dres, gap, relgap)));
        }
        if settings.verbose {
            eprintln!(
                "{iter:3} pcost {pcost:+.9e} dcost {dcost:+.9e} gap {gap:.2e} pres {pres:.2e} dres {dres:.2e} tau {:.2e} kappa {:.2e}",
                it.tau, it.kappa
            );
        }

        if pres <= feastol && dres <= feastol && (gap <= abstol || relgap.is_some_and(|r| r <= reltol)) {
            let mut sol = ConicSolution::empty(Status::Optimal, n, iter);
            fill_solution(&mut sol, &cp, problem, &it);
            return sol.with_metrics(pres, dres, gap, relgap);
        }
        if pinfres.is_some_and(|r| r <= feastol) {
            let mut sol = ConicSolution::empty(Status::Infeasible, n, iter);
            sol.message = "dual ray certifies primal infeasibility".into();
            return sol.with_metrics(pres, dres, gap, relgap);
        }
        if dinfres.is_some_and(|r| r <= feastol) {
            let mut sol = ConicSolution::empty(Status::Unbounded, n, iter);
            sol.message = "primal ray certifies dual infeasibility".into();
            return sol.with_metrics(pres, dres, gap, relgap);
        }
        if iter == settings.max_iter {
            break;
        }

        let Some(sc) = Scaling::compute(&it.s, &it.z) else {
            return give_up(iter, "scaling failed", &it, (pres, dres, gap, relgap), &best);
        };
        let mu = (it.s.dot(&it.z) + it.tau * it.kappa) / (nu + 1.0);
        let Some(kkt) = Kkt::factor(&cp, &sc, storage, settings.regularization) else {
            return give_up(iter, "factorization failed", &it, (pres, dres, gap, relgap), &best);
        };
        let (x1, y1, z1) = kkt.solve(&sc, &(-&c), &b, &h);
        let denom1 = c.dot(&x1) + b.dot(&y1) + h.dot(&z1) - it.kappa / it.tau;

        let lsq = sc.lambda_sq();
        // returns (dx, dy, dz, ds, dtau, dkappa)
        let direction = |eta: f64, ds_target: &CVec, dk_target: f64| {
            let dx_rhs = &rx * -eta;
            let dy_rhs = &ry * -eta;
            let dz_base = rz.scaled(-eta);
            let dt_rhs = -eta * rt;
            let ldiv = sc.lambda_div(ds_target);
            let mut rz2 = dz_base;
            rz2.axpy(-1.0, &sc.apply_w_t(&ldiv));
            let (x2, y2, z2) = kkt.solve(&sc, &dx_rhs, &dy_rhs, &rz2);
            let num = dt_rhs - dk_target / it.tau - c.dot(&x2) - b.dot(&y2) - h.dot(&z2);
            let dtau = num / denom1;
            let dx = &x2 + &x1 * dtau;
            let dy = &y2 + &y1 * dtau;
            let mut dz = z2;
            dz.axpy(dtau, &z1);
            // ds = W^T (lambda \ d_s - W dz)
            let mut inner = ldiv;
            inner.axpy(-1.0, &sc.apply_w(&dz));
            let ds = sc.apply_w_t(&inner);
            let dkappa = (dk_target - it.kappa * dtau) / it.tau;
            (dx, dy, dz, ds, dtau, dkappa)
        };
        let step_to_boundary = |dz: &CVec, ds: &CVec, dtau: f64, dkappa: f64| {
            let mut a = sc.max_step(&sc.apply_w_inv_t(ds)).min(sc.max_step(&sc.apply_w(dz)));
            if dtau < 0.0 {
                a = a.min(-it.tau / dtau);
            }
            if dkappa < 0.0 {
                a = a.min(-it.kappa / dkappa);
            }
            a
        };

        // predictor
        let ds_aff = lsq.scaled(-1.0);
        let dk_aff = -it.kappa * it.tau;
        let (_, _, dz_a, ds_a, dtau_a, dkappa_a) = direction(1.0, &ds_aff, dk_aff);
        let alpha_a = step_to_boundary(&dz_a, &ds_a, dtau_a, dkappa_a).min(1.0);
        let sigma = (1.0 - alpha_a).powi(3);

        // corrector
        let mut ds_c = lsq.scaled(-1.0);
        let corr = jordan(&sc.apply_w_inv_t(&ds_a), &sc.apply_w(&dz_a));
        ds_c.axpy(-1.0, &corr);
        let sm = CVec::identity(&cp).scaled(sigma * mu);
        ds_c.axpy(1.0, &sm);
        let dk_c = -it.kappa * it.tau - dkappa_a * dtau_a + sigma * mu;
        let (dx, dy, dz, ds, dtau, dkappa) = direction(1.0 - sigma, &ds_c, dk_c);
        let amax = step_to_boundary(&dz, &ds, dtau, dkappa);
        let alpha = (settings.step_fraction * amax).min(1.0);
        storage = kkt.into_storage();

        if !(alpha > 0.0) || !dx.iter().all(|v| v.is_finite()) || !ds.is_finite() || !dz.is_finite() {
            return give_up(iter, "invalid search direction", &it, (pres, dres, gap, relgap), &best);
        }
        it.x.axpy(alpha, &dx, 1.0);
        it.y.axpy(alpha, &dy, 1.0);
        it.s.axpy(alpha, &ds);
        it.z.axpy(alpha, &dz);
        it.tau += alpha * dtau;
        it.kappa += alpha * dkappa;
        symmetrize(&mut it.s);
        symmetrize(&mut it.z);
        project_structured(&cp, &mut it.s);
        project_structured(&cp, &mut it.z);
        if alpha < 1e-10 {
            return give_up(iter + 1, "step size collapsed", &it, (pres, dres, gap, relgap), &best);
        }
    }
    let (pres, dres, gap, relgap) = last.unwrap_or((f64::NAN, f64::NAN, f64::NAN, None));
    give_up(settings.max_iter, "iteration limit reached", &it, (pres, dres, gap, relgap), &best)
}

/// Projects the own-cone blocks of a separable problem onto the image of
/// their coordinate maps (removes drift out of the complex embedding).
fn project_structured(cp: &Compiled, v: &mut CVec) {
    let Some(sep) = &cp.separable else {
        return;
    };
    for blk in &sep.blocks {
        if let SepBlock::Matrix { cone, ginv } = blk {
            let c = &cp.psd[*cone];
            let basis = &c.layouts[c.terms[0].layout].1;
            let m = &v.psd[*cone];
            let coords: Vec<f64> = basis.iter().enumerate().map(|(k, e)| ginv[k] * sym_dot(e, m)).collect();
            let mut out = DMatrix::zeros(c.dim, c.dim);
            for (k, e) in basis.iter().enumerate() {
                for &(r, cc, w) in e {
                    out[(r, cc)] += coords[k] * w;
                    if r != cc {
                        out[(cc, r)] += coords[k] * w;
                    }
                }
            }
            v.psd[*cone] = out;
        }
    }
}

fn symmetrize(v: &mut CVec) {
    for m in &mut v.psd {
        let t = m.transpose();
        *m += t;
        *m *= 0.5;
    }
}

fn fill_solution(sol: &mut ConicSolution, cp: &Compiled, problem: &ConicProblem, it: &Iterate) {
    let x = &it.x / it.tau;
    sol.objective = problem.objective_value(x.as_slice());
    let b = cp.b();
    let h = cp.h();
    sol.dual_objective =
        problem.objective_constant - (b.dot(&it.y) + h.dot(&it.z)) / it.tau;
    sol.x = x.as_slice().to_vec();
    sol.row_duals = cp
        .row_map
        .iter()
        .map(|&(is_eq, k, sign)| {
            if is_eq {
                it.y[k] / it.tau
            } else {
                sign * it.z.lp[k] / it.tau
            }
        })
        .collect();
    let nblock_psd = cp.psd.len() - problem.lmis.len();
    sol.lmi_duals = it.z.psd[nblock_psd..].iter().map(|m| m / it.tau).collect();
    let _ = (&cp.var_block, &cp.block_offset);
}
