//! Continuous relaxation of the joint mode-selection and beamforming
//! problem.
//!
//! With `b_a` the mode-selection binaries of the free (tile, mode) pairs,
//! the effective channel of a receiver is `h = c + sum_a b_a h_a`, where
//! `c` collects the direct link and every tile whose mode is already
//! decided. Its quadratic form expands into monomials of degree 0, 1
//! and 2 in `b`. On binary points `b_a^2 = b_a` and two modes of the same
//! tile are never both selected, so the surviving monomials are `1`,
//! `b_a` and `b_a b_b` for `a`, `b` on different tiles. Each monomial `m`
//! gets a lifted copy `X_m = m X` of every covariance `X`, linked by the
//! big-M matrix inequalities
//!
//! `X_m <= m Pmax I`, `X_m >= X - (1 - m) Pmax I`, `X_m <= X`, `X_m >= 0`,
//!
//! and the products `beta_ab = b_a b_b` obey the McCormick envelope. The
//! quadratic-form rows become linear in the lifted matrices and the
//! problem is a semidefinite program whose optimum bounds the mixed
//! binary problem from below.

use num_complex::Complex64;
use swipt_conic::{solve_conic, ConicProblem, Lmi, MatrixVar, Sense, SolverSettings, Status};

use crate::channel::{CVector, ChannelSet};
use crate::config::ScenarioConfig;
use crate::problem::{add_balanced_row, power_unit, principal_component, CMatrix, ModeAssignment};
use crate::CoreError;

/// Partial assignment of the binaries `b[s][t]` over physical tiles
/// `t = 0..T` (the direct link is implicit and always on).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fixings {
    num_modes: usize,
    num_tiles: usize,
    values: Vec<Option<bool>>,
}

impl Fixings {
    pub fn new(num_modes: usize, num_tiles: usize) -> Self {
        Self {
            num_modes,
            num_tiles,
            values: vec![None; num_modes * num_tiles],
        }
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn num_tiles(&self) -> usize {
        self.num_tiles
    }

    pub fn get(&self, s: usize, t: usize) -> Option<bool> {
        self.values[t * self.num_modes + s]
    }

    /// Fixes `b[s][t]`, failing if it is already fixed to the other value.
    pub fn set(&mut self, s: usize, t: usize, v: bool) -> Result<(), CoreError> {
        if s >= self.num_modes || t >= self.num_tiles {
            return Err(CoreError::InconsistentFixings(format!("({s}, {t}) out of range")));
        }
        let slot = &mut self.values[t * self.num_modes + s];
        match *slot {
            Some(old) if old != v => Err(CoreError::InconsistentFixings(format!(
                "b[{s}][{t}] already fixed to {}",
                old as u8
            ))),
            _ => {
                *slot = Some(v);
                Ok(())
            }
        }
    }

    /// Returns a copy with `b[s][t] = v` and its one-mode-per-tile
    /// consequences, or `None` when that empties a tile.
    pub fn with(&self, s: usize, t: usize, v: bool) -> Result<Option<Fixings>, CoreError> {
        let mut out = self.clone();
        out.set(s, t, v)?;
        Ok(out.propagate())
    }

    /// Applies the one-mode-per-tile rule: a tile with a mode fixed to 1
    /// has all other modes fixed to 0, and a tile with one free mode left
    /// and all others at 0 gets that mode fixed to 1. Returns `None` if a
    /// tile can no longer select exactly one mode.
    pub fn propagate(&self) -> Option<Fixings> {
        let mut out = self.clone();
        for t in 0..self.num_tiles {
            let col = |f: &Fixings, s: usize| f.get(s, t);
            let ones: Vec<usize> = (0..self.num_modes).filter(|&s| col(&out, s) == Some(true)).collect();
            match ones.len() {
                0 => {
                    let free: Vec<usize> = (0..self.num_modes).filter(|&s| col(&out, s).is_none()).collect();
                    match free.len() {
                        0 => return None,
                        1 => out.values[t * self.num_modes + free[0]] = Some(true),
                        _ => {}
                    }
                }
                1 => {
                    for s in 0..self.num_modes {
                        out.values[t * self.num_modes + s] = Some(s == ones[0]);
                    }
                }
                _ => return None,
            }
        }
        Some(out)
    }

    /// Free entries `(s, t)`, tile-major.
    pub fn free(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for t in 0..self.num_tiles {
            for s in 0..self.num_modes {
                if self.get(s, t).is_none() {
                    out.push((s, t));
                }
            }
        }
        out
    }

    /// The mode fixed to 1 on tile `t`, if any.
    pub fn decided(&self, t: usize) -> Option<usize> {
        (0..self.num_modes).find(|&s| self.get(s, t) == Some(true))
    }

    /// The complete assignment, when every tile is decided.
    pub fn assignment(&self) -> Option<ModeAssignment> {
        (0..self.num_tiles)
            .map(|t| self.decided(t))
            .collect::<Option<Vec<_>>>()
            .map(ModeAssignment::new)
    }

    /// Fixings that pin down `assign` completely.
    pub fn from_assignment(num_modes: usize, assign: &ModeAssignment) -> Self {
        let mut f = Self::new(num_modes, assign.modes.len());
        for (t, &s) in assign.modes.iter().enumerate() {
            for p in 0..num_modes {
                f.values[t * num_modes + p] = Some(p == s);
            }
        }
        f
    }
}

/// Variable and cone counts of an assembled relaxation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Census {
    /// Hermitian PSD matrix variables (base and lifted).
    pub psd_blocks: usize,
    /// Free (unfixed) mode binaries.
    pub free_b: usize,
    /// Product variables `beta`.
    pub beta: usize,
    /// Big-M matrix inequalities (excluding the PSD cones of the blocks).
    pub lmis: usize,
}

impl Census {
    /// Counts for the unreduced lifting over all `n = S (T + 1)` tuples
    /// `(s, t)` including the direct link, with one `beta` and one lifted
    /// copy of each covariance per unordered tuple pair.
    pub fn nominal(num_irs: usize, num_modes: usize, num_tiles: usize) -> Census {
        let n = num_modes * (num_tiles + 1);
        let pairs = n * (n + 1) / 2;
        Census {
            psd_blocks: (num_irs + 1) + (num_irs + 1) * pairs,
            free_b: num_modes * num_tiles,
            beta: pairs,
            lmis: 3 * (num_irs + 1) * pairs,
        }
    }
}

/// A monomial in the free binaries: empty, `b_a`, or `b_a b_b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Mono {
    One,
    Single(usize),
    Pair(usize, usize),
}

/// Monomials that survive on binary points for the given free entries.
fn monomials(free: &[(usize, usize)]) -> Vec<Mono> {
    let mut out = vec![Mono::One];
    out.extend((0..free.len()).map(Mono::Single));
    for a in 0..free.len() {
        for b in (a + 1)..free.len() {
            if free[a].1 != free[b].1 {
                out.push(Mono::Pair(a, b));
            }
        }
    }
    out
}

/// Counts of the relaxation for `fixings` without building it.
pub fn census(num_irs: usize, fixings: &Fixings) -> Result<Census, CoreError> {
    let fx = fixings
        .propagate()
        .ok_or_else(|| CoreError::InconsistentFixings("a tile has no selectable mode".into()))?;
    let free = fx.free();
    let monos = monomials(&free);
    let lifted = monos.len() - 1;
    let families = num_irs + 1;
    Ok(Census {
        psd_blocks: families * monos.len(),
        free_b: free.len(),
        beta: monos.iter().filter(|m| matches!(m, Mono::Pair(..))).count(),
        lmis: 3 * families * lifted,
    })
}

/// Relaxed solution.
#[derive(Debug, Clone)]
pub struct RelaxedSolution {
    /// `b[t][s]` including fixed entries.
    pub b_tilde: Vec<Vec<f64>>,
    /// Products over pairs of free entries on different tiles:
    /// `((s, t), (p, q), value)`.
    pub beta_tilde: Vec<((usize, usize), (usize, usize), f64)>,
    pub w: Vec<CMatrix>,
    pub v: CMatrix,
    /// Lifted covariances per monomial of degree one or two: the
    /// monomial's entries and one matrix per `W_k`, then `V`.
    pub lifted: Vec<(Vec<(usize, usize)>, Vec<CMatrix>)>,
    /// `sum Tr W_k + Tr V`, milliwatts.
    pub objective_mw: f64,
    /// Objective including the linear penalty term, milliwatts.
    pub penalized_mw: f64,
    /// Smaller of the primal and dual objectives of the (penalized)
    /// problem, milliwatts; a lower bound up to the solver residuals.
    pub bound_mw: f64,
    pub rank_ratios: Vec<f64>,
    pub iterations: usize,
}

/// Outcome of a relaxation solve.
#[derive(Debug, Clone)]
pub enum RelaxOutcome {
    Optimal(RelaxedSolution),
    Infeasible,
}

/// An assembled relaxation with its variable handles.
#[derive(Debug, Clone)]
pub struct RelaxedProblem {
    pub problem: ConicProblem,
    /// Power unit of the scaled problem, milliwatts.
    pub rho: f64,
    pub fixings: Fixings,
    free: Vec<(usize, usize)>,
    b_vars: Vec<usize>,
    beta_vars: Vec<(usize, usize, usize)>,
    monos: Vec<Mono>,
    /// `families[x][m]`: covariance `x` (W_0.., V) lifted by monomial `m`.
    families: Vec<Vec<MatrixVar>>,
    penalty_mw: Vec<f64>,
}

impl RelaxedProblem {
    pub fn census(&self) -> Census {
        Census {
            psd_blocks: self.families.iter().map(|f| f.len()).sum(),
            free_b: self.b_vars.len(),
            beta: self.beta_vars.len(),
            lmis: self.problem.lmis().len(),
        }
    }
}

/// Estimated largest gain over assignments at receiver `rx`.
fn best_gain(ch: &ChannelSet, rx: usize) -> f64 {
    let mut amp = ch.direct(rx).norm();
    for t in 1..=ch.num_tiles {
        amp += (0..ch.num_modes()).map(|s| ch.get_rx(rx, s, t).norm()).fold(0.0, f64::max);
    }
    amp * amp
}

/// Optional ingredients of a relaxation.
#[derive(Debug, Clone, Copy, Default)]
pub struct RelaxOptions<'a> {
    /// Adds `sum penalty[t][s] * b[t][s]` (milliwatts) over the free
    /// entries to the objective.
    pub penalty_mw: Option<&'a [Vec<f64>]>,
    /// Power budget (milliwatts) used both in the budget row and as the
    /// big-M constant; capped at the configured maximum. A known feasible
    /// power is a valid choice when only better solutions matter.
    pub budget_mw: Option<f64>,
    /// RF power each ER must receive, milliwatts; `None` inverts the
    /// non-linear harvesting curve at `minHarvestUw`.
    pub rf_required_mw: Option<f64>,
}

impl RelaxOptions<'_> {
    fn rf_required(&self, cfg: &ScenarioConfig) -> Result<f64, CoreError> {
        match self.rf_required_mw {
            Some(p) => Ok(p),
            None => cfg.required_rf_mw(),
        }
    }
}

/// Builds the relaxation under `fixings`.
pub fn assemble_relaxed_sdp(
    ch: &ChannelSet,
    fixings: &Fixings,
    cfg: &ScenarioConfig,
    opts: &RelaxOptions,
) -> Result<RelaxedProblem, CoreError> {
    let rf_req = opts.rf_required(cfg)?;
    let req: Vec<(f64, f64)> = (0..ch.num_receivers())
        .map(|rx| {
            let rhs = if rx < ch.num_irs { cfg.gamma() * cfg.noise_ir_mw() } else { rf_req };
            (rhs, best_gain(ch, rx))
        })
        .collect();
    assemble_scaled(ch, fixings, cfg, opts, power_unit(&req))
}

fn assemble_scaled(
    ch: &ChannelSet,
    fixings: &Fixings,
    cfg: &ScenarioConfig,
    opts: &RelaxOptions,
    rho: f64,
) -> Result<RelaxedProblem, CoreError> {
    let penalty_mw = opts.penalty_mw;
    if fixings.num_modes() != ch.num_modes() || fixings.num_tiles() != ch.num_tiles {
        return Err(CoreError::DimensionMismatch(format!(
            "fixings are {}x{}, channels have {} modes and {} tiles",
            fixings.num_modes(),
            fixings.num_tiles(),
            ch.num_modes(),
            ch.num_tiles
        )));
    }
    let fx = fixings
        .propagate()
        .ok_or_else(|| CoreError::InconsistentFixings("a tile has no selectable mode".into()))?;
    let n = ch.num_antennas;
    let k_count = ch.num_irs;
    let free = fx.free();
    let monos = monomials(&free);
    let pmax = opts.budget_mw.unwrap_or(f64::INFINITY).min(cfg.max_power_mw()) / rho;

    let mut p = ConicProblem::new();
    let families: Vec<Vec<MatrixVar>> = (0..=k_count)
        .map(|_| monos.iter().map(|_| p.add_hermitian_psd(n)).collect())
        .collect();
    let b_vars: Vec<usize> = free.iter().map(|_| p.add_nonneg(1)).collect();
    let mut beta_vars = Vec::new();
    // multiplier variable of each monomial (None for the constant one)
    let mult: Vec<Option<usize>> = monos
        .iter()
        .map(|m| match *m {
            Mono::One => None,
            Mono::Single(a) => Some(b_vars[a]),
            Mono::Pair(a, b) => {
                let v = p.add_nonneg(1);
                beta_vars.push((a, b, v));
                Some(v)
            }
        })
        .collect();

    // objective: total transmit power of the base covariances
    let mut obj: Vec<(usize, f64)> = families.iter().flat_map(|f| f[0].trace()).collect();
    if let Some(pen) = penalty_mw {
        for (a, &(s, t)) in free.iter().enumerate() {
            obj.push((b_vars[a], pen[t][s] / rho));
        }
    }
    p.add_objective(&obj);

    // quadratic-form terms per receiver and monomial: sum c Re(u^H X v)
    let terms = |rx: usize| -> Vec<Vec<(CVector, CVector, f64)>> {
        let mut c = ch.direct(rx).clone();
        for t in 0..ch.num_tiles {
            if let Some(s) = fx.decided(t) {
                c += ch.get_rx(rx, s, t + 1);
            }
        }
        let h = |a: usize| ch.get_rx(rx, free[a].0, free[a].1 + 1).clone();
        monos
            .iter()
            .map(|m| match *m {
                Mono::One => vec![(c.clone(), c.clone(), 1.0)],
                Mono::Single(a) => {
                    let ha = h(a);
                    vec![(&c * Complex64::new(2.0, 0.0) + &ha, ha, 1.0)]
                }
                Mono::Pair(a, b) => vec![(h(a), h(b), 2.0)],
            })
            .collect()
    };
    let form = |x: usize, t: &[Vec<(CVector, CVector, f64)>], weight: f64| -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for (m, list) in t.iter().enumerate() {
            for (u, v, c) in list {
                out.extend(
                    families[x][m]
                        .bilinear(u.as_slice(), v.as_slice())
                        .into_iter()
                        .map(|(i, a)| (i, a * c * weight)),
                );
            }
        }
        out
    };

    let gamma = cfg.gamma();
    let noise = cfg.noise_ir_mw();
    for k in 0..k_count {
        let t = terms(k);
        let scale = rho / noise;
        let mut row = form(k, &t, scale / gamma);
        for r in (0..k_count).filter(|&r| r != k) {
            row.extend(form(r, &t, -scale));
        }
        if !cfg.cancel_energy_interference {
            row.extend(form(k_count, &t, -scale));
        }
        add_balanced_row(&mut p, row, Sense::Ge, 1.0);
    }
    let rf_req = opts.rf_required(cfg)?;
    if rf_req > 0.0 {
        for j in 0..ch.num_ers {
            let t = terms(k_count + j);
            let scale = rho / rf_req;
            let row: Vec<(usize, f64)> = (0..=k_count).flat_map(|x| form(x, &t, scale)).collect();
            add_balanced_row(&mut p, row, Sense::Ge, 1.0);
        }
    }
    let budget: Vec<(usize, f64)> = families
        .iter()
        .flat_map(|f| f[0].trace())
        .map(|(i, a)| (i, a / pmax))
        .collect();
    p.add_row(budget, Sense::Le, 1.0);

    // one mode per undecided tile
    for t in 0..ch.num_tiles {
        let row: Vec<(usize, f64)> = free
            .iter()
            .enumerate()
            .filter(|(_, e)| e.1 == t)
            .map(|(a, _)| (b_vars[a], 1.0))
            .collect();
        if !row.is_empty() {
            p.add_row(row, Sense::Eq, 1.0);
        }
    }
    // McCormick envelope; beta >= 0 is the variable's cone, and beta <= 1,
    // b <= 1 follow from the rows below and the tile equalities
    for &(a, b, v) in &beta_vars {
        p.add_row(vec![(v, 1.0), (b_vars[a], -1.0)], Sense::Le, 0.0);
        p.add_row(vec![(v, 1.0), (b_vars[b], -1.0)], Sense::Le, 0.0);
        p.add_row(vec![(v, 1.0), (b_vars[a], -1.0), (b_vars[b], -1.0)], Sense::Ge, -1.0);
    }
    if cfg.relaxation_cuts {
        add_tile_sum_cuts(&mut p, &free, &monos, &families, &b_vars, &beta_vars);
    }
    // big-M links between each lifted copy and its base covariance
    for fam in &families {
        let base = &fam[0];
        for (m, lifted) in fam.iter().enumerate().skip(1) {
            let mu = mult[m].expect("lifted monomials have a multiplier");
            let dim = 2 * n;
            p.add_lmi(Lmi::new(dim).scalar_identity(mu, pmax).matrix(lifted, -1.0));
            p.add_lmi(
                Lmi::new(dim)
                    .matrix(lifted, 1.0)
                    .matrix(base, -1.0)
                    .constant_identity(pmax)
                    .scalar_identity(mu, -pmax),
            );
            p.add_lmi(Lmi::new(dim).matrix(base, 1.0).matrix(lifted, -1.0));
        }
    }

    let mut penalty = vec![0.0; free.len()];
    if let Some(pen) = penalty_mw {
        for (a, &(s, t)) in free.iter().enumerate() {
            penalty[a] = pen[t][s];
        }
    }
    Ok(RelaxedProblem {
        problem: p,
        rho,
        fixings: fx,
        free,
        b_vars,
        beta_vars,
        monos,
        families,
        penalty_mw: penalty,
    })
}

/// Rows implied by `sum_p b_{p,q} = 1` on every undecided tile `q`:
/// multiplying by `b_a` (another tile) gives `sum_p beta_{a,(p,q)} = b_a`,
/// and by each covariance gives the same sums over lifted copies. For each
/// tile pair one row sum follows from the others and is left out.
fn add_tile_sum_cuts(
    p: &mut ConicProblem,
    free: &[(usize, usize)],
    monos: &[Mono],
    families: &[Vec<MatrixVar>],
    b_vars: &[usize],
    beta_vars: &[(usize, usize, usize)],
) {
    let on = |q: usize| -> Vec<usize> { (0..free.len()).filter(|&b| free[b].1 == q).collect() };
    let mut tiles: Vec<usize> = free.iter().map(|e| e.1).collect();
    tiles.dedup();
    let ordered = |a: usize, b: usize| Mono::Pair(a.min(b), a.max(b));
    let mono_index = |m: Mono| monos.iter().position(|x| *x == m).expect("pair monomial");
    let beta = |a: usize, b: usize| {
        let (x, y) = (a.min(b), a.max(b));
        beta_vars.iter().find(|e| e.0 == x && e.1 == y).expect("pair variable").2
    };
    let mut sums = Vec::new();
    for (i, &t) in tiles.iter().enumerate() {
        for &q in &tiles[i + 1..] {
            sums.extend(on(t).into_iter().map(|a| (a, q)));
            let back = on(q);
            sums.extend(back[..back.len() - 1].iter().map(|&b| (b, t)));
        }
    }
    for &(a, q) in &sums {
        let mut row: Vec<(usize, f64)> = on(q).into_iter().map(|b| (beta(a, b), 1.0)).collect();
        row.push((b_vars[a], -1.0));
        p.add_row(row, Sense::Eq, 0.0);
    }
    for fam in families {
        let mut tie = |parts: Vec<usize>, whole: usize| {
            for c in 0..fam[0].layout.num_coords() {
                let mut row: Vec<(usize, f64)> = parts.iter().map(|&m| (fam[m].var(c), 1.0)).collect();
                row.push((fam[whole].var(c), -1.0));
                p.add_row(row, Sense::Eq, 0.0);
            }
        };
        for &q in &tiles {
            tie(on(q).into_iter().map(|b| mono_index(Mono::Single(b))).collect(), 0);
        }
        for &(a, q) in &sums {
            tie(
                on(q).into_iter().map(|b| mono_index(ordered(a, b))).collect(),
                mono_index(Mono::Single(a)),
            );
        }
    }
}

/// Accuracy accepted from a relaxation whose solve stalls before the
/// configured tolerance (big-M programs are poorly conditioned).
pub const RELAX_REDUCED_TOL: f64 = 1e-4;

/// Assembles and solves the relaxation. A numerical failure is retried
/// once with a tenfold larger power unit before it is reported.
pub fn solve_relaxed(
    ch: &ChannelSet,
    fixings: &Fixings,
    cfg: &ScenarioConfig,
    opts: &RelaxOptions,
) -> Result<RelaxOutcome, CoreError> {
    let first = assemble_relaxed_sdp(ch, fixings, cfg, opts)?;
    let rho0 = first.rho;
    let mut last = String::new();
    for (attempt, rp) in [Some(first), None].into_iter().enumerate() {
        let rp = match rp {
            Some(rp) => rp,
            None => assemble_scaled(ch, fixings, cfg, opts, rho0 * 10f64.powi(attempt as i32))?,
        };
        let settings = SolverSettings {
            reduced_tol: RELAX_REDUCED_TOL,
            ..SolverSettings::with_tol(cfg.solver_tol)
        };
        let sol = solve_conic(&rp.problem, &settings)?;
        match sol.status {
            Status::Optimal => return Ok(RelaxOutcome::Optimal(extract(&rp, &sol, ch))),
            Status::Infeasible => return Ok(RelaxOutcome::Infeasible),
            Status::Unbounded => return Err(CoreError::Solver("relaxation reported unbounded".into())),
            Status::NumericalFailure => last = sol.message,
        }
    }
    Err(CoreError::Solver(last))
}

fn extract(rp: &RelaxedProblem, sol: &swipt_conic::ConicSolution, ch: &ChannelSet) -> RelaxedSolution {
    let rho = Complex64::new(rp.rho, 0.0);
    let k_count = ch.num_irs;
    let fx = &rp.fixings;
    let mut b_tilde: Vec<Vec<f64>> = (0..ch.num_tiles)
        .map(|t| {
            (0..ch.num_modes())
                .map(|s| fx.get(s, t).map(|v| v as u8 as f64).unwrap_or(0.0))
                .collect()
        })
        .collect();
    for (a, &(s, t)) in rp.free.iter().enumerate() {
        b_tilde[t][s] = sol.value(rp.b_vars[a]).clamp(0.0, 1.0);
    }
    let beta_tilde = rp
        .beta_vars
        .iter()
        .map(|&(a, b, v)| (rp.free[a], rp.free[b], sol.value(v).clamp(0.0, 1.0)))
        .collect();
    let w: Vec<CMatrix> = (0..k_count).map(|k| sol.matrix(&rp.families[k][0]) * rho).collect();
    let v = sol.matrix(&rp.families[k_count][0]) * rho;
    let lifted = rp
        .monos
        .iter()
        .enumerate()
        .skip(1)
        .map(|(m, mono)| {
            let entries = match *mono {
                Mono::Single(a) => vec![rp.free[a]],
                Mono::Pair(a, b) => vec![rp.free[a], rp.free[b]],
                Mono::One => Vec::new(),
            };
            let mats = rp.families.iter().map(|f| sol.matrix(&f[m]) * rho).collect();
            (entries, mats)
        })
        .collect();
    let objective_mw = w.iter().map(|m| m.trace().re).sum::<f64>() + v.trace().re;
    let penalty: f64 = rp
        .free
        .iter()
        .enumerate()
        .map(|(a, _)| rp.penalty_mw[a] * sol.value(rp.b_vars[a]))
        .sum();
    let rank_ratios = w.iter().map(|m| principal_component(m).1).collect();
    RelaxedSolution {
        b_tilde,
        beta_tilde,
        w,
        v,
        lifted,
        objective_mw,
        penalized_mw: objective_mw + penalty,
        bound_mw: sol.objective.min(sol.dual_objective) * rp.rho,
        rank_ratios,
        iterations: sol.iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn propagation() {
        let f = Fixings::new(3, 2);
        let g = f.with(1, 0, true).unwrap().unwrap();
        assert_eq!(g.get(0, 0), Some(false));
        assert_eq!(g.get(2, 0), Some(false));
        assert_eq!(g.get(0, 1), None);
        let h = f.with(0, 1, false).unwrap().unwrap().with(1, 1, false).unwrap().unwrap();
        assert_eq!(h.get(2, 1), Some(true));
        assert!(h.with(2, 1, false).is_err());
        let mut all_zero = Fixings::new(2, 1);
        all_zero.set(0, 0, false).unwrap();
        all_zero.set(1, 0, false).unwrap();
        assert!(all_zero.propagate().is_none());
    }

    #[test]
    fn nominal_census() {
        let c = Census::nominal(2, 3, 2);
        assert_eq!((c.psd_blocks, c.free_b, c.beta), (138, 6, 45));
    }

    #[test]
    fn reduced_census() {
        // S = 3, T = 2: 6 singles and 9 cross-tile pairs per family
        let c = census(2, &Fixings::new(3, 2)).unwrap();
        assert_eq!(c.free_b, 6);
        assert_eq!(c.beta, 9);
        assert_eq!(c.psd_blocks, 3 * 16);
        assert_eq!(c.lmis, 3 * 3 * 15);
    }
}
