//! QoS evaluation and the beamforming SDP for a fixed mode assignment.

use nalgebra::DMatrix;
use num_complex::Complex64;
use swipt_conic::{solve_conic, ConicProblem, MatrixVar, Sense, SolverSettings, Status};

use crate::channel::{CVector, ChannelSet};
use crate::config::{ScenarioConfig, MW_PER_UW};
use crate::CoreError;

/// Complex Hermitian matrix.
pub type CMatrix = DMatrix<Complex64>;

/// One mode per physical tile (local indices into a [`ChannelSet`]).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeAssignment {
    pub modes: Vec<usize>,
}

impl ModeAssignment {
    pub fn new(modes: Vec<usize>) -> Self {
        Self { modes }
    }

    pub fn uniform(mode: usize, num_tiles: usize) -> Self {
        Self {
            modes: vec![mode; num_tiles],
        }
    }

    pub fn validate(&self, ch: &ChannelSet) -> Result<(), CoreError> {
        if self.modes.len() != ch.num_tiles {
            return Err(CoreError::DimensionMismatch(format!(
                "assignment has {} tiles, channels have {}",
                self.modes.len(),
                ch.num_tiles
            )));
        }
        if let Some(&s) = self.modes.iter().find(|&&s| s >= ch.num_modes()) {
            return Err(CoreError::InvalidArgument(format!("mode {s} outside the {}-mode set", ch.num_modes())));
        }
        Ok(())
    }

    /// Codebook indices of the chosen modes.
    pub fn codebook_modes(&self, ch: &ChannelSet) -> Vec<usize> {
        self.modes.iter().map(|&s| ch.modes[s]).collect()
    }
}

/// Transmit covariances and their QoS.
#[derive(Debug, Clone)]
pub struct BeamformingSolution {
    /// Information covariances `W_k`, milliwatts.
    pub w: Vec<CMatrix>,
    /// Energy covariance `V`, milliwatts.
    pub v: CMatrix,
    /// Principal beamformers `sqrt(l1) u1` of each `W_k`.
    pub beams: Vec<CVector>,
    /// `sum Tr W_k + Tr V`, milliwatts.
    pub objective_mw: f64,
    pub sinr: Vec<f64>,
    pub rf_power_uw: Vec<f64>,
    pub harvested_uw: Vec<f64>,
    /// Second-to-first eigenvalue ratio of each `W_k`.
    pub rank_ratios: Vec<f64>,
    pub iterations: usize,
}

impl BeamformingSolution {
    pub fn objective_dbm(&self) -> f64 {
        10.0 * self.objective_mw.log10()
    }

    /// All covariances multiplied by `factor`.
    pub fn scaled(&self, factor: f64, ch: &ChannelSet, assign: &ModeAssignment, cfg: &ScenarioConfig) -> Self {
        let c = Complex64::new(factor, 0.0);
        let w: Vec<CMatrix> = self.w.iter().map(|m| m * c).collect();
        let v = &self.v * c;
        let mut out = evaluate(ch, assign, w, v, cfg);
        out.iterations = self.iterations;
        out
    }
}

fn quad(h: &CVector, x: &CMatrix) -> f64 {
    (h.adjoint() * x * h)[(0, 0)].re
}

fn hermitian_check(x: &CMatrix) -> Result<(), CoreError> {
    let scale = x.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    if (x - x.adjoint()).iter().any(|z| z.norm() > 1e-9 * scale) {
        return Err(CoreError::InvalidArgument("matrix is not Hermitian".into()));
    }
    Ok(())
}

/// `h = h_0 + sum_t h_{s_t, t}` for flat receiver index `rx`.
pub fn effective_channel(ch: &ChannelSet, assign: &ModeAssignment, rx: usize) -> CVector {
    let mut h = ch.direct(rx).clone();
    for (t, &s) in assign.modes.iter().enumerate() {
        h += ch.get_rx(rx, s, t + 1);
    }
    h
}

/// SINR of IR `k` (linear).
pub fn sinr(
    ch: &ChannelSet,
    assign: &ModeAssignment,
    w: &[CMatrix],
    v: &CMatrix,
    k: usize,
    cfg: &ScenarioConfig,
) -> Result<f64, CoreError> {
    for m in w.iter().chain(std::iter::once(v)) {
        hermitian_check(m)?;
    }
    let h = effective_channel(ch, assign, ch.rx_index(crate::RxKind::Ir, k));
    Ok(sinr_of(&h, w, v, k, cfg))
}

fn sinr_of(h: &CVector, w: &[CMatrix], v: &CMatrix, k: usize, cfg: &ScenarioConfig) -> f64 {
    let signal = quad(h, &w[k]);
    let mut interference: f64 = w.iter().enumerate().filter(|(r, _)| *r != k).map(|(_, m)| quad(h, m)).sum();
    if !cfg.cancel_energy_interference {
        interference += quad(h, v);
    }
    signal / (interference + cfg.noise_ir_mw())
}

/// RF power received by ER `j`, microwatts.
pub fn received_rf_power(ch: &ChannelSet, assign: &ModeAssignment, w: &[CMatrix], v: &CMatrix, j: usize) -> f64 {
    let h = effective_channel(ch, assign, ch.rx_index(crate::RxKind::Er, j));
    rf_of(&h, w, v)
}

fn rf_of(h: &CVector, w: &[CMatrix], v: &CMatrix) -> f64 {
    (w.iter().map(|m| quad(h, m)).sum::<f64>() + quad(h, v)) / MW_PER_UW
}

/// Principal beamformer `sqrt(l1) u1` and the ratio `l2 / l1`.
pub fn principal_component(w: &CMatrix) -> (CVector, f64) {
    let n = w.nrows();
    let eig = w.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let l1 = eig.eigenvalues[order[0]];
    if !(l1 > 0.0) {
        return (CVector::zeros(n), 0.0);
    }
    let l2 = if n > 1 { eig.eigenvalues[order[1]].max(0.0) } else { 0.0 };
    let u = eig.eigenvectors.column(order[0]).into_owned();
    (u * Complex64::new(l1.sqrt(), 0.0), l2 / l1)
}

/// Rank-one factor of `w`, rejecting matrices whose second eigenvalue
/// exceeds `rank_tol` times the first.
pub fn extract_beamformers(w: &CMatrix, rank_tol: f64) -> Result<CVector, CoreError> {
    hermitian_check(w)?;
    let (beam, ratio) = principal_component(w);
    if ratio > rank_tol {
        return Err(CoreError::RankOneViolation { ratio, tol: rank_tol });
    }
    Ok(beam)
}

/// Builds the full solution record from covariances.
pub fn evaluate(ch: &ChannelSet, assign: &ModeAssignment, w: Vec<CMatrix>, v: CMatrix, cfg: &ScenarioConfig) -> BeamformingSolution {
    let objective_mw = w.iter().map(|m| m.trace().re).sum::<f64>() + v.trace().re;
    let sinr = (0..ch.num_irs)
        .map(|k| sinr_of(&effective_channel(ch, assign, k), &w, &v, k, cfg))
        .collect();
    let rf_power_uw: Vec<f64> = (0..ch.num_ers)
        .map(|j| rf_of(&effective_channel(ch, assign, ch.num_irs + j), &w, &v))
        .collect();
    let harvested_uw = rf_power_uw
        .iter()
        .map(|&p| cfg.eh_params.harvested_power(p.max(0.0)).unwrap_or(0.0))
        .collect();
    let (beams, rank_ratios) = w.iter().map(principal_component).unzip();
    BeamformingSolution {
        w,
        v,
        beams,
        objective_mw,
        sinr,
        rf_power_uw,
        harvested_uw,
        rank_ratios,
        iterations: 0,
    }
}

/// Structural restrictions of the fixed-assignment problem.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedOptions {
    /// Restrict `V = q I` with scalar `q >= 0`.
    pub isotropic_energy: bool,
    /// Restrict `W_k = p_k h_k h_k^H / |h_k|^2` (maximum ratio transmission).
    pub mrt: bool,
    /// Add `sum Tr W_k + Tr V <= P_max`.
    pub budget: bool,
    /// RF power each ER must receive, milliwatts; `None` inverts the
    /// non-linear harvesting curve at `minHarvestUw`.
    pub rf_required_mw: Option<f64>,
}

impl Default for FixedOptions {
    fn default() -> Self {
        Self {
            isotropic_energy: false,
            mrt: false,
            budget: true,
            rf_required_mw: None,
        }
    }
}

/// Adds `coeffs . x (sense) rhs` with duplicate entries merged and the
/// row divided by its largest coefficient magnitude.
pub(crate) fn add_balanced_row(p: &mut ConicProblem, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
    let mut merged: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
    for (i, a) in coeffs {
        *merged.entry(i).or_insert(0.0) += a;
    }
    let big = merged.values().fold(0.0f64, |m, a| m.max(a.abs()));
    let scale = if big > 0.0 { 1.0 / big } else { 1.0 };
    let row = merged.into_iter().filter(|(_, a)| *a != 0.0).map(|(i, a)| (i, a * scale)).collect();
    p.add_row(row, sense, rhs * scale);
}

/// Power unit (mW, a power of ten) close to the single-link requirement of
/// the hardest receiver; keeps the scaled problem data near unity.
pub(crate) fn power_unit(req: &[(f64, f64)]) -> f64 {
    let est = req
        .iter()
        .filter(|(rhs, g)| *rhs > 0.0 && *g > 0.0)
        .map(|(rhs, g)| rhs / g)
        .fold(0.0, f64::max);
    if est > 0.0 && est.is_finite() {
        10f64.powf(est.log10().round())
    } else {
        1.0
    }
}

enum WVar {
    Matrix(MatrixVar),
    /// Scalar power along a fixed unit direction.
    Scaled(usize, CVector),
}

enum VVar {
    Matrix(MatrixVar),
    Isotropic(usize),
}

/// Solves `min sum Tr W_k + Tr V` under the SINR, harvesting and budget
/// constraints with the channels fixed by `assign`.
///
/// Returns `Ok(None)` when the solver certifies infeasibility.
pub fn solve_fixed_assignment(
    ch: &ChannelSet,
    assign: &ModeAssignment,
    cfg: &ScenarioConfig,
) -> Result<Option<BeamformingSolution>, CoreError> {
    solve_fixed_with(ch, assign, cfg, &FixedOptions::default())
}

/// [`solve_fixed_assignment`] with structural options.
pub fn solve_fixed_with(
    ch: &ChannelSet,
    assign: &ModeAssignment,
    cfg: &ScenarioConfig,
    opts: &FixedOptions,
) -> Result<Option<BeamformingSolution>, CoreError> {
    assign.validate(ch)?;
    let rf_req_mw = match opts.rf_required_mw {
        Some(p) => p,
        None => cfg.required_rf_mw()?,
    };
    let h: Vec<CVector> = (0..ch.num_receivers()).map(|rx| effective_channel(ch, assign, rx)).collect();
    let gamma = cfg.gamma();
    let noise = cfg.noise_ir_mw();
    let mut req: Vec<(f64, f64)> = (0..ch.num_irs).map(|k| (gamma * noise, h[k].norm_squared())).collect();
    req.extend((0..ch.num_ers).map(|j| (rf_req_mw, h[ch.num_irs + j].norm_squared())));
    let base = power_unit(&req);
    if opts.mrt {
        match mrt_power_floor(&h[..ch.num_irs], gamma, noise) {
            Some(p) if !opts.budget || p.iter().sum::<f64>() <= cfg.max_power_mw() => {}
            _ => return Ok(None),
        }
    }

    let mut last_err = String::new();
    let mut short = None;
    'margins: for margin in [0.0, TARGET_MARGIN] {
        for rho in [base, base * 10.0, base / 10.0] {
            let target_gamma = gamma * (1.0 + margin);
            let target_rf = rf_req_mw * (1.0 + margin);
            let (problem, wv, vv) = build_fixed(ch, &h, cfg, opts, target_gamma, target_rf, rho);
            let settings = SolverSettings::with_tol(cfg.solver_tol);
            let sol = solve_conic(&problem, &settings)?;
            match sol.status {
                Status::Optimal => {
                    let w: Vec<CMatrix> = wv
                        .iter()
                        .map(|v| match v {
                            WVar::Matrix(m) => sol.matrix(m),
                            WVar::Scaled(i, d) => d * d.adjoint() * Complex64::new(sol.value(*i).max(0.0), 0.0),
                        })
                        .map(|m| m * Complex64::new(rho, 0.0))
                        .collect();
                    let v = match &vv {
                        VVar::Matrix(m) => sol.matrix(m),
                        VVar::Isotropic(i) => {
                            CMatrix::identity(ch.num_antennas, ch.num_antennas)
                                * Complex64::new(sol.value(*i).max(0.0), 0.0)
                        }
                    } * Complex64::new(rho, 0.0);
                    let mut out = evaluate(ch, assign, w, v, cfg);
                    out.iterations = sol.iterations;
                    if meets_targets(&out, gamma, rf_req_mw, ACCEPT_TOL) {
                        let out = lift_to_targets(out, ch, assign, cfg, gamma, rf_req_mw);
                        let in_budget = !opts.budget || out.objective_mw <= cfg.max_power_mw() * (1.0 + 1e-7);
                        if in_budget && meets_targets(&out, gamma, rf_req_mw, 0.0) {
                            return Ok(Some(out));
                        }
                        // short of a target within solver accuracy: retry
                        // with tightened targets, else report it as is
                        short = Some(out);
                        continue 'margins;
                    }
                    last_err = format!("recovered covariances miss the targets ({})", sol.message);
                }
                Status::Infeasible if margin == 0.0 => return Ok(None),
                Status::Infeasible => break 'margins,
                Status::Unbounded => {
                    return Err(CoreError::Solver("fixed-assignment problem reported unbounded".into()))
                }
                Status::NumericalFailure => last_err = sol.message,
            }
        }
        if short.is_none() {
            break;
        }
    }
    short.map(Some).ok_or(CoreError::Solver(last_err))
}

/// Relative shortfall tolerated when accepting a solver result.
const ACCEPT_TOL: f64 = 1e-4;
/// Relative tightening of the targets in the retry after a short result.
const TARGET_MARGIN: f64 = 1e-5;

/// Scales an accepted solution up until every target holds exactly; the
/// solver residuals may leave a target short by up to [`ACCEPT_TOL`].
fn lift_to_targets(
    mut sol: BeamformingSolution,
    ch: &ChannelSet,
    assign: &ModeAssignment,
    cfg: &ScenarioConfig,
    gamma: f64,
    rf_req_mw: f64,
) -> BeamformingSolution {
    for _ in 0..8 {
        let factor = sol
            .sinr
            .iter()
            .map(|&x| gamma / x)
            .chain(sol.rf_power_uw.iter().map(|&p| rf_req_mw / (p * MW_PER_UW)))
            .fold(1.0, f64::max);
        if factor <= 1.0 || !factor.is_finite() {
            break;
        }
        sol = sol.scaled(factor * (1.0 + 1e-9), ch, assign, cfg);
    }
    sol
}

fn meets_targets(sol: &BeamformingSolution, gamma: f64, rf_req_mw: f64, tol: f64) -> bool {
    sol.objective_mw.is_finite()
        && sol.sinr.iter().all(|&x| x >= gamma * (1.0 - tol))
        && sol.rf_power_uw.iter().all(|&p| p * MW_PER_UW >= rf_req_mw * (1.0 - tol))
}

/// Smallest IR powers meeting every SINR target with `w_k` along `h_k`
/// and no energy signal, or `None` when no powers do. The SINR rows form
/// `M p >= noise` with `M` a Z-matrix, feasible iff `M^-1 >= 0`.
fn mrt_power_floor(h: &[CVector], gamma: f64, noise: f64) -> Option<Vec<f64>> {
    let k_count = h.len();
    let m = DMatrix::<f64>::from_fn(k_count, k_count, |k, r| {
        let nr = h[r].norm_squared();
        let g = if nr > 0.0 { h[k].dotc(&h[r]).norm_sqr() / nr } else { 0.0 };
        if k == r {
            g / gamma
        } else {
            -g
        }
    });
    let inv = m.try_inverse()?;
    let scale = inv.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if inv.iter().any(|&x| x < -1e-12 * scale) {
        return None;
    }
    let p: Vec<f64> = inv.row_iter().map(|r| r.sum() * noise).collect();
    p.iter().all(|&x| x > 0.0 && x.is_finite()).then_some(p)
}

fn build_fixed(
    ch: &ChannelSet,
    h: &[CVector],
    cfg: &ScenarioConfig,
    opts: &FixedOptions,
    gamma: f64,
    rf_req_mw: f64,
    rho: f64,
) -> (ConicProblem, Vec<WVar>, VVar) {
    let n = ch.num_antennas;
    let k_count = ch.num_irs;
    let mut p = ConicProblem::new();
    let wv: Vec<WVar> = (0..k_count)
        .map(|k| {
            if opts.mrt {
                let norm = h[k].norm();
                let dir = if norm > 0.0 { &h[k] / Complex64::new(norm, 0.0) } else { h[k].clone() };
                WVar::Scaled(p.add_nonneg(1), dir)
            } else {
                WVar::Matrix(p.add_hermitian_psd(n))
            }
        })
        .collect();
    let vv = if opts.isotropic_energy {
        VVar::Isotropic(p.add_nonneg(1))
    } else {
        VVar::Matrix(p.add_hermitian_psd(n))
    };
    // coefficients of u^H X u for each variable, and of Tr X
    let w_quad = |k: usize, u: &CVector| -> Vec<(usize, f64)> {
        match &wv[k] {
            WVar::Matrix(m) => m.bilinear(u.as_slice(), u.as_slice()),
            WVar::Scaled(i, d) => vec![(*i, (u.adjoint() * d)[(0, 0)].norm_sqr())],
        }
    };
    let v_quad = |u: &CVector| -> Vec<(usize, f64)> {
        match &vv {
            VVar::Matrix(m) => m.bilinear(u.as_slice(), u.as_slice()),
            VVar::Isotropic(i) => vec![(*i, u.norm_squared())],
        }
    };
    let mut trace: Vec<(usize, f64)> = Vec::new();
    for w in &wv {
        match w {
            WVar::Matrix(m) => trace.extend(m.trace()),
            WVar::Scaled(i, _) => trace.push((*i, 1.0)),
        }
    }
    match &vv {
        VVar::Matrix(m) => trace.extend(m.trace()),
        VVar::Isotropic(i) => trace.push((*i, n as f64)),
    }
    p.add_objective(&trace);

    let noise = cfg.noise_ir_mw();
    for k in 0..k_count {
        let mut row: Vec<(usize, f64)> = w_quad(k, &h[k]).into_iter().map(|(i, a)| (i, a / gamma)).collect();
        for r in (0..k_count).filter(|&r| r != k) {
            row.extend(w_quad(r, &h[k]).into_iter().map(|(i, a)| (i, -a)));
        }
        if !cfg.cancel_energy_interference {
            row.extend(v_quad(&h[k]).into_iter().map(|(i, a)| (i, -a)));
        }
        let scale = rho / noise;
        add_balanced_row(&mut p, row, Sense::Ge, 1.0 / scale);
    }
    if rf_req_mw > 0.0 {
        for j in 0..ch.num_ers {
            let u = &h[k_count + j];
            let mut row: Vec<(usize, f64)> = (0..k_count).flat_map(|k| w_quad(k, u)).collect();
            row.extend(v_quad(u));
            let scale = rho / rf_req_mw;
            add_balanced_row(&mut p, row, Sense::Ge, 1.0 / scale);
        }
    }
    if opts.budget {
        let scale = rho / cfg.max_power_mw();
        p.add_row(trace.iter().map(|&(i, a)| (i, a * scale)).collect(), Sense::Le, 1.0);
    }
    (p, wv, vv)
}

/// Per-constraint slacks of a candidate solution.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    /// `SINR_k - Gamma_req` (linear).
    pub sinr_slack: Vec<f64>,
    /// `harvested_j - E_req` (microwatts).
    pub harvest_slack: Vec<f64>,
    /// `P_max - sum Tr`, milliwatts.
    pub budget_slack: f64,
    /// Exactly one valid mode per tile.
    pub assignment_ok: bool,
    /// Smallest eigenvalue of every covariance relative to the total
    /// transmit power.
    pub psd_floor: f64,
    /// Relative tolerance used for the verdict.
    pub feas_tol: f64,
    pub pass: bool,
}

/// Checks every constraint of the original problem with relative
/// tolerance `feas_tol`.
pub fn verify_solution(
    ch: &ChannelSet,
    assign: &ModeAssignment,
    w: &[CMatrix],
    v: &CMatrix,
    cfg: &ScenarioConfig,
    feas_tol: f64,
) -> FeasibilityReport {
    let gamma = cfg.gamma();
    let assignment_ok = assign.validate(ch).is_ok() && w.len() == ch.num_irs;
    let mut sinr_slack = Vec::new();
    let mut harvest_slack = Vec::new();
    let mut harvest_ok = true;
    if assignment_ok {
        for k in 0..ch.num_irs {
            let h = effective_channel(ch, assign, k);
            sinr_slack.push(sinr_of(&h, w, v, k, cfg) - gamma);
        }
        for j in 0..ch.num_ers {
            let p = received_rf_power(ch, assign, w, v, j);
            let e = cfg.eh_params.harvested_power(p.max(0.0)).unwrap_or(0.0);
            harvest_slack.push(e - cfg.min_harvest_uw);
            harvest_ok &= e - cfg.min_harvest_uw >= -feas_tol * cfg.min_harvest_uw;
        }
    }
    let total: f64 = w.iter().map(|m| m.trace().re).sum::<f64>() + v.trace().re;
    let budget_slack = cfg.max_power_mw() - total;
    let mut psd_floor = f64::INFINITY;
    for m in w.iter().chain(std::iter::once(v)) {
        let eig = m.clone().symmetric_eigen();
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let rel = if total > 0.0 { min / total } else { min.min(0.0) };
        psd_floor = psd_floor.min(rel);
    }
    let pass = assignment_ok
        && sinr_slack.iter().all(|&s| s >= -feas_tol * gamma)
        && harvest_ok
        && budget_slack >= -feas_tol * cfg.max_power_mw()
        && psd_floor >= -feas_tol;
    FeasibilityReport {
        sinr_slack,
        harvest_slack,
        budget_slack,
        assignment_ok,
        psd_floor,
        feas_tol,
        pass,
    }
}

/// Default relative feasibility tolerance.
pub const FEAS_TOL: f64 = 1e-6;
