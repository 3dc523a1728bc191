//! Enumeration oracle, benchmark schemes and a common result type.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bnb::bnb_solve;
use crate::channel::ChannelSet;
use crate::config::ScenarioConfig;
use crate::problem::{
    solve_fixed_with, verify_solution, BeamformingSolution, FeasibilityReport, FixedOptions, ModeAssignment, FEAS_TOL,
};
use crate::sca::{sca_solve, sca_solve_with};
use crate::CoreError;

/// Scheme identifiers as they appear in records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeId {
    Oracle,
    BnB,
    Sca,
    B1,
    B2,
    B3,
    LinearEh,
    NoIrs,
}

impl SchemeId {
    pub const ALL: [SchemeId; 8] = [
        SchemeId::Oracle,
        SchemeId::BnB,
        SchemeId::Sca,
        SchemeId::B1,
        SchemeId::B2,
        SchemeId::B3,
        SchemeId::LinearEh,
        SchemeId::NoIrs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::Oracle => "Oracle",
            SchemeId::BnB => "BnB",
            SchemeId::Sca => "SCA",
            SchemeId::B1 => "B1",
            SchemeId::B2 => "B2",
            SchemeId::B3 => "B3",
            SchemeId::LinearEh => "LinearEH",
            SchemeId::NoIrs => "NoIRS",
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchemeId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| CoreError::InvalidArgument(format!("unknown scheme `{s}`")))
    }
}

/// Outcome of one scheme on one instance. Infeasibility is a regular
/// outcome (`solution` is `None`), not an error.
#[derive(Debug, Clone)]
pub struct SchemeResult {
    pub scheme: SchemeId,
    /// Assignment local to the channel set the scheme ran on.
    pub assignment: Option<ModeAssignment>,
    /// The same assignment as codebook indices.
    pub codebook_modes: Option<Vec<usize>>,
    pub solution: Option<BeamformingSolution>,
    pub report: Option<FeasibilityReport>,
    /// Scheme-specific iteration count: nodes (BnB), SCA iterations,
    /// fixed-mode solves (oracle) or interior-point iterations.
    pub iterations: usize,
    /// Final relative gap (BnB).
    pub gap: Option<f64>,
    /// Final binarity residual (SCA and the linear-EH scheme).
    pub binarity_residual: Option<f64>,
    /// Power the scheme needs without the budget row, milliwatts
    /// (no-IRS scheme).
    pub unbudgeted_mw: Option<f64>,
}

impl SchemeResult {
    fn infeasible(scheme: SchemeId, iterations: usize) -> Self {
        Self {
            scheme,
            assignment: None,
            codebook_modes: None,
            solution: None,
            report: None,
            iterations,
            gap: None,
            binarity_residual: None,
            unbudgeted_mw: None,
        }
    }

    fn feasible(
        scheme: SchemeId,
        ch: &ChannelSet,
        assign: ModeAssignment,
        sol: BeamformingSolution,
        cfg: &ScenarioConfig,
        iterations: usize,
    ) -> Self {
        let report = verify_solution(ch, &assign, &sol.w, &sol.v, cfg, FEAS_TOL);
        Self {
            scheme,
            codebook_modes: Some(assign.codebook_modes(ch)),
            assignment: Some(assign),
            solution: Some(sol),
            report: Some(report),
            iterations,
            gap: None,
            binarity_residual: None,
            unbudgeted_mw: None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.solution.is_some()
    }

    pub fn objective_mw(&self) -> Option<f64> {
        self.solution.as_ref().map(|s| s.objective_mw)
    }

    pub fn objective_dbm(&self) -> Option<f64> {
        self.solution.as_ref().map(|s| s.objective_dbm())
    }
}

fn infeasible_on(e: CoreError, scheme: SchemeId) -> Result<SchemeResult, CoreError> {
    match e {
        CoreError::Infeasible => Ok(SchemeResult::infeasible(scheme, 0)),
        e => Err(e),
    }
}

/// Every assignment of the `S^T` product (last tile fastest) with its
/// fixed-mode solution, `None` when infeasible.
pub fn enumerate_all(
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
) -> Result<Vec<(ModeAssignment, Option<BeamformingSolution>)>, CoreError> {
    let (s, t) = (ch.num_modes(), ch.num_tiles);
    let count = (s as u128).checked_pow(t as u32).unwrap_or(u128::MAX);
    if count > cfg.enum_cap as u128 {
        return Err(CoreError::EnumerationCap { count, cap: cfg.enum_cap });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut modes = vec![0; t];
    loop {
        let assign = ModeAssignment::new(modes.clone());
        let sol = solve_fixed_with(ch, &assign, cfg, &FixedOptions::default())?;
        out.push((assign, sol));
        // odometer increment
        let mut i = t;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            modes[i] += 1;
            if modes[i] < s {
                break;
            }
            modes[i] = 0;
        }
    }
}

/// Solves every assignment and keeps the cheapest feasible one (the first
/// on ties); `iterations` counts the solves.
pub fn enumerate_optimal(ch: &ChannelSet, cfg: &ScenarioConfig) -> Result<SchemeResult, CoreError> {
    let all = enumerate_all(ch, cfg)?;
    let solves = all.len();
    let mut best: Option<(ModeAssignment, BeamformingSolution)> = None;
    for (a, sol) in all {
        if let Some(sol) = sol {
            if best.as_ref().is_none_or(|b| sol.objective_mw < b.1.objective_mw) {
                best = Some((a, sol));
            }
        }
    }
    Ok(match best {
        Some((a, sol)) => SchemeResult::feasible(SchemeId::Oracle, ch, a, sol, cfg, solves),
        None => SchemeResult::infeasible(SchemeId::Oracle, solves),
    })
}

/// Branch-and-bound on the refined channels.
pub fn bnb_scheme(ch: &ChannelSet, cfg: &ScenarioConfig) -> Result<SchemeResult, CoreError> {
    let out = bnb_solve(ch, cfg)?;
    let gap = out.gap();
    let mut r = match out.best {
        Some((a, sol)) => SchemeResult::feasible(SchemeId::BnB, ch, a, sol, cfg, out.nodes),
        None => SchemeResult::infeasible(SchemeId::BnB, out.nodes),
    };
    r.gap = Some(if r.is_feasible() { gap } else { 0.0 });
    Ok(r)
}

/// Penalty SCA on the refined channels.
pub fn sca_scheme(ch: &ChannelSet, cfg: &ScenarioConfig) -> Result<SchemeResult, CoreError> {
    match sca_solve(ch, cfg) {
        Ok(out) => {
            let mut r = SchemeResult::feasible(SchemeId::Sca, ch, out.assignment, out.solution, cfg, out.trace.len());
            r.binarity_residual = Some(out.binarity_residual);
            Ok(r)
        }
        Err(e) => infeasible_on(e, SchemeId::Sca),
    }
}

fn random_assignment(num_modes: usize, num_tiles: usize, seed: u64) -> ModeAssignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ModeAssignment::new((0..num_tiles).map(|_| rng.random_range(0..num_modes)).collect())
}

fn fixed_scheme(
    scheme: SchemeId,
    ch: &ChannelSet,
    assign: ModeAssignment,
    cfg: &ScenarioConfig,
    opts: &FixedOptions,
) -> Result<SchemeResult, CoreError> {
    Ok(match solve_fixed_with(ch, &assign, cfg, opts)? {
        Some(sol) => {
            let it = sol.iterations;
            SchemeResult::feasible(scheme, ch, assign, sol, cfg, it)
        }
        None => SchemeResult::infeasible(scheme, 0),
    })
}

/// Baseline 1: a uniformly random refined mode per tile and an isotropic
/// energy covariance `V = q I`.
pub fn baseline_random_mode(ch: &ChannelSet, cfg: &ScenarioConfig, seed: u64) -> Result<SchemeResult, CoreError> {
    let assign = random_assignment(ch.num_modes(), ch.num_tiles, seed);
    let opts = FixedOptions {
        isotropic_energy: true,
        ..FixedOptions::default()
    };
    fixed_scheme(SchemeId::B1, ch, assign, cfg, &opts)
}

/// Baseline 2: a uniformly random mode per tile from the full offline
/// codebook, covariances optimized.
pub fn baseline_random_phase(offline: &ChannelSet, cfg: &ScenarioConfig, seed: u64) -> Result<SchemeResult, CoreError> {
    let assign = random_assignment(offline.num_modes(), offline.num_tiles, seed);
    fixed_scheme(SchemeId::B2, offline, assign, cfg, &FixedOptions::default())
}

/// Per tile, the offline mode whose reflected vector has the largest norm
/// over all receivers (ties to the lower index).
pub fn max_norm_modes(offline: &ChannelSet) -> ModeAssignment {
    let modes = (1..=offline.num_tiles)
        .map(|t| {
            let score = |s: usize| {
                (0..offline.num_receivers())
                    .map(|rx| offline.get_rx(rx, s, t).norm())
                    .fold(0.0, f64::max)
            };
            let mut best = 0;
            for s in 1..offline.num_modes() {
                if score(s) > score(best) {
                    best = s;
                }
            }
            best
        })
        .collect();
    ModeAssignment::new(modes)
}

/// Baseline 3: the max-norm mode per tile and maximum ratio transmission
/// towards every IR; powers and `V` optimized.
pub fn baseline_mrt(offline: &ChannelSet, cfg: &ScenarioConfig) -> Result<SchemeResult, CoreError> {
    let opts = FixedOptions {
        mrt: true,
        ..FixedOptions::default()
    };
    fixed_scheme(SchemeId::B3, offline, max_norm_modes(offline), cfg, &opts)
}

/// Designs under a linear harvesting model, then scales all covariances by
/// the smallest common factor `>= 1` meeting the non-linear requirement.
///
/// Received RF power is linear in the common factor, so the factor is
/// `max_j P_req / P_j` in closed form.
pub fn linear_eh_scheme(ch: &ChannelSet, cfg: &ScenarioConfig) -> Result<SchemeResult, CoreError> {
    let eta = cfg.linear_efficiency();
    if !(eta > 0.0) {
        return Err(CoreError::InvalidConfig(format!("linear efficiency {eta}")));
    }
    let rf_linear_mw = cfg.min_harvest_uw / eta * crate::config::MW_PER_UW;
    let out = match sca_solve_with(ch, cfg, Some(rf_linear_mw)) {
        Ok(out) => out,
        Err(e) => return infeasible_on(e, SchemeId::LinearEh),
    };
    let rf_true_mw = cfg.required_rf_mw()?;
    let factor = out
        .solution
        .rf_power_uw
        .iter()
        .map(|&p| rf_true_mw / (p * crate::config::MW_PER_UW))
        .fold(1.0, f64::max);
    let iterations = out.trace.len();
    if !factor.is_finite() || factor * out.solution.objective_mw > cfg.max_power_mw() {
        return Ok(SchemeResult::infeasible(SchemeId::LinearEh, iterations));
    }
    let scaled = if factor > 1.0 {
        // a relative margin keeps the harvested power on the feasible side
        out.solution.scaled(factor * (1.0 + 1e-9), ch, &out.assignment, cfg)
    } else {
        out.solution
    };
    let mut r = SchemeResult::feasible(SchemeId::LinearEh, ch, out.assignment, scaled, cfg, iterations);
    r.binarity_residual = Some(out.binarity_residual);
    Ok(r)
}

/// Conventional system without IRS: direct channels only. Also records
/// the power needed when the budget is ignored.
pub fn no_irs_scheme(ch: &ChannelSet, cfg: &ScenarioConfig) -> Result<SchemeResult, CoreError> {
    let direct = ch.direct_only();
    let assign = ModeAssignment::new(Vec::new());
    let unbounded = FixedOptions {
        budget: false,
        ..FixedOptions::default()
    };
    let need = solve_fixed_with(&direct, &assign, cfg, &unbounded)?.map(|s| s.objective_mw);
    let mut r = fixed_scheme(SchemeId::NoIrs, &direct, assign, cfg, &FixedOptions::default())?;
    r.unbudgeted_mw = need;
    Ok(r)
}

/// Runs `scheme`. `offline` holds every codebook mode and `refined` the
/// online subset; `seed` drives the random baselines.
pub fn run_scheme(
    scheme: SchemeId,
    offline: &ChannelSet,
    refined: &ChannelSet,
    cfg: &ScenarioConfig,
    seed: u64,
) -> Result<SchemeResult, CoreError> {
    match scheme {
        SchemeId::Oracle => enumerate_optimal(refined, cfg),
        SchemeId::BnB => bnb_scheme(refined, cfg),
        SchemeId::Sca => sca_scheme(refined, cfg),
        SchemeId::B1 => baseline_random_mode(refined, cfg, seed),
        SchemeId::B2 => baseline_random_phase(offline, cfg, seed),
        SchemeId::B3 => baseline_mrt(offline, cfg),
        SchemeId::LinearEh => linear_eh_scheme(refined, cfg),
        SchemeId::NoIrs => no_irs_scheme(offline, cfg),
    }
}
