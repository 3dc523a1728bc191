//! Branch-and-bound versus exhaustive enumeration on small instances.

use swipt_core::{bnb_solve, build_codebook, enumerate_all, BnbTraceRow, CoreError, ModeAssignment, ScenarioConfig};

use crate::sweep::prepare_instance;

/// Relative objective tolerance between the two solvers.
pub const OBJECTIVE_TOL: f64 = 1e-4;
/// Relative margin above which the enumerated optimum counts as unique.
pub const UNIQUE_MARGIN: f64 = 1e-6;

/// Small configuration of the equivalence suite: 4 antennas, one IR, one
/// ER, two tiles, three refined modes and a 1e-4 optimality gap.
pub fn oracle_config() -> ScenarioConfig {
    ScenarioConfig {
        num_antennas: 4,
        num_irs: 1,
        num_ers: 1,
        num_tiles: 2,
        target_mode_set_size: 3,
        eps_bnb: 1e-4,
        ..ScenarioConfig::default()
    }
}

/// Comparison on one seed.
#[derive(Debug, Clone)]
pub struct OracleCase {
    pub seed: u64,
    /// Enumerated optimum (milliwatts) and assignment.
    pub oracle: Option<(f64, ModeAssignment)>,
    /// Whether the runner-up is worse by more than [`UNIQUE_MARGIN`].
    pub unique: bool,
    pub bnb: Option<(f64, ModeAssignment)>,
    pub bnb_gap: f64,
    pub node_limit_hit: bool,
    pub trace: Vec<BnbTraceRow>,
    /// Rank ratios of every feasible fixed-mode solve (enumeration and
    /// branch-and-bound).
    pub fixed_rank_ratios: Vec<f64>,
    /// Rank ratios of every relaxation solved by branch-and-bound.
    pub relaxation_rank_ratios: Vec<f64>,
}

impl OracleCase {
    /// `|bnb - oracle| / oracle`, zero when both are infeasible.
    pub fn relative_error(&self) -> f64 {
        match (&self.oracle, &self.bnb) {
            (Some((o, _)), Some((b, _))) => (b - o).abs() / o,
            (None, None) => 0.0,
            _ => f64::INFINITY,
        }
    }

    pub fn objective_ok(&self) -> bool {
        self.relative_error() <= OBJECTIVE_TOL
    }

    /// Assignments agree, or the optimum is not unique.
    pub fn assignment_ok(&self) -> bool {
        match (&self.oracle, &self.bnb) {
            (Some((_, a)), Some((_, b))) => !self.unique || a == b,
            (None, None) => true,
            _ => false,
        }
    }

    pub fn passed(&self) -> bool {
        self.objective_ok() && self.assignment_ok()
    }
}

/// Runs both solvers on `seeds`.
pub fn oracle_check(cfg: &ScenarioConfig, seeds: impl IntoIterator<Item = u64>) -> Result<Vec<OracleCase>, CoreError> {
    let codebook = build_codebook(cfg.reflection_grid_size, &cfg.wavefront_offsets)?;
    seeds
        .into_iter()
        .map(|seed| {
            let inst = prepare_instance(cfg, &codebook, seed)?;
            let all = enumerate_all(&inst.refined, cfg)?;
            let mut feasible: Vec<(f64, &ModeAssignment)> = all
                .iter()
                .filter_map(|(a, s)| s.as_ref().map(|s| (s.objective_mw, a)))
                .collect();
            // stable: ties keep enumeration order
            feasible.sort_by(|x, y| x.0.total_cmp(&y.0));
            let unique = match feasible.as_slice() {
                [first, second, ..] => second.0 > first.0 * (1.0 + UNIQUE_MARGIN),
                _ => true,
            };
            let mut fixed_rank_ratios: Vec<f64> = all
                .iter()
                .filter_map(|(_, s)| s.as_ref())
                .flat_map(|s| s.rank_ratios.iter().copied())
                .collect();
            let out = bnb_solve(&inst.refined, cfg)?;
            fixed_rank_ratios.extend_from_slice(&out.fixed_rank_ratios);
            Ok(OracleCase {
                seed,
                oracle: feasible.first().map(|(o, a)| (*o, (*a).clone())),
                unique,
                bnb: out.best.as_ref().map(|(a, s)| (s.objective_mw, a.clone())),
                bnb_gap: out.gap(),
                node_limit_hit: out.node_limit_hit,
                trace: out.trace,
                fixed_rank_ratios,
                relaxation_rank_ratios: out.relaxation_rank_ratios,
            })
        })
        .collect()
}

/// Whether a trace has non-decreasing `L`, non-increasing `U`, `L <= U`
/// throughout and a final gap of at most `eps`.
pub fn trace_is_monotone(trace: &[BnbTraceRow], eps: f64) -> bool {
    let steps_ok = trace.windows(2).all(|w| {
        w[1].lower_mw >= w[0].lower_mw * (1.0 - 1e-12) && w[1].upper_mw <= w[0].upper_mw
    });
    let ordered = trace.iter().all(|r| r.lower_mw <= r.upper_mw * (1.0 + 1e-12));
    let closed = trace
        .last()
        .is_some_and(|r| !r.upper_mw.is_finite() || (r.upper_mw - r.lower_mw) <= eps * r.lower_mw);
    steps_ok && ordered && closed
}
