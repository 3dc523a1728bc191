//! Penalty-based successive convex approximation for mode selection.
//!
//! The binary constraint is replaced by the penalty `chi * sum(b - b^2)`,
//! whose concave part is linearized at the previous iterate; each step
//! solves the relaxation with the resulting linear penalty.

use std::fmt::Write as _;

use crate::bnb::round_relaxed;
use crate::channel::ChannelSet;
use crate::config::ScenarioConfig;
use crate::problem::{solve_fixed_with, BeamformingSolution, FixedOptions, ModeAssignment};
use crate::relax::{solve_relaxed, Fixings, RelaxOptions, RelaxOutcome, RelaxedSolution, RELAX_REDUCED_TOL};
use crate::CoreError;

/// `sum (b - b^2)` over all entries.
pub fn binarity_residual(b: &[Vec<f64>]) -> f64 {
    b.iter().flatten().map(|&x| x - x * x).sum()
}

/// Penalized objective `P + chi * sum(b - b^2)`, milliwatts.
pub fn penalized_objective(sol: &RelaxedSolution, chi: f64) -> f64 {
    sol.objective_mw + chi * binarity_residual(&sol.b_tilde)
}

/// Solves the convex subproblem linearized at `b_prev` (indexed `[t][s]`)
/// with penalty factor `chi` per milliwatt. Returns the minimizer and the
/// surrogate objective `P + chi * sum(b - 2 b b_prev + b_prev^2)`.
pub fn sca_subproblem(
    ch: &ChannelSet,
    b_prev: &[Vec<f64>],
    chi: f64,
    cfg: &ScenarioConfig,
) -> Result<(RelaxedSolution, f64), CoreError> {
    subproblem(ch, b_prev, chi, cfg, None)
}

fn subproblem(
    ch: &ChannelSet,
    b_prev: &[Vec<f64>],
    chi: f64,
    cfg: &ScenarioConfig,
    rf_required_mw: Option<f64>,
) -> Result<(RelaxedSolution, f64), CoreError> {
    if b_prev.len() != ch.num_tiles || b_prev.iter().any(|c| c.len() != ch.num_modes()) {
        return Err(CoreError::DimensionMismatch("previous iterate shape".into()));
    }
    if b_prev.iter().flatten().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(CoreError::InvalidArgument("previous iterate outside [0, 1]".into()));
    }
    let linear: Vec<Vec<f64>> = b_prev
        .iter()
        .map(|c| c.iter().map(|&x| chi * (1.0 - 2.0 * x)).collect())
        .collect();
    let constant: f64 = chi * b_prev.iter().flatten().map(|x| x * x).sum::<f64>();
    let opts = RelaxOptions {
        penalty_mw: Some(&linear),
        budget_mw: None,
        rf_required_mw,
    };
    let fixings = Fixings::new(ch.num_modes(), ch.num_tiles);
    match solve_relaxed(ch, &fixings, cfg, &opts)? {
        RelaxOutcome::Optimal(sol) => {
            let surrogate = sol.penalized_mw + constant;
            Ok((sol, surrogate))
        }
        RelaxOutcome::Infeasible => Err(CoreError::Infeasible),
    }
}

/// One SCA iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaTraceRow {
    pub iteration: usize,
    /// Penalized objective, milliwatts.
    pub f_mw: f64,
    pub binarity: f64,
}

/// Trace as CSV: `m,f,binarity` (milliwatts).
pub fn sca_trace_csv(trace: &[ScaTraceRow]) -> String {
    let mut out = String::from("m,f,binarity\n");
    for r in trace {
        let _ = writeln!(out, "{},{:e},{:e}", r.iteration, r.f_mw, r.binarity);
    }
    out
}

/// Result of [`sca_solve`].
#[derive(Debug, Clone)]
pub struct ScaOutcome {
    pub assignment: ModeAssignment,
    pub solution: BeamformingSolution,
    pub trace: Vec<ScaTraceRow>,
    /// Final relaxed binaries, indexed `[t][s]`.
    pub b_final: Vec<Vec<f64>>,
    pub binarity_residual: f64,
    /// Whether the rounding of the final iterate was infeasible and an
    /// earlier iterate's rounding was reported.
    pub fell_back: bool,
    /// Subproblems that failed numerically (iteration stops at the first).
    pub numerical_failures: usize,
    pub relaxation_rank_ratios: Vec<f64>,
}

impl ScaOutcome {
    /// Whether `f` never increased by more than `rel_tol` relative.
    pub fn is_monotone(&self, rel_tol: f64) -> bool {
        self.trace
            .windows(2)
            .all(|w| w[1].f_mw <= w[0].f_mw * (1.0 + rel_tol))
    }
}

/// Relative increase of `f` tolerated between iterations, matching the
/// accuracy at which relaxations are accepted.
pub const SCA_MONOTONE_TOL: f64 = 10.0 * RELAX_REDUCED_TOL;

/// Iterates [`sca_subproblem`] from `b = 1/S` until the relative decrease
/// of `f` is at most `eps_sca`, rounds the final iterate and re-solves with
/// fixed modes. If that assignment is infeasible, the best feasible
/// rounding among all iterates is reported.
pub fn sca_solve(ch: &ChannelSet, cfg: &ScenarioConfig) -> Result<ScaOutcome, CoreError> {
    sca_solve_with(ch, cfg, None)
}

/// [`sca_solve`] with the ERs' RF requirement (milliwatts) given directly
/// instead of inverted from the non-linear harvesting curve.
pub fn sca_solve_with(
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
    rf_required_mw: Option<f64>,
) -> Result<ScaOutcome, CoreError> {
    cfg.validate()?;
    let fixed_opts = FixedOptions {
        rf_required_mw,
        ..FixedOptions::default()
    };
    let s_count = ch.num_modes();
    if s_count == 0 {
        return Err(CoreError::InvalidArgument("empty mode set".into()));
    }
    let chi = cfg.penalty_factor;
    let free = Fixings::new(s_count, ch.num_tiles);
    let mut b = vec![vec![1.0 / s_count as f64; s_count]; ch.num_tiles];
    let mut trace = Vec::new();
    let mut roundings: Vec<ModeAssignment> = Vec::new();
    let mut rank_ratios = Vec::new();
    let mut numerical_failures = 0;
    let mut prev_f: Option<f64> = None;
    for m in 1..=cfg.max_sca_iterations {
        let sol = match subproblem(ch, &b, chi, cfg, rf_required_mw) {
            Ok((sol, _)) => sol,
            Err(CoreError::Solver(msg)) => {
                numerical_failures += 1;
                if trace.is_empty() {
                    return Err(CoreError::Solver(msg));
                }
                break;
            }
            Err(e) => return Err(e),
        };
        let f = penalized_objective(&sol, chi);
        rank_ratios.extend_from_slice(&sol.rank_ratios);
        b = sol.b_tilde;
        trace.push(ScaTraceRow {
            iteration: m,
            f_mw: f,
            binarity: binarity_residual(&b),
        });
        let rounded = round_relaxed(&b, &free);
        if !roundings.contains(&rounded) {
            roundings.push(rounded);
        }
        if let Some(pf) = prev_f {
            if (pf - f) / f <= cfg.eps_sca {
                break;
            }
        }
        prev_f = Some(f);
    }

    let final_rounding = round_relaxed(&b, &free);
    let mut fell_back = false;
    let mut chosen = solve_fixed_with(ch, &final_rounding, cfg, &fixed_opts)?.map(|s| (final_rounding.clone(), s));
    if chosen.is_none() {
        fell_back = true;
        for r in roundings.iter().filter(|r| **r != final_rounding) {
            if let Some(s) = solve_fixed_with(ch, r, cfg, &fixed_opts)? {
                if chosen.as_ref().is_none_or(|c| s.objective_mw < c.1.objective_mw) {
                    chosen = Some((r.clone(), s));
                }
            }
        }
    }
    let (assignment, solution) = chosen.ok_or(CoreError::Infeasible)?;
    Ok(ScaOutcome {
        assignment,
        solution,
        binarity_residual: binarity_residual(&b),
        b_final: b,
        trace,
        fell_back,
        numerical_failures,
        relaxation_rank_ratios: rank_ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_vanishes_on_binaries() {
        assert_eq!(binarity_residual(&[vec![1.0, 0.0], vec![0.0, 1.0]]), 0.0);
        assert!((binarity_residual(&[vec![0.5, 0.5]]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn surrogate_is_tight_at_expansion_point() {
        let chi: f64 = 1e3;
        for &bp in &[0.0, 0.25, 0.5, 1.0] {
            let exact = chi * (bp - bp * bp);
            let surrogate = chi * (bp - 2.0 * bp * bp + bp * bp);
            assert!((exact - surrogate).abs() < 1e-12);
            for &x in &[0.0, 0.3, 0.9, 1.0] {
                assert!(chi * (x - 2.0 * x * bp + bp * bp) >= chi * (x - x * x) - 1e-12);
            }
        }
    }
}
