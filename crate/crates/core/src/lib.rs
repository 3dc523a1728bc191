//! System model and resource allocation for IRS-assisted SWIPT with
//! tile/transmission-mode based IRS control.
//!
//! The pipeline: [`sample_scenario`] draws geometry and multipath
//! coefficients, [`synth_channels`] builds per-tile, per-mode channel
//! vectors, [`calibrate_threshold`] picks an online mode set, and the
//! solvers ([`bnb_solve`], [`sca_solve`], the baselines) jointly choose
//! modes and transmit covariances.

pub mod baselines;
pub mod bnb;
pub mod channel;
pub mod config;
pub mod preselect;
pub mod problem;
pub mod relax;
pub mod eh;
pub mod sca;
pub mod scenario;

use thiserror::Error;

pub use baselines::{
    baseline_mrt, baseline_random_mode, baseline_random_phase, bnb_scheme, enumerate_all, enumerate_optimal, linear_eh_scheme,
    max_norm_modes, no_irs_scheme, run_scheme, sca_scheme, SchemeId, SchemeResult,
};
pub use bnb::{bnb_solve, round_relaxed, select_branch, trace_csv, BnbOutcome, BnbTraceRow, Branch};
pub use channel::{array_response, build_codebook, synth_channels, tile_response, ChannelSet, RxKind, TransmissionMode};
pub use config::{Criterion, Geometry, ScenarioConfig};
pub use eh::EhParams;
pub use preselect::{calibrate_threshold, refine_modes, RefinedModeSet, ThresholdParams};
pub use problem::{
    effective_channel, extract_beamformers, received_rf_power, sinr, solve_fixed_assignment, solve_fixed_with, verify_solution,
    BeamformingSolution, FeasibilityReport, FixedOptions, ModeAssignment, FEAS_TOL,
};
pub use relax::{assemble_relaxed_sdp, census, solve_relaxed, Census, Fixings, RelaxOptions, RelaxOutcome, RelaxedSolution};
pub use sca::{binarity_residual, sca_solve, sca_solve_with, sca_subproblem, sca_trace_csv, ScaOutcome, ScaTraceRow};
pub use scenario::{sample_scenario, ScenarioInstance};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown configuration field `{0}`")]
    UnknownField(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("negative power {0}")]
    NegativePower(f64),
    #[error("unattainable demand: {demand} uW is at or above the saturation level {saturation} uW")]
    UnattainableDemand { demand: f64, saturation: f64 },
    #[error("over-restrictive threshold: no mode selected")]
    OverRestrictiveThreshold,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("rank-one violation: eigenvalue ratio {ratio:.3e} exceeds {tol:.1e}")]
    RankOneViolation { ratio: f64, tol: f64 },
    #[error("inconsistent fixings: {0}")]
    InconsistentFixings(String),
    #[error("enumeration of {count} assignments exceeds the cap {cap}")]
    EnumerationCap { count: u128, cap: usize },
    #[error("problem is infeasible")]
    Infeasible,
    #[error("conic solver failure: {0}")]
    Solver(String),
}

impl From<swipt_conic::ConicError> for CoreError {
    fn from(e: swipt_conic::ConicError) -> Self {
        CoreError::Solver(e.to_string())
    }
}
