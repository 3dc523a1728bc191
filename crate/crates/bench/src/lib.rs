//! Batch experiments: seeded sweeps over schemes, CSV records and the
//! branch-and-bound oracle check.

pub mod oracle;
pub mod record;
pub mod sweep;

use thiserror::Error;

pub use oracle::{oracle_check, oracle_config, trace_is_monotone, OracleCase};
pub use record::{emit_records, parse_records, records_csv, ExperimentRecord, RunStatus};
pub use sweep::{paired_means, prepare_instance, run_sweep, scheme_seed, Instance, SweepSpec};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] swipt_core::CoreError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}
