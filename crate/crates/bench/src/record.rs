//! Experiment records and their CSV form.

use std::io::{Read, Write};
use std::str::FromStr;

use swipt_core::SchemeId;

use crate::BenchError;

/// Column order of the CSV form.
pub const HEADER: [&str; 11] = [
    "sweepName",
    "sweepValue",
    "seed",
    "schemeId",
    "objectiveDbm",
    "iterations",
    "wallMillis",
    "feasible",
    "gapAtTermination",
    "binarityResidual",
    "status",
];

/// Objective sentinel of infeasible or failed runs.
pub const INFEASIBLE: &str = "INF";

/// How a run ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    Infeasible,
    /// The run failed; the message never contains commas or newlines.
    Error(String),
}

impl RunStatus {
    pub fn error(msg: impl AsRef<str>) -> Self {
        RunStatus::Error(msg.as_ref().replace([',', '\n', '\r', '"'], " "))
    }

    fn to_field(&self) -> String {
        match self {
            RunStatus::Ok => "ok".into(),
            RunStatus::Infeasible => "infeasible".into(),
            RunStatus::Error(m) => format!("error: {m}"),
        }
    }

    fn from_field(s: &str) -> Result<Self, BenchError> {
        match s {
            "ok" => Ok(RunStatus::Ok),
            "infeasible" => Ok(RunStatus::Infeasible),
            _ => s
                .strip_prefix("error: ")
                .map(|m| RunStatus::Error(m.to_string()))
                .ok_or_else(|| BenchError::Parse(format!("bad status `{s}`"))),
        }
    }
}

/// One (sweep point, seed, scheme) outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub sweep_name: String,
    pub sweep_value: f64,
    pub seed: u64,
    pub scheme: SchemeId,
    /// `None` exactly when the run is not feasible.
    pub objective_dbm: Option<f64>,
    pub iterations: usize,
    pub wall_millis: u64,
    pub feasible: bool,
    pub gap_at_termination: Option<f64>,
    pub binarity_residual: Option<f64>,
    pub status: RunStatus,
}

fn opt_field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_num<T: FromStr>(s: &str, col: &str) -> Result<T, BenchError> {
    s.parse()
        .map_err(|_| BenchError::Parse(format!("column {col}: `{s}` is not a number")))
}

fn parse_opt(s: &str, col: &str) -> Result<Option<f64>, BenchError> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_num(s, col).map(Some)
    }
}

impl ExperimentRecord {
    fn to_fields(&self) -> [String; 11] {
        [
            self.sweep_name.clone(),
            self.sweep_value.to_string(),
            self.seed.to_string(),
            self.scheme.to_string(),
            self.objective_dbm.map(|x| x.to_string()).unwrap_or_else(|| INFEASIBLE.into()),
            self.iterations.to_string(),
            self.wall_millis.to_string(),
            self.feasible.to_string(),
            opt_field(self.gap_at_termination),
            opt_field(self.binarity_residual),
            self.status.to_field(),
        ]
    }

    fn from_fields(f: &csv::StringRecord) -> Result<Self, BenchError> {
        if f.len() != HEADER.len() {
            return Err(BenchError::Parse(format!("expected {} columns, got {}", HEADER.len(), f.len())));
        }
        let objective_dbm = match &f[4] {
            INFEASIBLE => None,
            s => Some(parse_num(s, HEADER[4])?),
        };
        let feasible: bool = f[7]
            .parse()
            .map_err(|_| BenchError::Parse(format!("bad feasible flag `{}`", &f[7])))?;
        if feasible != objective_dbm.is_some() {
            return Err(BenchError::Parse("objective present iff feasible".into()));
        }
        Ok(Self {
            sweep_name: f[0].to_string(),
            sweep_value: parse_num(&f[1], HEADER[1])?,
            seed: parse_num(&f[2], HEADER[2])?,
            scheme: f[3].parse().map_err(|e| BenchError::Parse(format!("{e}")))?,
            objective_dbm,
            iterations: parse_num(&f[5], HEADER[5])?,
            wall_millis: parse_num(&f[6], HEADER[6])?,
            feasible,
            gap_at_termination: parse_opt(&f[8], HEADER[8])?,
            binarity_residual: parse_opt(&f[9], HEADER[9])?,
            status: RunStatus::from_field(&f[10])?,
        })
    }
}

/// Writes the header and one line per record.
pub fn emit_records<W: Write>(records: &[ExperimentRecord], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in records {
        w.write_record(r.to_fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads records written by [`emit_records`].
pub fn parse_records<R: Read>(input: R) -> Result<Vec<ExperimentRecord>, BenchError> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(BenchError::Parse("unexpected header".into()));
    }
    rd.records().map(|r| ExperimentRecord::from_fields(&r?)).collect()
}

/// Records as a CSV string.
pub fn records_csv(records: &[ExperimentRecord]) -> String {
    let mut buf = Vec::new();
    emit_records(records, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("utf-8 output")
}
