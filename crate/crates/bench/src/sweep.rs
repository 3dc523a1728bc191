//! Parameter sweeps over seeded instances.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use swipt_core::{
    build_codebook, calibrate_threshold, run_scheme, sample_scenario, synth_channels, ChannelSet, CoreError,
    ScenarioConfig, SchemeId, SchemeResult, TransmissionMode,
};

use crate::record::{ExperimentRecord, RunStatus};
use crate::BenchError;

/// A configuration field and the values it takes.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// JSON name of the field, dotted for nested fields.
    pub field: String,
    pub values: Vec<f64>,
}

impl SweepSpec {
    /// Parses `FIELD=v1,v2,...`.
    pub fn parse(text: &str) -> Result<Self, BenchError> {
        let (field, list) = text
            .split_once('=')
            .ok_or_else(|| BenchError::Parse(format!("sweep `{text}` is not FIELD=v1,v2,...")))?;
        let values = list
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| BenchError::Parse(format!("sweep value `{v}` is not a number")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if field.is_empty() || values.is_empty() {
            return Err(BenchError::Parse(format!("empty sweep `{text}`")));
        }
        Ok(Self {
            field: field.trim().to_string(),
            values,
        })
    }

    /// Configurations of every sweep point, checked before any run.
    pub fn configs(&self, base: &ScenarioConfig) -> Result<Vec<ScenarioConfig>, BenchError> {
        self.values
            .iter()
            .map(|&v| {
                let cfg = base.with_field(&self.field, serde_json::Value::from(v))?;
                cfg.validate()?;
                Ok(cfg)
            })
            .collect()
    }
}

/// Offline and refined channels of one seeded instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub offline: ChannelSet,
    pub refined: ChannelSet,
}

/// Samples, synthesizes and refines the instance of `seed`.
pub fn prepare_instance(cfg: &ScenarioConfig, codebook: &[TransmissionMode], seed: u64) -> Result<Instance, CoreError> {
    let scenario = sample_scenario(cfg, seed)?;
    let offline = synth_channels(cfg, &scenario, codebook)?;
    let set = calibrate_threshold(&offline, cfg.criterion, cfg.target_mode_set_size, Some(cfg.omega))?;
    let refined = offline.restrict(&set.mode_indices);
    Ok(Instance { offline, refined })
}

/// Seed of a scheme's internal randomness, derived from the instance seed
/// so every scheme sees the same channels.
pub fn scheme_seed(seed: u64, scheme: SchemeId) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ (scheme as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Runs `scheme` on a prepared instance and times it.
pub fn run_timed(
    scheme: SchemeId,
    inst: &Instance,
    cfg: &ScenarioConfig,
    seed: u64,
) -> (Result<SchemeResult, CoreError>, u64) {
    let start = Instant::now();
    let r = run_scheme(scheme, &inst.offline, &inst.refined, cfg, scheme_seed(seed, scheme));
    (r, start.elapsed().as_millis() as u64)
}

fn record(
    name: &str,
    value: f64,
    seed: u64,
    scheme: SchemeId,
    outcome: Result<SchemeResult, CoreError>,
    wall_millis: u64,
) -> ExperimentRecord {
    let mut rec = ExperimentRecord {
        sweep_name: name.to_string(),
        sweep_value: value,
        seed,
        scheme,
        objective_dbm: None,
        iterations: 0,
        wall_millis,
        feasible: false,
        gap_at_termination: None,
        binarity_residual: None,
        status: RunStatus::Infeasible,
    };
    match outcome {
        Ok(r) => {
            rec.iterations = r.iterations;
            rec.gap_at_termination = r.gap;
            rec.binarity_residual = r.binarity_residual;
            let verified = r.report.as_ref().is_none_or(|rep| rep.pass);
            match r.objective_dbm() {
                Some(_) if !verified => rec.status = RunStatus::error("reported solution failed verification"),
                Some(obj) => {
                    rec.objective_dbm = Some(obj);
                    rec.feasible = true;
                    rec.status = RunStatus::Ok;
                }
                None => {}
            }
        }
        Err(e) => rec.status = RunStatus::error(e.to_string()),
    }
    rec
}

/// Runs every scheme on seeds `cfg.seed .. cfg.seed + num_seeds` at every
/// sweep point (a single point named `none` without a sweep).
///
/// Cells run in parallel; records come back sorted by sweep value, seed
/// and scheme. Failures are recorded, never dropped; a solution that
/// fails verification is recorded as an error.
pub fn run_sweep(
    base: &ScenarioConfig,
    sweep: Option<&SweepSpec>,
    schemes: &[SchemeId],
    num_seeds: u64,
) -> Result<Vec<ExperimentRecord>, BenchError> {
    let (name, points): (String, Vec<(f64, ScenarioConfig)>) = match sweep {
        Some(s) => (s.field.clone(), s.values.iter().copied().zip(s.configs(base)?).collect()),
        None => {
            base.validate()?;
            ("none".into(), vec![(0.0, base.clone())])
        }
    };
    let mut codebooks = BTreeMap::new();
    for (_, cfg) in &points {
        let key = (cfg.reflection_grid_size, format!("{:?}", cfg.wavefront_offsets));
        if !codebooks.contains_key(&key) {
            codebooks.insert(key.clone(), build_codebook(cfg.reflection_grid_size, &cfg.wavefront_offsets)?);
        }
    }
    let cells: Vec<(f64, &ScenarioConfig, u64)> = points
        .iter()
        .flat_map(|(v, cfg)| (0..num_seeds).map(move |i| (*v, cfg, cfg.seed.wrapping_add(i))))
        .collect();
    let mut records: Vec<ExperimentRecord> = cells
        .par_iter()
        .flat_map_iter(|&(value, cfg, seed)| {
            let key = (cfg.reflection_grid_size, format!("{:?}", cfg.wavefront_offsets));
            let inst = prepare_instance(cfg, &codebooks[&key], seed);
            schemes
                .iter()
                .map(|&scheme| match &inst {
                    Ok(inst) => {
                        let (r, ms) = run_timed(scheme, inst, cfg, seed);
                        record(&name, value, seed, scheme, r, ms)
                    }
                    Err(e) => record(&name, value, seed, scheme, Err(e.clone()), 0),
                })
                .collect::<Vec<_>>()
        })
        .collect();
    records.sort_by(|a, b| {
        a.sweep_value
            .total_cmp(&b.sweep_value)
            .then(a.seed.cmp(&b.seed))
            .then(a.scheme.cmp(&b.scheme))
    });
    Ok(records)
}

/// Mean objective (dB domain) of `scheme` per sweep value over the seeds
/// where every scheme in `paired` is feasible at that value; `None` where
/// no such seed exists.
pub fn paired_means(records: &[ExperimentRecord], scheme: SchemeId, paired: &[SchemeId]) -> Vec<(f64, Option<f64>, usize)> {
    let mut by_point: BTreeMap<(u64, u64), Vec<&ExperimentRecord>> = BTreeMap::new();
    for r in records {
        by_point.entry((r.sweep_value.to_bits(), r.seed)).or_default().push(r);
    }
    let mut acc: Vec<(f64, f64, usize)> = Vec::new();
    for ((vbits, _), rows) in by_point {
        let value = f64::from_bits(vbits);
        let ok = paired
            .iter()
            .chain(std::iter::once(&scheme))
            .all(|s| rows.iter().any(|r| r.scheme == *s && r.feasible));
        if acc.last().is_none_or(|a| a.0.to_bits() != vbits) {
            acc.push((value, 0.0, 0));
        }
        if ok {
            let obj = rows
                .iter()
                .find(|r| r.scheme == scheme)
                .and_then(|r| r.objective_dbm)
                .expect("feasible row");
            let last = acc.last_mut().expect("pushed");
            last.1 += obj;
            last.2 += 1;
        }
    }
    acc.sort_by(|a, b| a.0.total_cmp(&b.0));
    acc.into_iter()
        .map(|(v, sum, n)| (v, (n > 0).then(|| sum / n as f64), n))
        .collect()
}
