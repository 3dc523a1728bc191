//! Acceptance suite: one PASS/FAIL line per criterion. Failed criteria
//! give a nonzero exit only with `ACCEPTANCE_STRICT=1`, so the remaining
//! workspace tests still run under `cargo test`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use swipt_bench::{
    oracle_check, oracle_config, paired_means, prepare_instance, run_sweep, scheme_seed, trace_is_monotone,
    ExperimentRecord, Instance, OracleCase, RunStatus, SweepSpec,
};
use swipt_core::config::mw_to_dbm;
use swipt_core::sca::SCA_MONOTONE_TOL;
use swipt_core::{
    build_codebook, calibrate_threshold, run_scheme, sca_solve, solve_fixed_assignment, Criterion, ScenarioConfig,
    SchemeId, TransmissionMode,
};

const NUM_SEEDS: u64 = 20;
const RANK_TOL: f64 = 1e-6;
const SCA_DB_TOL: f64 = 0.5;
const BINARITY_TOL: f64 = 1e-3;
const EH_TOL: f64 = 1e-9;
const NO_IRS_GAP_DB: f64 = 6.0;
/// Relative slack of the dominance checks, covering solver accuracy.
const DOMINANCE_TOL: f64 = 1e-4;
const BASELINES: [SchemeId; 3] = [SchemeId::B1, SchemeId::B2, SchemeId::B3];

struct Suite {
    failed: usize,
}

impl Suite {
    fn report(&mut self, id: usize, name: &str, pass: bool, detail: &str) {
        if !pass {
            self.failed += 1;
        }
        println!("{} criterion {id} ({name}): {detail}", if pass { "PASS" } else { "FAIL" });
        std::io::stdout().flush().ok();
    }
}

fn note(text: &str) {
    println!("    {text}");
}

fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn seeds(cfg: &ScenarioConfig) -> std::ops::Range<u64> {
    cfg.seed..cfg.seed + NUM_SEEDS
}

fn instances(cfg: &ScenarioConfig) -> Vec<(u64, Instance)> {
    let codebook = build_codebook(cfg.reflection_grid_size, &cfg.wavefront_offsets).expect("codebook");
    seeds(cfg)
        .map(|s| (s, prepare_instance(cfg, &codebook, s).expect("instance")))
        .collect()
}

fn oracle_suite(suite: &mut Suite, cases: &[OracleCase], eps: f64, secs: f64) {
    let max_err = cases.iter().map(OracleCase::relative_error).fold(0.0, f64::max);
    let bad: Vec<u64> = cases.iter().filter(|c| !c.passed() || c.node_limit_hit).map(|c| c.seed).collect();
    let unique = cases.iter().filter(|c| c.unique).count();
    suite.report(
        1,
        "oracle equivalence",
        bad.is_empty() && secs < 600.0,
        &format!(
            "{} instances, max relative error {max_err:.2e}, {unique} unique optima, mismatches {bad:?}, {secs:.0} s",
            cases.len()
        ),
    );

    let fixed = cases.iter().flat_map(|c| c.fixed_rank_ratios.iter().copied()).fold(0.0, f64::max);
    let relaxed = cases
        .iter()
        .flat_map(|c| c.relaxation_rank_ratios.iter().copied())
        .fold(0.0, f64::max);
    let relaxed_over = cases
        .iter()
        .flat_map(|c| c.relaxation_rank_ratios.iter())
        .filter(|&&r| r > RANK_TOL)
        .count();
    let relaxed_total: usize = cases.iter().map(|c| c.relaxation_rank_ratios.len()).sum();
    suite.report(
        2,
        "rank-one solutions",
        fixed <= RANK_TOL && relaxed <= RANK_TOL,
        &format!(
            "max lambda2/lambda1: fixed solves {fixed:.2e}, relaxations {relaxed:.2e} \
             ({relaxed_over} of {relaxed_total} relaxation blocks above {RANK_TOL:e})"
        ),
    );

    let bad: Vec<u64> = cases
        .iter()
        .filter(|c| !trace_is_monotone(&c.trace, eps))
        .map(|c| c.seed)
        .collect();
    let rows: usize = cases.iter().map(|c| c.trace.len()).sum();
    suite.report(
        3,
        "bound monotonicity",
        bad.is_empty(),
        &format!("{} traces, {rows} rows, violations {bad:?}", cases.len()),
    );
}

fn sca_quality(suite: &mut Suite, cfg: &ScenarioConfig, insts: &[(u64, Instance)], cases: &[OracleCase]) {
    let mut worst_gap = 0.0f64;
    let mut far = Vec::new();
    let mut lost = Vec::new();
    let mut non_monotone = Vec::new();
    let mut non_binary = Vec::new();
    for ((seed, inst), case) in insts.iter().zip(cases) {
        let bnb = case.bnb.as_ref().map(|b| mw_to_dbm(b.0));
        match (sca_solve(&inst.refined, cfg), bnb) {
            (Ok(out), bnb) => {
                if let Some(bnb) = bnb {
                    let gap = out.solution.objective_dbm() - bnb;
                    worst_gap = worst_gap.max(gap.abs());
                    if gap.abs() > SCA_DB_TOL {
                        far.push((*seed, (gap * 100.0).round() / 100.0));
                    }
                }
                if !out.is_monotone(SCA_MONOTONE_TOL) {
                    non_monotone.push(*seed);
                }
                if out.binarity_residual > BINARITY_TOL {
                    non_binary.push(*seed);
                }
            }
            (Err(_), Some(_)) => lost.push(*seed),
            (Err(_), None) => {}
        }
    }
    suite.report(
        4,
        "SCA quality",
        far.is_empty() && lost.is_empty() && non_monotone.is_empty() && non_binary.is_empty(),
        &format!(
            "worst gap {worst_gap:.2} dB; seeds beyond {SCA_DB_TOL} dB (seed, dB) {far:?}; \
             infeasible where BnB is feasible {lost:?}; non-monotone {non_monotone:?}; \
             binarity above {BINARITY_TOL:e} {non_binary:?}"
        ),
    );
}

fn eh_model(suite: &mut Suite) {
    let p = ScenarioConfig::default().eh_params;
    let mut worst = 0.0f64;
    for e in [0.1, 1.0, 5.0, 10.0, 15.0, 19.0] {
        let back = p
            .required_rf_power(e)
            .and_then(|x| p.harvested_power(x))
            .expect("attainable demand");
        worst = worst.max((back - e).abs() / e);
    }
    let req = p.required_rf_power(10.0).expect("attainable demand");
    let c = p.c_req(10.0).expect("attainable demand");
    let threshold = -c.ln() / p.rho;
    let mut log_err = 0.0f64;
    let mut sign_ok = true;
    for i in 0..100 {
        let prf = 100.0 + 150.0 * i as f64;
        let exp_slack = c - (-p.rho * prf).exp();
        let log_slack = prf - threshold;
        sign_ok &= (exp_slack >= 0.0) == (log_slack >= 0.0);
        let from_log = c * (1.0 - (-p.rho * log_slack).exp());
        log_err = log_err.max((from_log - exp_slack).abs() / c.max((-p.rho * prf).exp()));
    }
    suite.report(
        5,
        "harvesting model",
        worst <= EH_TOL && (6399.9..=6400.1).contains(&req) && sign_ok && log_err <= EH_TOL,
        &format!(
            "round trip {worst:.1e}, required(10 uW) = {req:.4} uW, C_req = {c:.5e}, \
             log/exp form {log_err:.1e}, signs agree {sign_ok}"
        ),
    );
}

/// Mean SCA power per sweep value over seeds where SCA is feasible at
/// every value.
fn sca_trend(records: &[ExperimentRecord]) -> Vec<(f64, f64)> {
    let mut values: BTreeMap<u64, BTreeSet<u64>> = BTreeMap::new();
    let mut all_seeds = BTreeSet::new();
    for r in records.iter().filter(|r| r.scheme == SchemeId::Sca) {
        all_seeds.insert(r.seed);
        let entry = values.entry(r.sweep_value.to_bits()).or_default();
        if r.feasible {
            entry.insert(r.seed);
        }
    }
    let common: BTreeSet<u64> = all_seeds
        .into_iter()
        .filter(|s| values.values().all(|ok| ok.contains(s)))
        .collect();
    let mut out: Vec<(f64, f64)> = values
        .keys()
        .filter_map(|&v| {
            let m = mean(
                records
                    .iter()
                    .filter(|r| r.scheme == SchemeId::Sca && r.sweep_value.to_bits() == v && common.contains(&r.seed))
                    .filter_map(|r| r.objective_dbm),
            )?;
            Some((f64::from_bits(v), m))
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

struct TrendOutcome {
    violations: usize,
    records: Vec<ExperimentRecord>,
}

fn trend(base: &ScenarioConfig, spec: &str, increasing: bool) -> TrendOutcome {
    let spec = SweepSpec::parse(spec).expect("sweep");
    let start = Instant::now();
    let mut schemes = vec![SchemeId::Sca];
    schemes.extend(BASELINES);
    let records = run_sweep(base, Some(&spec), &schemes, NUM_SEEDS).expect("sweep");
    let means = sca_trend(&records);
    let mut violations = 0;
    if means.len() < spec.values.len() {
        violations += spec.values.len() - means.len();
    }
    for w in means.windows(2) {
        let ok = if increasing { w[1].1 >= w[0].1 } else { w[1].1 <= w[0].1 };
        violations += usize::from(!ok);
    }
    let shown: Vec<String> = means.iter().map(|(v, m)| format!("{v}: {m:.2}")).collect();
    note(&format!(
        "{}: SCA mean dBm over seeds feasible at every point [{}] ({:.0} s)",
        spec.field,
        shown.join(", "),
        start.elapsed().as_secs_f64()
    ));
    for b in BASELINES {
        let sca = paired_means(&records, SchemeId::Sca, &[b]);
        let base_means = paired_means(&records, b, &[SchemeId::Sca]);
        let mut cells = Vec::new();
        for ((v, s, n), (_, bm, _)) in sca.iter().zip(&base_means) {
            match (s, bm) {
                (Some(s), Some(bm)) => {
                    if s > bm {
                        violations += 1;
                    }
                    cells.push(format!("{v}: {s:.2} vs {bm:.2} (n={n})"));
                }
                _ => cells.push(format!("{v}: no common feasible seed")),
            }
        }
        note(&format!("{}: SCA vs {b} paired means [{}]", spec.field, cells.join(", ")));
    }
    TrendOutcome { violations, records }
}

fn feasible_counts(records: &[ExperimentRecord]) -> String {
    let mut counts: BTreeMap<SchemeId, (usize, usize)> = BTreeMap::new();
    for r in records {
        let e = counts.entry(r.scheme).or_default();
        e.0 += usize::from(r.feasible);
        e.1 += 1;
    }
    counts
        .iter()
        .map(|(s, (f, n))| format!("{s} {f}/{n}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn dominance(suite: &mut Suite, cfg: &ScenarioConfig, insts: &[(u64, Instance)], sweeps: &[ExperimentRecord]) {
    let mut unverified: Vec<String> = sweeps
        .iter()
        .filter(|r| matches!(r.status, RunStatus::Error(_)))
        .map(|r| format!("{}={} seed {} {}", r.sweep_name, r.sweep_value, r.seed, r.scheme))
        .collect();
    let mut below_oracle = Vec::new();
    let mut below_linear = Vec::new();
    let mut checked = 0usize;
    let mut linear_pairs = 0usize;
    for (seed, inst) in insts {
        let run = |id: SchemeId, c: &ScenarioConfig| {
            run_scheme(id, &inst.offline, &inst.refined, c, scheme_seed(*seed, id)).expect("scheme run")
        };
        let results: Vec<_> = SchemeId::ALL.iter().map(|&id| (id, run(id, cfg))).collect();
        for (id, r) in &results {
            if let Some(rep) = &r.report {
                checked += 1;
                if !rep.pass {
                    unverified.push(format!("criterion-1 seed {seed} {id}"));
                }
            }
        }
        let oracle = results[0].1.objective_mw();
        for (id, r) in &results {
            let Some(p) = r.objective_mw() else { continue };
            let reference = match id {
                SchemeId::B1 | SchemeId::Sca | SchemeId::BnB | SchemeId::LinearEh => oracle,
                // these draw from the full codebook: the reference is the
                // optimal covariance design on the same modes
                SchemeId::B2 | SchemeId::B3 => {
                    let assign = r.assignment.as_ref().expect("feasible result has modes");
                    solve_fixed_assignment(&inst.offline, assign, cfg)
                        .expect("fixed solve")
                        .map(|s| s.objective_mw)
                }
                SchemeId::Oracle | SchemeId::NoIrs => None,
            };
            if let Some(o) = reference {
                if p < o * (1.0 - DOMINANCE_TOL) {
                    below_oracle.push(format!("seed {seed} {id}"));
                }
            }
        }
        for e_req in [5.0, 10.0, 15.0] {
            let c = ScenarioConfig {
                min_harvest_uw: e_req,
                ..cfg.clone()
            };
            let (sca, lin) = if e_req == cfg.min_harvest_uw {
                (results[2].1.objective_mw(), results[6].1.objective_mw())
            } else {
                let lin = run(SchemeId::LinearEh, &c);
                if let Some(rep) = &lin.report {
                    checked += 1;
                    if !rep.pass {
                        unverified.push(format!("criterion-1 seed {seed} LinearEH at {e_req} uW"));
                    }
                }
                (run(SchemeId::Sca, &c).objective_mw(), lin.objective_mw())
            };
            if let (Some(s), Some(l)) = (sca, lin) {
                linear_pairs += 1;
                if l < s * (1.0 - DOMINANCE_TOL) {
                    below_linear.push(format!("seed {seed} at {e_req} uW: {:.2} < {:.2} dBm", mw_to_dbm(l), mw_to_dbm(s)));
                }
            }
        }
    }
    suite.report(
        7,
        "dominance and feasibility",
        unverified.is_empty() && below_oracle.is_empty() && below_linear.is_empty(),
        &format!(
            "{} sweep records and {checked} criterion-1 solutions verified, failures {unverified:?}; \
             below reference {below_oracle:?}; linear-EH below SCA in {} of {linear_pairs} pairs {below_linear:?}",
            sweeps.len(),
            below_linear.len()
        ),
    );
}

fn no_irs_gap(suite: &mut Suite, cfg: &ScenarioConfig, gamma_records: &[ExperimentRecord]) {
    let sca: BTreeMap<u64, f64> = gamma_records
        .iter()
        .filter(|r| r.scheme == SchemeId::Sca && r.sweep_value == cfg.min_sinr_db)
        .filter_map(|r| r.objective_dbm.map(|o| (r.seed, o)))
        .collect();
    let mut pairs = Vec::new();
    let mut within_budget = 0;
    for (seed, inst) in instances(cfg) {
        let Some(&s) = sca.get(&seed) else { continue };
        let r = run_scheme(SchemeId::NoIrs, &inst.offline, &inst.refined, cfg, seed).expect("no-IRS run");
        within_budget += usize::from(r.is_feasible());
        if let Some(need) = r.unbudgeted_mw {
            pairs.push((mw_to_dbm(need), s));
        }
    }
    let no_irs = mean(pairs.iter().map(|p| p.0));
    let with_irs = mean(pairs.iter().map(|p| p.1));
    let gap = no_irs.zip(with_irs).map(|(a, b)| a - b);
    suite.report(
        8,
        "no-IRS gap",
        gap.is_some_and(|g| g >= NO_IRS_GAP_DB),
        &format!(
            "mean no-IRS {:.2} dBm (budget ignored; {within_budget} within budget) vs SCA {:.2} dBm over {} seeds, gap {:.2} dB",
            no_irs.unwrap_or(f64::NAN),
            with_irs.unwrap_or(f64::NAN),
            pairs.len(),
            gap.unwrap_or(f64::NAN)
        ),
    );
}

fn preselection(suite: &mut Suite, cfg: &ScenarioConfig, codebook: &[TransmissionMode]) {
    let mut failures = Vec::new();
    let sizes = [2, 4, 6, 8];
    for seed in seeds(cfg) {
        let scenario = swipt_core::sample_scenario(cfg, seed).expect("scenario");
        let offline = swipt_core::synth_channels(cfg, &scenario, codebook).expect("channels");
        for criterion in [Criterion::C1, Criterion::C2, Criterion::C3] {
            let mut prev: Vec<usize> = Vec::new();
            for s in sizes {
                let set = calibrate_threshold(&offline, criterion, s, Some(cfg.omega)).expect("calibration");
                if set.len() != s {
                    failures.push(format!("seed {seed} {criterion:?} size {} for {s}", set.len()));
                }
                if criterion != Criterion::C2 && !prev.iter().all(|m| set.mode_indices.contains(m)) {
                    failures.push(format!("seed {seed} {criterion:?} not nested at {s}"));
                }
                if criterion == Criterion::C1 {
                    let c3 = calibrate_threshold(&offline, Criterion::C3, s, Some(1.0)).expect("calibration");
                    if c3.mode_indices != set.mode_indices {
                        failures.push(format!("seed {seed} C3 with unit weight differs at {s}"));
                    }
                }
                prev = set.mode_indices;
            }
        }
    }
    suite.report(
        9,
        "pre-selection",
        failures.is_empty(),
        &format!("{} seeds, sizes {sizes:?}, failures {failures:?}", NUM_SEEDS),
    );
}

fn main() -> ExitCode {
    let mut suite = Suite { failed: 0 };

    let small = oracle_config();
    let start = Instant::now();
    let cases = oracle_check(&small, seeds(&small)).expect("oracle check");
    oracle_suite(&mut suite, &cases, small.eps_bnb, start.elapsed().as_secs_f64());

    let small_insts = instances(&small);
    sca_quality(&mut suite, &small, &small_insts, &cases);
    eh_model(&mut suite);

    let cfg = ScenarioConfig::default();
    let gamma = trend(&cfg, "minSinrDb=4,6,8,10", true);
    let size = trend(&cfg, "targetModeSetSize=2,4,6,8", false);
    let antennas = trend(&cfg, "numAntennas=4,6,8", false);
    let sweeps: Vec<ExperimentRecord> = [&gamma, &size, &antennas]
        .iter()
        .flat_map(|t| t.records.iter().cloned())
        .collect();
    note(&format!("feasible runs: {}", feasible_counts(&sweeps)));
    let violations = gamma.violations + size.violations + antennas.violations;
    suite.report(
        6,
        "trends",
        violations == 0,
        &format!(
            "violating points: minSinrDb {}, targetModeSetSize {}, numAntennas {}",
            gamma.violations, size.violations, antennas.violations
        ),
    );

    dominance(&mut suite, &small, &small_insts, &sweeps);
    no_irs_gap(&mut suite, &cfg, &gamma.records);
    let codebook = build_codebook(cfg.reflection_grid_size, &cfg.wavefront_offsets).expect("codebook");
    preselection(&mut suite, &cfg, &codebook);

    println!("{} of 9 criteria failed", suite.failed);
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if suite.failed == 0 || !strict {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
