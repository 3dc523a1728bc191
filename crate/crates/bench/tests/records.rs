//! CSV records, sweep specifications and seeded sweeps.

use proptest::prelude::*;
use swipt_bench::record::{HEADER, INFEASIBLE};
use swipt_bench::{
    oracle_config, paired_means, parse_records, records_csv, run_sweep, ExperimentRecord, RunStatus, SweepSpec,
};
use swipt_core::SchemeId;

fn row(value: f64, seed: u64, scheme: SchemeId, obj: Option<f64>) -> ExperimentRecord {
    ExperimentRecord {
        sweep_name: "minSinrDb".into(),
        sweep_value: value,
        seed,
        scheme,
        objective_dbm: obj,
        iterations: 3,
        wall_millis: 17,
        feasible: obj.is_some(),
        gap_at_termination: obj.map(|_| 1e-5),
        binarity_residual: None,
        status: if obj.is_some() {
            RunStatus::Ok
        } else {
            RunStatus::Infeasible
        },
    }
}

#[test]
fn empty_record_list_is_header_only() {
    let csv = records_csv(&[]);
    assert_eq!(csv, format!("{}\n", HEADER.join(",")));
    assert!(parse_records(csv.as_bytes()).unwrap().is_empty());
}

#[test]
fn records_round_trip() {
    let mut recs = vec![
        row(4.0, 0, SchemeId::Sca, Some(27.25)),
        row(4.0, 0, SchemeId::B3, None),
        row(6.0, 1, SchemeId::B1, Some(-3.125e-2)),
    ];
    recs.push(ExperimentRecord {
        status: RunStatus::error("solver stalled, \"badly\"\nat node 3"),
        ..row(6.0, 1, SchemeId::BnB, None)
    });
    let csv = records_csv(&recs);
    assert_eq!(parse_records(csv.as_bytes()).unwrap(), recs);
}

#[test]
fn infeasible_rows_carry_the_sentinel() {
    let csv = records_csv(&[row(8.0, 2, SchemeId::B2, None)]);
    let line = csv.lines().nth(1).unwrap();
    let fields: Vec<&str> = line.split(',').collect();
    assert_eq!(fields.len(), HEADER.len());
    assert_eq!(fields[4], INFEASIBLE);
    assert_eq!(fields[7], "false");
    // the sentinel never reads as a finite objective
    assert!(!fields[4].parse::<f64>().is_ok_and(f64::is_finite));
}

#[test]
fn inconsistent_rows_are_rejected() {
    let good = records_csv(&[row(4.0, 0, SchemeId::Sca, Some(20.0))]);
    let bad = good.replace(",true,", ",false,");
    assert!(parse_records(bad.as_bytes()).is_err());
    let short = good.replace(",ok", "");
    assert!(parse_records(short.as_bytes()).is_err());
    let renamed = good.replace("schemeId", "scheme");
    assert!(parse_records(renamed.as_bytes()).is_err());
}

#[test]
fn sweep_spec_parsing() {
    let s = SweepSpec::parse("minSinrDb=4, 6,8,10").unwrap();
    assert_eq!(s.field, "minSinrDb");
    assert_eq!(s.values, vec![4.0, 6.0, 8.0, 10.0]);
    assert!(SweepSpec::parse("minSinrDb").is_err());
    assert!(SweepSpec::parse("minSinrDb=4,x").is_err());
    assert!(SweepSpec::parse("=4").is_err());
    let base = oracle_config();
    assert_eq!(s.configs(&base).unwrap()[2].min_sinr_db, 8.0);
    assert!(SweepSpec::parse("noSuchField=1").unwrap().configs(&base).is_err());
    assert!(SweepSpec::parse("numTiles=0").unwrap().configs(&base).is_err());
}

#[test]
fn sweep_emits_one_record_per_cell_deterministically() {
    let base = oracle_config();
    let spec = SweepSpec::parse("minSinrDb=4,6,8,10").unwrap();
    let schemes = [SchemeId::B1, SchemeId::B2, SchemeId::B3, SchemeId::NoIrs];
    let a = run_sweep(&base, Some(&spec), &schemes, 3).unwrap();
    assert_eq!(a.len(), 4 * 3 * 4);
    for r in &a {
        assert_eq!(r.feasible, r.objective_dbm.is_some());
        assert!(!matches!(r.status, RunStatus::Error(_)), "{r:?}");
    }
    let b = run_sweep(&base, Some(&spec), &schemes, 3).unwrap();
    let strip = |v: &[ExperimentRecord]| {
        v.iter()
            .map(|r| ExperimentRecord {
                wall_millis: 0,
                ..r.clone()
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&a), strip(&b));
    let means = paired_means(&a, SchemeId::B1, &[SchemeId::B1]);
    assert_eq!(means.iter().map(|m| m.0).collect::<Vec<_>>(), spec.values);
}

#[test]
fn paired_means_use_common_seeds() {
    let recs = vec![
        row(4.0, 0, SchemeId::Sca, Some(10.0)),
        row(4.0, 0, SchemeId::B1, Some(12.0)),
        row(4.0, 1, SchemeId::Sca, Some(20.0)),
        row(4.0, 1, SchemeId::B1, None),
        row(6.0, 0, SchemeId::Sca, Some(30.0)),
        row(6.0, 0, SchemeId::B1, None),
    ];
    let m = paired_means(&recs, SchemeId::Sca, &[SchemeId::B1]);
    assert_eq!(m, vec![(4.0, Some(10.0), 1), (6.0, None, 0)]);
    let alone = paired_means(&recs, SchemeId::Sca, &[]);
    assert_eq!(alone[0], (4.0, Some(15.0), 2));
}

proptest! {
    #[test]
    fn arbitrary_records_round_trip(
        value in -50.0f64..50.0,
        seed in any::<u64>(),
        obj in prop::option::of(-100.0f64..100.0),
        iterations in 0usize..10_000,
        gap in prop::option::of(0.0f64..1.0),
        msg in "[ -~]{0,20}",
    ) {
        let status = match obj {
            Some(_) => RunStatus::Ok,
            None if msg.is_empty() => RunStatus::Infeasible,
            None => RunStatus::error(&msg),
        };
        let rec = ExperimentRecord {
            iterations,
            gap_at_termination: gap,
            binarity_residual: gap,
            status,
            ..row(value, seed, SchemeId::LinearEh, obj)
        };
        let back = parse_records(records_csv(std::slice::from_ref(&rec)).as_bytes()).unwrap();
        prop_assert_eq!(back, vec![rec]);
    }
}
