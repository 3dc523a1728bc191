//! Logistic harvesting curve: reference values, inversion and the
//! log-domain form of the harvesting constraint.

use approx::assert_relative_eq;
use proptest::prelude::*;
use swipt_core::{CoreError, EhParams};

fn params() -> EhParams {
    EhParams {
        a: 20.0,
        c: 6400.0,
        rho: 0.003,
    }
}

#[test]
fn output_at_inflection_is_half_saturation() {
    let p = params();
    assert!((p.xi() - 4.6e-9).abs() < 1e-10);
    assert!((p.harvested_power(6400.0).unwrap() - 10.0).abs() < 1e-6);
}

#[test]
fn output_far_above_inflection_saturates() {
    let p = params();
    let e = p.harvested_power(64_000.0).unwrap();
    assert!((e - 20.0).abs() < 1e-6);
    assert!(e <= 20.0 + 1e-9);
}

#[test]
fn required_power_for_ten_microwatts() {
    let p = params().required_rf_power(10.0).unwrap();
    assert!((6399.9..=6400.1).contains(&p));
    assert!((p - 6400.0).abs() < 1e-3);
}

#[test]
fn required_power_matches_bisection() {
    let p = params();
    for e in [0.1, 1.0, 5.0, 10.0, 15.0, 19.0] {
        let (mut lo, mut hi) = (0.0, 1e6);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if p.harvested_power(mid).unwrap() < e {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert_relative_eq!(p.required_rf_power(e).unwrap(), 0.5 * (lo + hi), max_relative = 1e-9);
    }
}

#[test]
fn inversion_round_trip() {
    let p = params();
    for e in [0.1, 1.0, 5.0, 10.0, 15.0, 19.0] {
        let back = p.harvested_power(p.required_rf_power(e).unwrap()).unwrap();
        assert_relative_eq!(back, e, max_relative = 1e-9);
    }
}

#[test]
fn c_req_constant() {
    let p = params();
    let c = p.c_req(10.0).unwrap();
    // direct evaluation: (20 / (10 + 10 Xi) - 1) exp(-19.2)
    let xi = p.xi();
    assert_relative_eq!(c, (20.0 / (10.0 + 10.0 * xi) - 1.0) * (-19.2f64).exp(), max_relative = 1e-12);
    assert_relative_eq!(c, 4.58718e-9, max_relative = 1e-5);
    assert!((c - 4.57e-9).abs() / 4.57e-9 < 1e-2, "C_req = {c:e}");
    let threshold = -c.ln() / p.rho;
    assert_relative_eq!(threshold, p.required_rf_power(10.0).unwrap(), max_relative = 1e-6);
}

#[test]
fn log_domain_constraint_matches_exponential_form() {
    let p = params();
    let e_req = 10.0;
    let c = p.c_req(e_req).unwrap();
    let threshold = -c.ln() / p.rho;
    for i in 0..100 {
        let prf = 100.0 + 150.0 * i as f64;
        // exponential form: C_req - exp(-rho P) >= 0; log form: P - threshold >= 0
        let exp_slack = c - (-p.rho * prf).exp();
        let log_slack = prf - threshold;
        assert_eq!(exp_slack >= 0.0, log_slack >= 0.0, "P = {prf}");
        // both sides are the same function up to a monotone map
        let from_log = c * (1.0 - (-p.rho * log_slack).exp());
        assert!((from_log - exp_slack).abs() <= 1e-9 * c.max((-p.rho * prf).exp()));
    }
}

#[test]
fn demand_at_saturation_is_rejected() {
    assert!(matches!(
        params().required_rf_power(20.0),
        Err(CoreError::UnattainableDemand { .. })
    ));
}

#[test]
fn linear_efficiency_is_chord_slope_at_inflection() {
    let p = params();
    assert_relative_eq!(p.inflection_efficiency(), 10.0 / 6400.0, max_relative = 1e-6);
}

proptest! {
    #[test]
    fn harvested_power_is_monotone(x in 0.0f64..50_000.0, dx in 1e-3f64..1_000.0) {
        let p = params();
        prop_assert!(p.harvested_power(x + dx).unwrap() >= p.harvested_power(x).unwrap());
    }

    #[test]
    fn harvested_power_stays_below_saturation(x in 0.0f64..1e7) {
        let e = params().harvested_power(x).unwrap();
        prop_assert!((0.0..=20.0 + 1e-9).contains(&e));
    }

    #[test]
    fn inversion_holds_on_the_attainable_range(e in 1e-3f64..19.99) {
        let p = params();
        let back = p.harvested_power(p.required_rf_power(e).unwrap()).unwrap();
        prop_assert!((back - e).abs() <= 1e-8 * e.max(1.0));
    }
}
