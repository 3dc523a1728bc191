//! Fixed-assignment solves against closed forms, the relaxation census
//! and the relaxation at complete fixings.

use num_complex::Complex64;
use swipt_core::config::dbm_to_mw;
use swipt_core::{
    build_codebook, calibrate_threshold, census, sample_scenario, solve_fixed_assignment, solve_fixed_with,
    solve_relaxed, synth_channels, verify_solution, BeamformingSolution, Census, ChannelSet, Criterion, FixedOptions, Fixings,
    ModeAssignment, RelaxOptions, RelaxOutcome, ScenarioConfig, FEAS_TOL,
};

/// One IR, no ER, a single tile with one mode: `h = direct + reflected`.
fn single_user(direct: [Complex64; 4], reflected: [Complex64; 4]) -> ChannelSet {
    let mut text = String::from("channels 4 1 0 1 1\nmodes 0\n");
    for (n, z) in direct.iter().enumerate() {
        text += &format!("IR 0 0 0 {n} {:e} {:e}\n", z.re, z.im);
    }
    for (n, z) in reflected.iter().enumerate() {
        text += &format!("IR 0 0 1 {n} {:e} {:e}\n", z.re, z.im);
    }
    ChannelSet::from_text(&text).unwrap()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn single_user_cfg() -> ScenarioConfig {
    ScenarioConfig {
        num_irs: 1,
        num_ers: 0,
        num_tiles: 1,
        target_mode_set_size: 1,
        ..ScenarioConfig::default()
    }
}

fn refined(cfg: &ScenarioConfig, seed: u64) -> ChannelSet {
    let cb = build_codebook(cfg.reflection_grid_size, &cfg.wavefront_offsets).unwrap();
    let ch = synth_channels(cfg, &sample_scenario(cfg, seed).unwrap(), &cb).unwrap();
    let set = calibrate_threshold(&ch, Criterion::C1, cfg.target_mode_set_size, None).unwrap();
    ch.restrict(&set.mode_indices)
}

/// First two-tile assignment with a feasible fixed solve.
fn feasible_assignment(ch: &ChannelSet, cfg: &ScenarioConfig) -> (ModeAssignment, BeamformingSolution) {
    let s = ch.num_modes();
    (0..s * s)
        .find_map(|i| {
            let assign = ModeAssignment::new(vec![i / s, i % s]);
            solve_fixed_assignment(ch, &assign, cfg).unwrap().map(|sol| (assign, sol))
        })
        .expect("some assignment is feasible")
}

fn small_cfg() -> ScenarioConfig {
    ScenarioConfig {
        num_irs: 1,
        num_ers: 1,
        target_mode_set_size: 3,
        ..ScenarioConfig::default()
    }
}

#[test]
fn single_user_power_is_gamma_sigma_over_gain() {
    let cfg = single_user_cfg();
    let direct = [c(1e-5, 2e-5), c(-3e-5, 0.0), c(0.0, 1e-5), c(2e-5, -1e-5)];
    let refl = [c(4e-5, 0.0), c(1e-5, 1e-5), c(-2e-5, 3e-5), c(0.0, -1e-5)];
    let ch = single_user(direct, refl);
    let gain: f64 = direct.iter().zip(&refl).map(|(a, b)| (a + b).norm_sqr()).sum();
    let expected = cfg.gamma() * dbm_to_mw(cfg.noise_power_ir_dbm) / gain;
    let assign = ModeAssignment::new(vec![0]);
    for opts in [
        FixedOptions::default(),
        FixedOptions {
            mrt: true,
            ..FixedOptions::default()
        },
    ] {
        let sol = solve_fixed_with(&ch, &assign, &cfg, &opts).unwrap().expect("feasible");
        assert!(
            (sol.objective_mw - expected).abs() <= 1e-5 * expected,
            "{} vs {expected}",
            sol.objective_mw
        );
        assert!(sol.v.trace().re <= 1e-6 * expected);
        assert!(sol.rank_ratios[0] <= 1e-6);
    }
}

#[test]
fn energy_only_power_matches_the_best_eigenvalue() {
    // with one ER and an IR whose SINR target is negligible, the optimum
    // beams all power along the ER channel: P = P_rf / |g|^2
    let g = [c(3e-2, 0.0), c(0.0, 1e-2), c(-2e-2, 1e-2), c(1e-2, 0.0)];
    let mut text = String::from("channels 4 1 1 1 1\nmodes 0\n");
    for (n, z) in g.iter().enumerate() {
        text += &format!("IR 0 0 0 {n} {:e} {:e}\n", z.re * 1e-3, z.im * 1e-3);
        text += &format!("IR 0 0 1 {n} 0 0\n");
        text += &format!("ER 0 0 0 {n} {:e} {:e}\n", z.re, z.im);
        text += &format!("ER 0 0 1 {n} 0 0\n");
    }
    let ch = ChannelSet::from_text(&text).unwrap();
    let cfg = ScenarioConfig {
        num_irs: 1,
        num_ers: 1,
        num_tiles: 1,
        target_mode_set_size: 1,
        min_sinr_db: -60.0,
        ..ScenarioConfig::default()
    };
    let gain: f64 = g.iter().map(|z| z.norm_sqr()).sum();
    let expected = cfg.required_rf_mw().unwrap() / gain;
    let sol = solve_fixed_assignment(&ch, &ModeAssignment::new(vec![0]), &cfg)
        .unwrap()
        .expect("feasible");
    assert!((sol.objective_mw - expected).abs() <= 1e-4 * expected, "{} vs {expected}", sol.objective_mw);
}

#[test]
fn fixed_solves_are_rank_one_and_feasible() {
    let cfg = ScenarioConfig::default();
    for seed in 0..4 {
        let ch = refined(&cfg, seed);
        for mode in 0..ch.num_modes() {
            let assign = ModeAssignment::uniform(mode, ch.num_tiles);
            if let Some(sol) = solve_fixed_assignment(&ch, &assign, &cfg).unwrap() {
                assert!(sol.rank_ratios.iter().all(|&r| r <= 1e-6), "{:?}", sol.rank_ratios);
                let rep = verify_solution(&ch, &assign, &sol.w, &sol.v, &cfg, FEAS_TOL);
                assert!(rep.pass, "{rep:?}");
            }
        }
    }
}

#[test]
fn halving_a_tight_solution_breaks_a_target() {
    let cfg = ScenarioConfig::default();
    let ch = refined(&cfg, 2);
    let (assign, sol) = feasible_assignment(&ch, &cfg);
    let half = sol.scaled(0.5, &ch, &assign, &cfg);
    let rep = verify_solution(&ch, &assign, &half.w, &half.v, &cfg, FEAS_TOL);
    assert!(!rep.pass);
    // interference-limited SINRs barely move, the harvested power halves
    assert!(rep.sinr_slack.iter().chain(&rep.harvest_slack).any(|&s| s < 0.0));
}

#[test]
fn wrong_assignment_length_is_reported() {
    let cfg = ScenarioConfig::default();
    let ch = refined(&cfg, 2);
    assert!(solve_fixed_assignment(&ch, &ModeAssignment::new(vec![0]), &cfg).is_err());
    let (_, sol) = feasible_assignment(&ch, &cfg);
    let rep = verify_solution(&ch, &ModeAssignment::new(vec![0, 9]), &sol.w, &sol.v, &cfg, FEAS_TOL);
    assert!(!rep.assignment_ok && !rep.pass);
}

#[test]
fn relaxation_census_for_two_users_three_modes_two_tiles() {
    let nominal = Census::nominal(2, 3, 2);
    assert_eq!((nominal.psd_blocks, nominal.free_b, nominal.beta), (138, 6, 45));
    // independent count: n = S (T + 1) tuples, n (n + 1) / 2 unordered pairs
    let n = 3 * (2 + 1);
    let pairs = n * (n + 1) / 2;
    assert_eq!(pairs, 45);
    assert_eq!(3 + (2 + 1) * pairs, 138);
    // reduced lifting: b^2 = b, same-tile products vanish, tile 0 is constant
    let reduced = census(2, &Fixings::new(3, 2)).unwrap();
    assert_eq!(reduced.free_b, 6);
    assert_eq!(reduced.beta, 9);
    assert_eq!(reduced.psd_blocks, 3 * (1 + 6 + 9));
}

#[test]
fn complete_fixings_reproduce_the_fixed_solve() {
    let cfg = small_cfg();
    for seed in 0..3 {
        let ch = refined(&cfg, seed);
        let assign = ModeAssignment::new(vec![1, 2]);
        let fixed = solve_fixed_assignment(&ch, &assign, &cfg).unwrap();
        let fx = Fixings::from_assignment(ch.num_modes(), &assign);
        let opts = RelaxOptions {
            penalty_mw: None,
            budget_mw: None,
            rf_required_mw: None,
        };
        match (fixed, solve_relaxed(&ch, &fx, &cfg, &opts).unwrap()) {
            (Some(f), RelaxOutcome::Optimal(r)) => {
                assert!(
                    (f.objective_mw - r.objective_mw).abs() <= 1e-5 * f.objective_mw,
                    "{} vs {}",
                    f.objective_mw,
                    r.objective_mw
                );
            }
            (None, RelaxOutcome::Infeasible) => {}
            (f, r) => panic!("seed {seed}: fixed {:?} relaxed {r:?}", f.map(|s| s.objective_mw)),
        }
    }
}

#[test]
fn relaxation_bounds_every_assignment() {
    for cuts in [false, true] {
        let cfg = ScenarioConfig {
            relaxation_cuts: cuts,
            ..small_cfg()
        };
        let ch = refined(&cfg, 4);
        let opts = RelaxOptions {
            penalty_mw: None,
            budget_mw: None,
            rf_required_mw: None,
        };
        let RelaxOutcome::Optimal(root) = solve_relaxed(&ch, &Fixings::new(3, 2), &cfg, &opts).unwrap() else {
            panic!("root relaxation infeasible");
        };
        for a in 0..3 {
            for b in 0..3 {
                let assign = ModeAssignment::new(vec![a, b]);
                if let Some(sol) = solve_fixed_assignment(&ch, &assign, &cfg).unwrap() {
                    assert!(root.bound_mw <= sol.objective_mw * (1.0 + 1e-4), "cuts {cuts}: {assign:?}");
                }
            }
        }
    }
}
