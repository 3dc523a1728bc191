//! Online mode pre-selection against brute-force scans.

use swipt_core::{
    build_codebook, calibrate_threshold, refine_modes, sample_scenario, synth_channels, ChannelSet, CoreError, Criterion,
    ScenarioConfig, ThresholdParams,
};

fn offline(seed: u64) -> ChannelSet {
    let cfg = ScenarioConfig::default();
    let cb = build_codebook(cfg.reflection_grid_size, &cfg.wavefront_offsets).unwrap();
    synth_channels(&cfg, &sample_scenario(&cfg, seed).unwrap(), &cb).unwrap()
}

/// Largest `|h[r][i][s][t]|` over receivers and reflected tiles, with ER
/// norms multiplied by `omega`.
fn brute_score(ch: &ChannelSet, s: usize, omega: f64) -> f64 {
    let mut best = 0.0f64;
    for rx in 0..ch.num_receivers() {
        let w = if rx < ch.num_irs { 1.0 } else { omega };
        for t in 1..=ch.num_tiles {
            best = best.max(w * ch.get_rx(rx, s, t).norm());
        }
    }
    best
}

#[test]
fn criterion_one_matches_brute_force_scan() {
    let ch = offline(11);
    let scores: Vec<f64> = (0..ch.num_modes()).map(|s| brute_score(&ch, s, 1.0)).collect();
    let mut sorted = scores.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    for delta1 in [sorted[0], sorted[3], sorted[20], sorted[100]] {
        let set = refine_modes(&ch, &ThresholdParams::C1 { delta1 }).unwrap();
        let expected: Vec<usize> = (0..ch.num_modes()).filter(|&s| scores[s] >= delta1).collect();
        assert_eq!(set.mode_indices, expected);
    }
}

#[test]
fn threshold_above_every_norm_is_rejected() {
    let ch = offline(11);
    let top = (0..ch.num_modes()).map(|s| brute_score(&ch, s, 1.0)).fold(0.0, f64::max);
    assert_eq!(
        refine_modes(&ch, &ThresholdParams::C1 { delta1: top * 1.01 }),
        Err(CoreError::OverRestrictiveThreshold)
    );
}

#[test]
fn criterion_three_with_unit_weight_is_criterion_one() {
    for seed in 0..5 {
        let ch = offline(seed);
        for s in [2, 4, 8] {
            let c1 = calibrate_threshold(&ch, Criterion::C1, s, None).unwrap();
            let c3 = calibrate_threshold(&ch, Criterion::C3, s, Some(1.0)).unwrap();
            assert_eq!(c1.mode_indices, c3.mode_indices);
            assert_eq!(c1.scores, c3.scores);
        }
    }
}

#[test]
fn calibration_hits_the_target_size() {
    let ch = offline(3);
    for criterion in [Criterion::C1, Criterion::C2, Criterion::C3] {
        for s in [1, 2, 3, 4, 6, 8, 16] {
            let set = calibrate_threshold(&ch, criterion, s, Some(4.0)).unwrap();
            assert_eq!(set.len(), s, "{criterion:?} S={s}");
            assert!(set.mode_indices.windows(2).all(|w| w[0] < w[1]));
        }
    }
}

#[test]
fn calibrated_threshold_reproduces_the_set() {
    let ch = offline(5);
    for criterion in [Criterion::C1, Criterion::C3] {
        let set = calibrate_threshold(&ch, criterion, 4, Some(3.0)).unwrap();
        let again = refine_modes(&ch, &set.params).unwrap();
        assert_eq!(again.mode_indices, set.mode_indices);
    }
}

#[test]
fn top_sets_are_nested() {
    for seed in 0..5 {
        let ch = offline(seed);
        for (criterion, omega) in [(Criterion::C1, None), (Criterion::C3, Some(5.0))] {
            let mut prev: Vec<usize> = Vec::new();
            for s in [2, 4, 6, 8] {
                let set = calibrate_threshold(&ch, criterion, s, omega).unwrap();
                assert!(prev.iter().all(|m| set.mode_indices.contains(m)), "{criterion:?} S={s}");
                prev = set.mode_indices;
            }
        }
    }
}

#[test]
fn criterion_two_covers_every_receiver() {
    let ch = offline(7);
    let set = calibrate_threshold(&ch, Criterion::C2, 4, None).unwrap();
    for rx in 0..ch.num_receivers() {
        let best = (0..ch.num_modes())
            .max_by(|&a, &b| {
                let na = (1..=ch.num_tiles).map(|t| ch.get_rx(rx, a, t).norm()).fold(0.0, f64::max);
                let nb = (1..=ch.num_tiles).map(|t| ch.get_rx(rx, b, t).norm()).fold(0.0, f64::max);
                na.total_cmp(&nb).then(b.cmp(&a))
            })
            .unwrap();
        assert!(set.mode_indices.contains(&best), "receiver {rx} lost its best mode");
    }
}

#[test]
fn audit_table_lists_every_mode() {
    let ch = offline(2);
    let set = calibrate_threshold(&ch, Criterion::C1, 4, None).unwrap();
    let csv = set.to_csv();
    assert_eq!(csv.lines().count(), 1 + ch.num_modes());
    assert_eq!(csv.lines().filter(|l| l.ends_with(",1")).count(), 4);
}
