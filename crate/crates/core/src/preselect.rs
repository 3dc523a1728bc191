//! Online mode pre-selection: shrink the offline codebook to the modes
//! whose tile channels are strong for some receiver.

use std::fmt::Write as _;

use crate::channel::ChannelSet;
use crate::config::Criterion;
use crate::CoreError;

/// Threshold parameters of each criterion.
#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdParams {
    C1 { delta1: f64 },
    /// One threshold per receiver, IRs first.
    C2 { delta2: Vec<f64> },
    C3 { delta1: f64, omega: f64 },
}

impl ThresholdParams {
    pub fn criterion(&self) -> Criterion {
        match self {
            ThresholdParams::C1 { .. } => Criterion::C1,
            ThresholdParams::C2 { .. } => Criterion::C2,
            ThresholdParams::C3 { .. } => Criterion::C3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinedModeSet {
    /// Mode indices into the channel set, ascending.
    pub mode_indices: Vec<usize>,
    pub params: ThresholdParams,
    /// Score of every candidate mode under the criterion (for C2, the
    /// unweighted max-norm used for trimming).
    pub scores: Vec<f64>,
}

impl RefinedModeSet {
    pub fn len(&self) -> usize {
        self.mode_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mode_indices.is_empty()
    }

    pub fn criterion(&self) -> Criterion {
        self.params.criterion()
    }

    /// Audit table: `mode,score,selected`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mode,score,selected\n");
        for (s, score) in self.scores.iter().enumerate() {
            let sel = self.mode_indices.binary_search(&s).is_ok();
            let _ = writeln!(out, "{s},{score:e},{}", sel as u8);
        }
        out
    }
}

/// Largest reflected-channel norm of mode `s` at receiver `rx`.
fn rx_norm(ch: &ChannelSet, rx: usize, s: usize) -> f64 {
    (1..=ch.num_tiles)
        .map(|t| ch.get_rx(rx, s, t).norm())
        .fold(0.0, f64::max)
}

/// Per-mode score `max over (r, i, t >= 1)` with ER norms weighted by `omega`.
pub fn weighted_scores(ch: &ChannelSet, omega: f64) -> Vec<f64> {
    (0..ch.num_modes())
        .map(|s| {
            (0..ch.num_receivers())
                .map(|rx| {
                    let w = if rx < ch.num_irs { 1.0 } else { omega };
                    w * rx_norm(ch, rx, s)
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Applies the criterion's thresholds literally.
pub fn refine_modes(ch: &ChannelSet, params: &ThresholdParams) -> Result<RefinedModeSet, CoreError> {
    let scores = match params {
        ThresholdParams::C1 { .. } => weighted_scores(ch, 1.0),
        ThresholdParams::C3 { omega, .. } => {
            if !(*omega >= 1.0) {
                return Err(CoreError::InvalidArgument(format!("omega {omega} must be at least 1")));
            }
            weighted_scores(ch, *omega)
        }
        ThresholdParams::C2 { .. } => weighted_scores(ch, 1.0),
    };
    let mode_indices: Vec<usize> = match params {
        ThresholdParams::C1 { delta1 } | ThresholdParams::C3 { delta1, .. } => {
            (0..ch.num_modes()).filter(|&s| scores[s] >= *delta1).collect()
        }
        ThresholdParams::C2 { delta2 } => {
            if delta2.len() != ch.num_receivers() {
                return Err(CoreError::DimensionMismatch(format!(
                    "{} thresholds for {} receivers",
                    delta2.len(),
                    ch.num_receivers()
                )));
            }
            (0..ch.num_modes())
                .filter(|&s| (0..ch.num_receivers()).any(|rx| rx_norm(ch, rx, s) >= delta2[rx]))
                .collect()
        }
    };
    if mode_indices.is_empty() {
        return Err(CoreError::OverRestrictiveThreshold);
    }
    Ok(RefinedModeSet {
        mode_indices,
        params: params.clone(),
        scores,
    })
}

/// Indices sorted by descending score, ties to the lower index.
fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Chooses thresholds so that exactly `s_target` modes survive.
///
/// C1/C3 keep the top `s_target` modes by score. C2 gives every receiver
/// a quota of `ceil(s_target / (K + J))` modes from its own ranking,
/// unites them and trims (or tops up) to `s_target` by the global score.
pub fn calibrate_threshold(
    ch: &ChannelSet,
    criterion: Criterion,
    s_target: usize,
    omega: Option<f64>,
) -> Result<RefinedModeSet, CoreError> {
    let n = ch.num_modes();
    if s_target == 0 || s_target > n {
        return Err(CoreError::InvalidArgument(format!("target size {s_target} outside 1..={n}")));
    }
    let omega = omega.unwrap_or(1.0);
    if !(omega >= 1.0) {
        return Err(CoreError::InvalidArgument(format!("omega {omega} must be at least 1")));
    }
    let (scores, mut chosen, params) = match criterion {
        Criterion::C1 | Criterion::C3 => {
            let w = if criterion == Criterion::C1 { 1.0 } else { omega };
            let scores = weighted_scores(ch, w);
            let chosen: Vec<usize> = ranking(&scores)[..s_target].to_vec();
            let delta1 = scores[chosen[s_target - 1]];
            let params = if criterion == Criterion::C1 {
                ThresholdParams::C1 { delta1 }
            } else {
                ThresholdParams::C3 { delta1, omega }
            };
            (scores, chosen, params)
        }
        Criterion::C2 => {
            let global = weighted_scores(ch, 1.0);
            let nr = ch.num_receivers();
            let quota = s_target.div_ceil(nr);
            let mut union = Vec::new();
            let mut delta2 = Vec::with_capacity(nr);
            for rx in 0..nr {
                let own: Vec<f64> = (0..n).map(|s| rx_norm(ch, rx, s)).collect();
                let top = &ranking(&own)[..quota.min(n)];
                delta2.push(own[*top.last().expect("quota >= 1")]);
                union.extend_from_slice(top);
            }
            union.sort_unstable();
            union.dedup();
            let mut by_global: Vec<usize> = ranking(&global);
            let chosen: Vec<usize> = if union.len() >= s_target {
                by_global.retain(|s| union.binary_search(s).is_ok());
                by_global[..s_target].to_vec()
            } else {
                let mut c = union.clone();
                for s in by_global {
                    if c.len() == s_target {
                        break;
                    }
                    if !union.contains(&s) {
                        c.push(s);
                    }
                }
                c
            };
            (global, chosen, ThresholdParams::C2 { delta2 })
        }
    };
    chosen.sort_unstable();
    Ok(RefinedModeSet {
        mode_indices: chosen,
        params,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranking_breaks_ties_by_index() {
        assert_eq!(ranking(&[1.0, 3.0, 3.0, 2.0]), vec![1, 2, 3, 0]);
    }
}
