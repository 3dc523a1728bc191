//! Random scenario sampling: receiver placement, scatterer angles and
//! per-path complex gains.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::{db_to_linear, ScenarioConfig};
use crate::CoreError;

/// Direction of a propagation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Angles {
    pub azimuth: f64,
    pub elevation: f64,
}

impl Angles {
    /// Direction cosines `(sin el cos az, sin el sin az)`.
    pub fn cosines(&self) -> (f64, f64) {
        let s = self.elevation.sin();
        (s * self.azimuth.cos(), s * self.azimuth.sin())
    }

    /// Unit vector with the given azimuth and elevation from the array normal.
    pub fn unit_vector(&self) -> [f64; 3] {
        let (u, v) = self.cosines();
        [u, v, self.elevation.cos()]
    }
}

/// One multipath link with `L` scatterers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    /// Departure angle at the transmitting end, per path.
    pub departure: Vec<Angles>,
    /// Arrival angle at the receiving end, per path.
    pub arrival: Vec<Angles>,
    /// Polarization angle per path, radians.
    pub polarization: Vec<f64>,
    /// Unit-mean Rayleigh fading per path.
    pub fading: Vec<Complex64>,
    /// Amplitude from path loss, shadowing, antenna gain and polarization.
    pub amplitude: Vec<f64>,
}

impl Link {
    /// Per-path coefficients `amplitude * fading` (the diagonal of `C`).
    pub fn coefficients(&self) -> Vec<Complex64> {
        self.fading.iter().zip(&self.amplitude).map(|(f, a)| f * *a).collect()
    }

    pub fn len(&self) -> usize {
        self.fading.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fading.is_empty()
    }
}

/// A sampled scenario. Positions are planar, in meters; the BS is at the
/// origin and the IRS on the positive x axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioInstance {
    pub seed: u64,
    pub bs: [f64; 2],
    pub irs: [f64; 2],
    pub ir_positions: Vec<[f64; 2]>,
    pub er_positions: Vec<[f64; 2]>,
    /// BS to IRS link (departure at the BS, arrival at the IRS).
    pub bs_irs: Link,
    /// IRS to each IR, then IRS to each ER.
    pub reflected: Vec<Link>,
    /// BS to each IR, then BS to each ER.
    pub direct: Vec<Link>,
}

impl ScenarioInstance {
    pub fn num_irs(&self) -> usize {
        self.ir_positions.len()
    }

    pub fn num_ers(&self) -> usize {
        self.er_positions.len()
    }

    /// Position of receiver `idx` in the IR-then-ER ordering.
    pub fn receiver_position(&self, idx: usize) -> [f64; 2] {
        if idx < self.num_irs() {
            self.ir_positions[idx]
        } else {
            self.er_positions[idx - self.num_irs()]
        }
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Amplitude of the large-scale power gain at distance `d`.
pub fn path_amplitude(cfg: &ScenarioConfig, d: f64, shadow_db: f64, antenna_gain_dbi: f64) -> f64 {
    let d = d.max(cfg.geometry.min_distance_m);
    let gain_db = -cfg.ref_path_loss_db - 10.0 * cfg.path_loss_exponent * d.log10() + shadow_db + antenna_gain_dbi;
    db_to_linear(gain_db).sqrt()
}

/// Attenuation from polarization mismatch.
pub fn polarization_factor(cfg: &ScenarioConfig, pol: f64) -> f64 {
    if cfg.polarization_loss {
        pol.cos().abs().max(cfg.polarization_floor)
    } else {
        1.0
    }
}

fn cn01<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

struct LinkSpec {
    dep_max_elev: f64,
    arr_max_elev: f64,
    amplitude: f64,
    polarized: bool,
}

fn sample_link<R: Rng>(rng: &mut R, cfg: &ScenarioConfig, spec: LinkSpec) -> Link {
    let l = cfg.scatterers_per_link;
    let mut link = Link {
        departure: Vec::with_capacity(l),
        arrival: Vec::with_capacity(l),
        polarization: Vec::with_capacity(l),
        fading: Vec::with_capacity(l),
        amplitude: Vec::with_capacity(l),
    };
    for _ in 0..l {
        let departure = Angles {
            azimuth: rng.random_range(0.0..2.0 * PI),
            elevation: rng.random_range(0.0..spec.dep_max_elev),
        };
        let arrival = Angles {
            azimuth: rng.random_range(0.0..2.0 * PI),
            elevation: rng.random_range(0.0..spec.arr_max_elev),
        };
        let pol = rng.random_range(0.0..2.0 * PI);
        let fading = cn01(rng);
        let pol_gain = if spec.polarized { polarization_factor(cfg, pol) } else { 1.0 };
        link.departure.push(departure);
        link.arrival.push(arrival);
        link.polarization.push(pol);
        link.fading.push(fading);
        link.amplitude.push(spec.amplitude * pol_gain);
    }
    link
}

/// Draws a scenario deterministically from `(cfg, seed)`.
pub fn sample_scenario(cfg: &ScenarioConfig, seed: u64) -> Result<ScenarioInstance, CoreError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let geo = &cfg.geometry;
    let bs = [0.0, 0.0];
    let irs = [geo.irs_distance_m, 0.0];
    let half = geo.sector_half_angle_deg.to_radians();

    let ir_positions: Vec<[f64; 2]> = (0..cfg.num_irs)
        .map(|_| {
            let r = geo.cell_radius_m * rng.random::<f64>().sqrt();
            let phi = rng.random_range(-half..=half);
            [r * phi.cos(), r * phi.sin()]
        })
        .collect();
    // charging zone: the half disc around the IRS that faces the BS
    let er_positions: Vec<[f64; 2]> = (0..cfg.num_ers)
        .map(|_| {
            let r = geo.charging_radius_m * rng.random::<f64>().sqrt();
            let phi = rng.random_range(0.5 * PI..=1.5 * PI);
            [irs[0] + r * phi.cos(), irs[1] + r * phi.sin()]
        })
        .collect();

    let bs_irs = sample_link(
        &mut rng,
        cfg,
        LinkSpec {
            dep_max_elev: FRAC_PI_4,
            arr_max_elev: FRAC_PI_4,
            // the large-scale loss of the reflected path sits on the second hop
            amplitude: db_to_linear(cfg.bs_antenna_gain_dbi).sqrt(),
            polarized: true,
        },
    );
    let receivers: Vec<[f64; 2]> = ir_positions.iter().chain(&er_positions).copied().collect();
    let reflected = receivers
        .iter()
        .map(|&p| {
            sample_link(
                &mut rng,
                cfg,
                LinkSpec {
                    dep_max_elev: FRAC_PI_4,
                    arr_max_elev: PI,
                    amplitude: path_amplitude(cfg, dist(bs, irs) + dist(irs, p), cfg.shadow_reflected_db, 0.0),
                    polarized: false,
                },
            )
        })
        .collect();
    let direct = receivers
        .iter()
        .map(|&p| {
            sample_link(
                &mut rng,
                cfg,
                LinkSpec {
                    dep_max_elev: FRAC_PI_4,
                    arr_max_elev: PI,
                    amplitude: path_amplitude(cfg, dist(bs, p), cfg.shadow_direct_db, cfg.bs_antenna_gain_dbi),
                    polarized: false,
                },
            )
        })
        .collect();

    Ok(ScenarioInstance {
        seed,
        bs,
        irs,
        ir_positions,
        er_positions,
        bs_irs,
        reflected,
        direct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let cfg = ScenarioConfig::default();
        assert_eq!(sample_scenario(&cfg, 5).unwrap(), sample_scenario(&cfg, 5).unwrap());
        assert_ne!(sample_scenario(&cfg, 5).unwrap(), sample_scenario(&cfg, 6).unwrap());
    }

    #[test]
    fn regions_respected() {
        let cfg = ScenarioConfig::default();
        for seed in 0..200 {
            let inst = sample_scenario(&cfg, seed).unwrap();
            for p in &inst.er_positions {
                assert!(dist(*p, inst.irs) <= 2.0);
                assert!(p[0] <= inst.irs[0] + 1e-12);
            }
            for p in &inst.ir_positions {
                assert!(dist(*p, inst.bs) <= 10.0);
                assert!(p[1].atan2(p[0]).abs() <= 60f64.to_radians() + 1e-12);
            }
            assert!(inst.reflected.iter().chain(&inst.direct).all(|l| l.len() == 6));
        }
    }

    #[test]
    fn direct_shadowing_scales_amplitudes() {
        let cfg = ScenarioConfig::default();
        let clear = ScenarioConfig {
            shadow_direct_db: 0.0,
            ..cfg.clone()
        };
        let a = sample_scenario(&cfg, 9).unwrap();
        let b = sample_scenario(&clear, 9).unwrap();
        let ratio = 10f64.powf(-30.0 / 20.0);
        for (la, lb) in a.direct.iter().zip(&b.direct) {
            for (ca, cb) in la.coefficients().iter().zip(lb.coefficients()) {
                assert!((ca - cb * ratio).norm() <= 1e-12 * cb.norm());
            }
        }
        assert_eq!(a.reflected, b.reflected);
    }
}
