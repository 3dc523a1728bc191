//! Scenario configuration and unit conversions.

use serde::{Deserialize, Serialize};

use crate::eh::EhParams;
use crate::CoreError;

/// dBm to milliwatts.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Milliwatts to dBm (`-inf` for zero).
pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// dB to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub const MW_PER_UW: f64 = 1e-3;

/// Planar layout of the sector, IRS and charging zone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct Geometry {
    /// Sector radius around the BS, meters.
    pub cell_radius_m: f64,
    /// BS to IRS-center distance, meters.
    pub irs_distance_m: f64,
    /// Radius of the semicircular charging zone around the IRS, meters.
    pub charging_radius_m: f64,
    /// Half opening angle of the sector, degrees.
    pub sector_half_angle_deg: f64,
    /// Distances below this are clamped in the path-loss law, meters.
    pub min_distance_m: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            cell_radius_m: 10.0,
            irs_distance_m: 10.0,
            charging_radius_m: 2.0,
            sector_half_angle_deg: 60.0,
            min_distance_m: 1.0,
        }
    }
}

/// Mode pre-selection criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criterion {
    /// Largest channel norm over all receivers.
    C1,
    /// Per-receiver sets, united.
    C2,
    /// Channel norms with ER channels weighted by `omega`.
    C3,
}

/// All system parameters. Field names in the JSON form are camelCase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct ScenarioConfig {
    pub num_antennas: usize,
    pub num_irs: usize,
    pub num_ers: usize,
    pub num_elements: usize,
    pub num_tiles: usize,
    pub target_mode_set_size: usize,
    /// Minimum SINR per IR, dB.
    pub min_sinr_db: f64,
    /// Minimum harvested power per ER, microwatts.
    pub min_harvest_uw: f64,
    pub noise_power_ir_dbm: f64,
    pub noise_power_er_dbm: f64,
    pub max_power_dbm: f64,
    pub carrier_frequency_hz: f64,
    pub path_loss_exponent: f64,
    /// Path loss at 1 m, dB (positive number = loss).
    pub ref_path_loss_db: f64,
    /// Shadowing gain on direct links, dB.
    pub shadow_direct_db: f64,
    /// Shadowing gain on reflected links, dB.
    pub shadow_reflected_db: f64,
    pub bs_antenna_gain_dbi: f64,
    pub scatterers_per_link: usize,
    pub eh_params: EhParams,
    pub penalty_factor: f64,
    pub eps_bnb: f64,
    pub eps_sca: f64,
    pub rank_tol: f64,
    pub solver_tol: f64,
    /// ERs' energy signal is known to IRs and cancelled before decoding.
    pub cancel_energy_interference: bool,
    pub seed: u64,
    pub geometry: Geometry,
    /// Attenuate reflected paths by the polarization mismatch factor.
    pub polarization_loss: bool,
    /// Floor of the polarization mismatch factor.
    pub polarization_floor: f64,
    pub bs_spacing_wavelengths: f64,
    pub element_spacing_wavelengths: f64,
    /// Number of reflection directions (a perfect square).
    pub reflection_grid_size: usize,
    /// Wavefront phase offsets, radians.
    pub wavefront_offsets: Vec<f64>,
    pub criterion: Criterion,
    /// ER weight of criterion 3.
    pub omega: f64,
    /// Linear EH efficiency of the linear-model scheme; `None` uses the
    /// slope of the logistic curve's chord at its inflection point.
    pub linear_eh_efficiency: Option<f64>,
    pub enum_cap: usize,
    /// Adds the product identities implied by one mode per tile to the
    /// relaxation (`sum_p beta_{s,t,p,q} = b_{s,t}` and the matching sums
    /// of lifted covariances). Off by default.
    pub relaxation_cuts: bool,
    pub max_bnb_nodes: usize,
    pub max_sca_iterations: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            num_antennas: 4,
            num_irs: 2,
            num_ers: 2,
            num_elements: 600,
            num_tiles: 2,
            target_mode_set_size: 4,
            min_sinr_db: 10.0,
            min_harvest_uw: 10.0,
            noise_power_ir_dbm: -100.0,
            noise_power_er_dbm: -100.0,
            max_power_dbm: 40.0,
            carrier_frequency_hz: 2.4e9,
            path_loss_exponent: 2.0,
            ref_path_loss_db: 40.0,
            shadow_direct_db: -30.0,
            shadow_reflected_db: 0.0,
            bs_antenna_gain_dbi: 0.0,
            scatterers_per_link: 6,
            eh_params: EhParams::default(),
            penalty_factor: 1e3,
            eps_bnb: 1e-2,
            eps_sca: 1e-2,
            rank_tol: 1e-6,
            solver_tol: 1e-8,
            cancel_energy_interference: false,
            seed: 1,
            geometry: Geometry::default(),
            polarization_loss: true,
            polarization_floor: 0.1,
            bs_spacing_wavelengths: 0.5,
            element_spacing_wavelengths: 0.5,
            reflection_grid_size: 121,
            wavefront_offsets: vec![0.0, std::f64::consts::PI],
            criterion: Criterion::C1,
            omega: 1.0,
            linear_eh_efficiency: None,
            enum_cap: 4096,
            relaxation_cuts: false,
            max_bnb_nodes: 20_000,
            max_sca_iterations: 60,
        }
    }
}

impl ScenarioConfig {
    /// Checks the invariants of every field.
    pub fn validate(&self) -> Result<(), CoreError> {
        let bad = |m: String| Err(CoreError::InvalidConfig(m));
        if self.num_irs == 0 {
            return bad("at least one IR is required".into());
        }
        if self.num_antennas == 0 || self.num_elements == 0 || self.num_tiles == 0 {
            return bad("antenna, element and tile counts must be positive".into());
        }
        if self.num_elements % self.num_tiles != 0 {
            return bad(format!(
                "numElements {} is not divisible by numTiles {}",
                self.num_elements, self.num_tiles
            ));
        }
        if self.target_mode_set_size == 0 || self.scatterers_per_link == 0 {
            return bad("mode set size and scatterer count must be positive".into());
        }
        let g = (self.reflection_grid_size as f64).sqrt().round() as usize;
        if g * g != self.reflection_grid_size || g == 0 {
            return bad(format!("reflectionGridSize {} is not a perfect square", self.reflection_grid_size));
        }
        if self.wavefront_offsets.is_empty() {
            return bad("at least one wavefront offset is required".into());
        }
        let finite = [
            self.min_sinr_db,
            self.min_harvest_uw,
            self.noise_power_ir_dbm,
            self.noise_power_er_dbm,
            self.max_power_dbm,
            self.carrier_frequency_hz,
            self.path_loss_exponent,
            self.ref_path_loss_db,
            self.shadow_direct_db,
            self.shadow_reflected_db,
            self.bs_antenna_gain_dbi,
            self.omega,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("all powers and gains must be finite".into());
        }
        if self.min_harvest_uw < 0.0 {
            return bad("minHarvestUw must be nonnegative".into());
        }
        for (name, eps) in [
            ("epsBnb", self.eps_bnb),
            ("epsSca", self.eps_sca),
            ("rankTol", self.rank_tol),
            ("solverTol", self.solver_tol),
        ] {
            if !(eps > 0.0 && eps < 1.0) {
                return bad(format!("{name} must lie in (0, 1)"));
            }
        }
        if !(self.penalty_factor > 0.0) {
            return bad("penaltyFactor must be positive".into());
        }
        if !(self.omega >= 1.0) {
            return bad("omega must be at least 1".into());
        }
        let geo = &self.geometry;
        if !(geo.cell_radius_m > 0.0
            && geo.irs_distance_m > 0.0
            && geo.charging_radius_m > 0.0
            && geo.charging_radius_m <= geo.irs_distance_m
            && geo.sector_half_angle_deg > 0.0
            && geo.sector_half_angle_deg <= 90.0
            && geo.min_distance_m > 0.0)
        {
            return bad(format!("invalid geometry: {geo:?}"));
        }
        self.eh_params.validate()
    }

    pub fn wavelength_m(&self) -> f64 {
        299_792_458.0 / self.carrier_frequency_hz
    }

    /// Minimum SINR, linear.
    pub fn gamma(&self) -> f64 {
        db_to_linear(self.min_sinr_db)
    }

    /// IR noise power, milliwatts.
    pub fn noise_ir_mw(&self) -> f64 {
        dbm_to_mw(self.noise_power_ir_dbm)
    }

    pub fn max_power_mw(&self) -> f64 {
        dbm_to_mw(self.max_power_dbm)
    }

    /// Received RF power needed at each ER, milliwatts.
    pub fn required_rf_mw(&self) -> Result<f64, CoreError> {
        Ok(self.eh_params.required_rf_power(self.min_harvest_uw)? * MW_PER_UW)
    }

    /// Linear EH efficiency used by the linear-model scheme.
    pub fn linear_efficiency(&self) -> f64 {
        self.linear_eh_efficiency
            .unwrap_or_else(|| self.eh_params.inflection_efficiency())
    }

    /// Number of receivers `K + J`.
    pub fn num_receivers(&self) -> usize {
        self.num_irs + self.num_ers
    }

    pub fn from_json(text: &str) -> Result<Self, CoreError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CoreError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Returns a copy with one field, addressed by its JSON name, replaced.
    /// Nested fields use dots, e.g. `geometry.chargingRadiusM`.
    pub fn with_field(&self, name: &str, value: serde_json::Value) -> Result<Self, CoreError> {
        let mut json = serde_json::to_value(self).expect("config serializes");
        let mut slot = &mut json;
        for part in name.split('.') {
            slot = slot
                .as_object_mut()
                .and_then(|o| o.get_mut(part))
                .ok_or_else(|| CoreError::UnknownField(name.to_string()))?;
        }
        // integers given as floats are accepted for integer fields
        let value = match (&*slot, value) {
            (serde_json::Value::Number(old), serde_json::Value::Number(new)) if old.is_u64() => {
                match new.as_f64() {
                    Some(f) if f >= 0.0 && f.fract() == 0.0 => serde_json::Value::from(f as u64),
                    _ => serde_json::Value::Number(new),
                }
            }
            (_, v) => v,
        };
        *slot = value;
        let cfg: Self = serde_json::from_value(json)
            .map_err(|e| CoreError::InvalidConfig(format!("{name}: {e}")))?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        ScenarioConfig::default().validate().unwrap();
    }

    #[test]
    fn zero_irs_rejected() {
        let cfg = ScenarioConfig {
            num_irs: 0,
            ..ScenarioConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn indivisible_tiles_rejected() {
        let cfg = ScenarioConfig {
            num_tiles: 7,
            ..ScenarioConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn field_override_by_name() {
        let cfg = ScenarioConfig::default();
        let c2 = cfg.with_field("minSinrDb", serde_json::json!(4.0)).unwrap();
        assert_eq!(c2.min_sinr_db, 4.0);
        let c3 = cfg.with_field("numAntennas", serde_json::json!(6.0)).unwrap();
        assert_eq!(c3.num_antennas, 6);
        let c4 = cfg.with_field("geometry.chargingRadiusM", serde_json::json!(1.5)).unwrap();
        assert_eq!(c4.geometry.charging_radius_m, 1.5);
        assert!(matches!(
            cfg.with_field("noSuchField", serde_json::json!(1)),
            Err(CoreError::UnknownField(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let cfg = ScenarioConfig::default();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(ScenarioConfig::from_json(&text).unwrap(), cfg);
        // partial documents fall back to defaults
        let partial = ScenarioConfig::from_json(r#"{"numAntennas": 8}"#).unwrap();
        assert_eq!(partial.num_antennas, 8);
        assert_eq!(partial.num_irs, 2);
    }
}
