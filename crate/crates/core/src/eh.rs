//! Non-linear (logistic) energy harvesting model.
//!
//! All quantities are in microwatts: the harvested power `Upsilon(P)` as a
//! function of received RF power `P`, its inverse, and the constant `C_req`
//! of the exponential form of the harvesting constraint.

use serde::{Deserialize, Serialize};

use crate::CoreError;

/// Logistic harvesting curve parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EhParams {
    /// Saturation-scale numerator, microwatts.
    pub a: f64,
    /// Inflection input power, microwatts.
    pub c: f64,
    /// Steepness, 1/microwatt.
    pub rho: f64,
}

impl Default for EhParams {
    fn default() -> Self {
        Self {
            a: 20.0,
            c: 6400.0,
            rho: 0.003,
        }
    }
}

impl EhParams {
    pub fn validate(&self) -> Result<(), CoreError> {
        if !(self.a > 0.0 && self.c > 0.0 && self.rho > 0.0) || !(self.a * self.c * self.rho).is_finite() {
            return Err(CoreError::InvalidConfig(format!(
                "EH parameters must be positive and finite: {self:?}"
            )));
        }
        Ok(())
    }

    /// `Xi = 1 / (1 + exp(rho c))`, the zero-input offset.
    pub fn xi(&self) -> f64 {
        1.0 / (1.0 + (self.rho * self.c).exp())
    }

    /// Harvested power for received RF power `p_rf` (both microwatts).
    pub fn harvested_power(&self, p_rf: f64) -> Result<f64, CoreError> {
        if !(p_rf >= 0.0) {
            return Err(CoreError::NegativePower(p_rf));
        }
        let xi = self.xi();
        let lambda = self.a / (1.0 + (-self.rho * (p_rf - self.c)).exp());
        let out = (lambda - self.a * xi) / (1.0 - xi);
        Ok(out.max(0.0))
    }

    fn lambda_hat(&self, e_req: f64) -> Result<f64, CoreError> {
        if !(e_req >= 0.0) {
            return Err(CoreError::NegativePower(e_req));
        }
        if e_req >= self.a {
            return Err(CoreError::UnattainableDemand {
                demand: e_req,
                saturation: self.a,
            });
        }
        let xi = self.xi();
        Ok(e_req * (1.0 - xi) + self.a * xi)
    }

    /// RF power that harvests exactly `e_req` (microwatts).
    pub fn required_rf_power(&self, e_req: f64) -> Result<f64, CoreError> {
        if e_req == 0.0 {
            return Ok(0.0);
        }
        let lh = self.lambda_hat(e_req)?;
        let p = self.c - ((self.a - lh) / lh).ln() / self.rho;
        Ok(p.max(0.0))
    }

    /// `C_req = (a / lambda_hat - 1) exp(-rho c)`; the constraint
    /// `C_req >= exp(-rho P)` is equivalent to `P >= -ln(C_req) / rho`.
    pub fn c_req(&self, e_req: f64) -> Result<f64, CoreError> {
        let lh = self.lambda_hat(e_req)?;
        Ok((self.a / lh - 1.0) * (-self.rho * self.c).exp())
    }

    /// Linear efficiency matching the curve at its inflection, `Upsilon(c) / c`.
    pub fn inflection_efficiency(&self) -> f64 {
        self.harvested_power(self.c).expect("c > 0") / self.c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_input_gives_zero_output() {
        assert_eq!(EhParams::default().harvested_power(0.0).unwrap(), 0.0);
        assert_eq!(EhParams::default().required_rf_power(0.0).unwrap(), 0.0);
    }

    #[test]
    fn negative_input_is_rejected() {
        assert!(matches!(
            EhParams::default().harvested_power(-1.0),
            Err(CoreError::NegativePower(_))
        ));
    }

    #[test]
    fn demand_at_saturation_is_unattainable() {
        let p = EhParams::default();
        assert!(matches!(p.required_rf_power(20.0), Err(CoreError::UnattainableDemand { .. })));
        assert!(matches!(p.c_req(25.0), Err(CoreError::UnattainableDemand { .. })));
    }
}
