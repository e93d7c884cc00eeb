//! Linear-Gaussian model `y = θx + ξ` with prior `θ ~ N(0, 1/α)` and noise
//! precision `β`, plus the restricted data domain the privacy claims live on.

use serde::{Deserialize, Serialize};

use crate::dataset::DataPoint;
use crate::error::{invalid, Error, Result};

/// Prior precision `alpha` and observation-noise precision `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let m = Self { alpha, beta };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(invalid("alpha", format!("must be positive, got {}", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(invalid("beta", format!("must be positive, got {}", self.beta)));
        }
        Ok(())
    }
}

/// Restricted domain: `n` points with `x in [x_l, x_h]` and slope `y/x`
/// within `n^gamma1` of the centre `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub n: u64,
    pub c: f64,
    pub gamma1: f64,
    /// Only read when sizing a counterexample, where `c = n^gamma2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma2: Option<f64>,
    pub x_l: f64,
    pub x_h: f64,
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n", "must be positive"));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(invalid("c", format!("must be positive, got {}", self.c)));
        }
        if !(self.gamma1 > 0.0 && self.gamma1 < 0.5) {
            return Err(invalid("gamma1", format!("must lie in (0, 1/2), got {}", self.gamma1)));
        }
        if !(self.x_l > 0.0 && self.x_l < self.x_h && self.x_h.is_finite()) {
            return Err(invalid(
                "x_l/x_h",
                format!("need 0 < x_l < x_h, got x_l = {}, x_h = {}", self.x_l, self.x_h),
            ));
        }
        Ok(())
    }

    /// Validates the domain together with the model, including `x_h^2 beta > 3`.
    pub fn validate_with(&self, model: &ModelParams) -> Result<()> {
        self.validate()?;
        model.validate()?;
        if self.xh2_beta(model) <= 3.0 {
            return Err(invalid(
                "x_h",
                format!("need x_h^2 * beta > 3, got {}", self.xh2_beta(model)),
            ));
        }
        Ok(())
    }

    pub fn n_f64(&self) -> f64 {
        self.n as f64
    }

    /// Half-width of the admissible slope band, `n^gamma1`.
    pub fn slope_tolerance(&self) -> f64 {
        (self.gamma1 * self.n_f64().ln()).exp()
    }

    pub fn xh2_beta(&self, model: &ModelParams) -> f64 {
        self.x_h * self.x_h * model.beta
    }
}

/// Membership in the restricted domain. Comparisons are exact.
pub fn in_domain(point: DataPoint, spec: &DomainSpec) -> Result<bool> {
    if !(point.x > 0.0) {
        return Err(Error::DomainViolation(format!(
            "slope undefined for x = {}",
            point.x
        )));
    }
    let in_x = spec.x_l <= point.x && point.x <= spec.x_h;
    let in_slope = (point.y / point.x - spec.c).abs() <= spec.slope_tolerance();
    Ok(in_x && in_slope)
}
