//! Univariate Gaussians and finite Gaussian mixtures.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::{norm_cdf, norm_sf};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian1D {
    pub mean: f64,
    pub variance: f64,
}

impl Gaussian1D {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) || !mean.is_finite() {
            return Err(invalid("variance", format!("need finite mean and positive variance, got N({mean}, {variance})")));
        }
        Ok(Self { mean, variance })
    }

    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.sd();
        (-0.5 * z * z).exp() / (self.sd() * (2.0 * std::f64::consts::PI).sqrt())
    }

    pub fn cdf(&self, x: f64) -> f64 {
        norm_cdf((x - self.mean) / self.sd())
    }

    /// `P(X > x)`.
    pub fn sf(&self, x: f64) -> f64 {
        norm_sf((x - self.mean) / self.sd())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture1D {
    pub components: Vec<Gaussian1D>,
    pub weights: Vec<f64>,
}

impl GaussianMixture1D {
    pub fn new(components: Vec<Gaussian1D>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() || components.len() != weights.len() {
            return Err(invalid("components", "need a nonempty list matching the weights"));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(invalid("weights", "must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid("weights", format!("must sum to 1, got {total}")));
        }
        Ok(Self { components, weights })
    }

    pub fn uniform(components: Vec<Gaussian1D>) -> Result<Self> {
        let k = components.len();
        Self::new(components, vec![1.0 / k as f64; k])
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(w, g)| w * g.mean).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.iter()
            .map(|(w, g)| w * (g.variance + (g.mean - m).powi(2)))
            .sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.iter().map(|(w, g)| w * g.cdf(x)).sum()
    }

    pub fn sf(&self, x: f64) -> f64 {
        self.iter().map(|(w, g)| w * g.sf(x)).sum()
    }

    fn iter(&self) -> impl Iterator<Item = (f64, &Gaussian1D)> {
        self.weights.iter().copied().zip(&self.components)
    }
}
