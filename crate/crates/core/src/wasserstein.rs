//! Pointwise density bounds from Wasserstein proximity, checked on grids.
//!
//! Smoothing a density by averaging it over a ball of radius `s` turns a
//! `W₂ <= ε²` guarantee into a pointwise bound
//! `p_s(x) <= R q_s(x) + (R - 1) 2 s L + ε / vol_d(s - ε)` with
//! `R = vol_d(s)/vol_d(s - ε) = (1 + ε/(s - ε))^d`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use libm::tgamma as gamma;

use crate::error::{invalid, Error, Result};

/// Density values on a regular lattice (row-major, last axis fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GriddedDensity {
    pub dim: usize,
    pub origin: Vec<f64>,
    pub spacing: f64,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
    pub lipschitz: f64,
}

impl GriddedDensity {
    /// Validated density: nonnegative, unit trapezoid mass within 1e-6 and
    /// axis slopes within `lipschitz`.
    pub fn new(origin: Vec<f64>, spacing: f64, shape: Vec<usize>, values: Vec<f64>, lipschitz: f64) -> Result<Self> {
        let dim = shape.len();
        if !(1..=3).contains(&dim) || origin.len() != dim {
            return Err(invalid("dim", format!("need 1 <= d <= 3 with matching origin, got {dim}")));
        }
        if !(spacing > 0.0) || shape.iter().any(|&s| s < 2) {
            return Err(invalid("grid", "need positive spacing and at least 2 points per axis"));
        }
        if values.len() != shape.iter().product::<usize>() || values.iter().any(|v| !(*v >= 0.0)) {
            return Err(invalid("values", "need one nonnegative value per lattice point"));
        }
        let g = Self { dim, origin, spacing, shape, values, lipschitz };
        let mass = g.mass();
        if (mass - 1.0).abs() > 1e-6 {
            return Err(Error::MassNotNormalized(mass));
        }
        let observed = g.max_axis_slope();
        if observed > lipschitz * (1.0 + 1e-9) {
            return Err(Error::LipschitzViolated { declared: lipschitz, observed });
        }
        Ok(g)
    }

    /// Samples `f` on the lattice.
    pub fn from_fn(origin: Vec<f64>, spacing: f64, shape: Vec<usize>, lipschitz: f64, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let total: usize = shape.iter().product();
        let probe = Self { dim: shape.len(), origin: origin.clone(), spacing, shape: shape.clone(), values: vec![], lipschitz };
        let values = (0..total).map(|i| f(&probe.coords(i))).collect();
        Self::new(origin, spacing, shape, values, lipschitz)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn unravel(&self, mut i: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        for k in (0..self.dim).rev() {
            idx[k] = i % self.shape[k];
            i /= self.shape[k];
        }
        idx
    }

    fn ravel(&self, idx: &[i64]) -> Option<usize> {
        let mut i = 0usize;
        for (&j, &len) in idx.iter().zip(&self.shape) {
            if j < 0 || j as usize >= len {
                return None;
            }
            i = i * len + j as usize;
        }
        Some(i)
    }

    pub fn coords(&self, i: usize) -> Vec<f64> {
        self.unravel(i)
            .iter()
            .zip(&self.origin)
            .map(|(&j, o)| o + j as f64 * self.spacing)
            .collect()
    }

    /// Trapezoid-rule integral.
    pub fn mass(&self) -> f64 {
        let h = self.spacing;
        (0..self.len())
            .map(|i| {
                let w: f64 = self
                    .unravel(i)
                    .iter()
                    .zip(&self.shape)
                    .map(|(&j, &s)| if j == 0 || j + 1 == s { 0.5 * h } else { h })
                    .product();
                w * self.values[i]
            })
            .sum()
    }

    /// Largest finite-difference slope along any axis.
    pub fn max_axis_slope(&self) -> f64 {
        (0..self.len())
            .into_par_iter()
            .map(|i| {
                let idx = self.unravel(i);
                (0..self.dim)
                    .filter_map(|k| {
                        let mut next: Vec<i64> = idx.iter().map(|&j| j as i64).collect();
                        next[k] += 1;
                        self.ravel(&next).map(|j| (self.values[j] - self.values[i]).abs() / self.spacing)
                    })
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }

    fn same_grid(&self, other: &Self) -> bool {
        self.dim == other.dim && self.origin == other.origin && self.spacing == other.spacing && self.shape == other.shape
    }

    /// Lattice offsets within `radius`.
    fn ball_mask(&self, radius: f64) -> Vec<Vec<i64>> {
        let m = (radius / self.spacing).floor() as i64;
        let r2 = (radius / self.spacing).powi(2) * (1.0 + 1e-12);
        let mut out = vec![vec![]];
        for _ in 0..self.dim {
            out = out
                .into_iter()
                .flat_map(|o: Vec<i64>| (-m..=m).map(move |j| [o.clone(), vec![j]].concat()))
                .collect();
        }
        out.retain(|o| o.iter().map(|&j| (j * j) as f64).sum::<f64>() <= r2);
        out
    }

    /// Whether the `radius` ball around point `i` stays inside the lattice.
    pub fn ball_inside(&self, i: usize, radius: f64) -> bool {
        let m = (radius / self.spacing).floor() as usize;
        self.unravel(i).iter().zip(&self.shape).all(|(&j, &s)| j >= m && j + m < s)
    }

    fn sum_over(&self, i: usize, mask: &[Vec<i64>]) -> f64 {
        let idx: Vec<i64> = self.unravel(i).iter().map(|&j| j as i64).collect();
        mask.iter()
            .filter_map(|o| {
                let p: Vec<i64> = idx.iter().zip(o).map(|(a, b)| a + b).collect();
                self.ravel(&p).map(|j| self.values[j])
            })
            .sum()
    }

    /// Lattice estimate of the probability of the `radius` ball around point `i`.
    pub fn ball_mass(&self, i: usize, radius: f64) -> f64 {
        let mask = self.ball_mask(radius);
        self.sum_over(i, &mask) * self.spacing.powi(self.dim as i32)
    }
}

/// `r^d π^(d/2) / Γ(d/2 + 1)`.
pub fn ball_volume(d: usize, r: f64) -> f64 {
    let half = d as f64 / 2.0;
    r.powi(d as i32) * std::f64::consts::PI.powf(half) / gamma(half + 1.0)
}

/// Ball averages with zero extension outside the lattice; total lattice mass
/// is preserved for densities supported away from the edges.
pub fn smooth_unnormalized(density: &GriddedDensity, radius: f64) -> Result<GriddedDensity> {
    if radius < density.spacing {
        return Err(Error::RadiusBelowResolution { radius, spacing: density.spacing });
    }
    let mask = density.ball_mask(radius);
    let count = mask.len() as f64;
    let values = (0..density.len())
        .into_par_iter()
        .map(|i| density.sum_over(i, &mask) / count)
        .collect();
    Ok(GriddedDensity { values, ..density.clone() })
}

/// [`smooth_unnormalized`] rescaled to unit trapezoid mass.
pub fn smooth(density: &GriddedDensity, radius: f64) -> Result<GriddedDensity> {
    let mut g = smooth_unnormalized(density, radius)?;
    let mass = g.mass();
    g.values.iter_mut().for_each(|v| *v /= mass);
    Ok(g)
}

/// Smoothing radius `s` and Wasserstein budget `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingConfig {
    pub radius: f64,
    pub w2_budget: f64,
}

impl SmoothingConfig {
    pub fn new(radius: f64, w2_budget: f64) -> Result<Self> {
        if !(radius > w2_budget && w2_budget > 0.0) {
            return Err(invalid("radius", format!("need radius > w2_budget > 0, got {radius} and {w2_budget}")));
        }
        Ok(Self { radius, w2_budget })
    }
}

/// `vol_d(s)/vol_d(s - ε)`.
pub fn volume_ratio(config: &SmoothingConfig, d: usize) -> f64 {
    ball_volume(d, config.radius) / ball_volume(d, config.radius - config.w2_budget)
}

/// `(1 + ε/(s - ε))^d` for `d = 1..=max_dim`.
pub fn ratio_curve(config: &SmoothingConfig, max_dim: usize) -> Vec<(usize, f64)> {
    let base = 1.0 + config.w2_budget / (config.radius - config.w2_budget);
    (1..=max_dim).map(|d| (d, base.powi(d as i32))).collect()
}

/// `R q_s + (R - 1) 2 s L + ε / vol_d(s - ε)`.
pub fn theorem2_rhs(q_smoothed_value: f64, config: &SmoothingConfig, d: usize, lipschitz: f64) -> f64 {
    let r = volume_ratio(config, d);
    r * q_smoothed_value
        + (r - 1.0) * 2.0 * config.radius * lipschitz
        + config.w2_budget / ball_volume(d, config.radius - config.w2_budget)
}

/// `R q_s + (Δ + ε)/vol_d(s - ε)` with `Δ = (vol_d(s) - vol_d(s - ε)) 2 s L`;
/// algebraically equal to [`theorem2_rhs`].
pub fn theorem2_rhs_annulus_form(q_smoothed_value: f64, config: &SmoothingConfig, d: usize, lipschitz: f64) -> f64 {
    let (v, vi) = (ball_volume(d, config.radius), ball_volume(d, config.radius - config.w2_budget));
    let delta = (v - vi) * 2.0 * config.radius * lipschitz;
    (v / vi) * q_smoothed_value + (delta + config.w2_budget) / vi
}

/// `W₂` between two 1-d gridded densities via quantile functions.
pub fn wasserstein2_1d(p: &GriddedDensity, q: &GriddedDensity) -> Result<f64> {
    if p.dim != 1 || !p.same_grid(q) {
        return Err(Error::GridMismatch("need two 1-d densities on the same grid".into()));
    }
    let cdf = |g: &GriddedDensity| {
        let mut c = vec![0.0; g.len()];
        for i in 1..g.len() {
            c[i] = c[i - 1] + 0.5 * g.spacing * (g.values[i] + g.values[i - 1]);
        }
        let total = c[g.len() - 1];
        c.iter_mut().for_each(|v| *v /= total);
        c
    };
    let quantile = |c: &[f64], u: f64| {
        let j = c.partition_point(|&v| v < u).clamp(1, c.len() - 1);
        let (c0, c1) = (c[j - 1], c[j]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        p.origin[0] + (j as f64 - 1.0 + t) * p.spacing
    };
    let (cp, cq) = (cdf(p), cdf(q));
    let m = 20_000;
    let sum: f64 = (0..m)
        .map(|k| {
            let u = (k as f64 + 0.5) / m as f64;
            (quantile(&cp, u) - quantile(&cq, u)).powi(2)
        })
        .sum();
    Ok((sum / m as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub dim: usize,
    pub radius: f64,
    pub w2_budget: f64,
    /// `W₂` used to judge the budget (supplied or computed).
    pub w2: f64,
    /// Whether `W₂ <= ε²`; if not, violations are expected.
    pub budget_consistent: bool,
    pub checked_points: usize,
    pub excluded_boundary_points: usize,
    /// Points where the smoothed bound fails.
    pub violations: usize,
    pub min_slack: f64,
    pub max_slack: f64,
    pub ball_checks: usize,
    pub ball_violations: usize,
    pub ratio_curve: Vec<(usize, f64)>,
}

/// Checks the smoothed bound at every interior point and the ball inequality
/// `p(B_r(x)) <= q(B_{r+ε}(x)) + ε` at a sub-lattice of centres.
pub fn verify_bound(p: &GriddedDensity, q: &GriddedDensity, config: &SmoothingConfig, w2: Option<f64>) -> Result<VerificationReport> {
    if !p.same_grid(q) {
        return Err(Error::GridMismatch("p and q must share a lattice".into()));
    }
    let w2 = match w2 {
        Some(v) => v,
        None if p.dim == 1 => wasserstein2_1d(p, q)?,
        None => return Err(invalid("w2", "must be supplied for d > 1")),
    };
    let d = p.dim;
    let lipschitz = p.lipschitz.max(q.lipschitz);
    let ps = smooth(p, config.radius)?;
    let qs = smooth(q, config.radius)?;

    let (slacks, excluded): (Vec<f64>, Vec<bool>) = (0..p.len())
        .into_par_iter()
        .map(|i| {
            if p.ball_inside(i, config.radius) {
                (theorem2_rhs(qs.values[i], config, d, lipschitz) - ps.values[i], false)
            } else {
                (f64::NAN, true)
            }
        })
        .unzip();
    let checked: Vec<f64> = slacks.into_iter().filter(|s| !s.is_nan()).collect();

    let eps = config.w2_budget;
    let stride = (p.shape[0] / 64).max(1);
    let radii = [0.25 * config.radius, 0.5 * config.radius, config.radius];
    let centres: Vec<usize> = (0..p.len())
        .filter(|&i| p.unravel(i).iter().all(|j| j % stride == 0))
        .collect();
    let ball: Vec<bool> = centres
        .par_iter()
        .flat_map_iter(|&i| radii.iter().map(move |&r| (i, r)))
        .filter(|&(i, r)| p.ball_inside(i, r + eps))
        .map(|(i, r)| p.ball_mass(i, r) <= q.ball_mass(i, r + eps) + eps)
        .collect();

    Ok(VerificationReport {
        dim: d,
        radius: config.radius,
        w2_budget: eps,
        w2,
        budget_consistent: w2 <= eps * eps * (1.0 + 1e-9),
        checked_points: checked.len(),
        excluded_boundary_points: excluded.iter().filter(|&&e| e).count(),
        violations: checked.iter().filter(|&&s| s < 0.0).count(),
        min_slack: checked.iter().copied().fold(f64::INFINITY, f64::min),
        max_slack: checked.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ball_checks: ball.len(),
        ball_violations: ball.iter().filter(|&&ok| !ok).count(),
        ratio_curve: ratio_curve(config, 10),
    })
}

/// Normal density on a 1-d lattice `[lo, lo + (k-1) h]` with its exact
/// Lipschitz constant `φ(1)/σ²`.
pub fn gaussian_1d(mean: f64, sd: f64, lo: f64, spacing: f64, points: usize) -> Result<GriddedDensity> {
    let lip = (-0.5f64).exp() / ((2.0 * std::f64::consts::PI).sqrt() * sd * sd);
    GriddedDensity::from_fn(vec![lo], spacing, vec![points], lip, |x| {
        let z = (x[0] - mean) / sd;
        (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
    })
}
