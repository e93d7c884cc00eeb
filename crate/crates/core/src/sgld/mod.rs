//! Exact distributions of cyclic SGLD iterates on the neighbouring databases
//! `D1` (all points `(x_h, c x_h)`) and `D2` (last point halved).
//!
//! With batch size one every step is an affine map plus Gaussian noise, so an
//! epoch is too. On `D2` the iterate law depends on the cyclic position `r`
//! of the modified record; averaging the `n` position-conditional Gaussians
//! gives the mixture released when the shuffle is uniform.

mod critical;
mod theorem1;

pub use critical::{
    certify_violation, critical_epoch, mean_gap_lower_bound, violation_epsilon, CertificateResult,
    CriticalEpochReport,
};
pub use theorem1::{
    instantiate_within_cap, theorem1_instantiate, theorem1_sizes, CappedInstance, Theorem1Sizes,
    Theorem1Target, DEFAULT_MAX_N,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gaussian::{Gaussian1D, GaussianMixture1D};
use crate::model::{DomainSpec, ModelParams};
use crate::numerics::{geom_sum, geom_sum_log, geom_sum_sq, log_norm_sf, log_sum_exp, norm_sf, pow1m};

/// Step size and contraction/drift constants of the per-step maps.
///
/// A regular point `(x_h, c x_h)` maps `θ -> λ θ + ρ + √η ξ`; the halved point
/// maps `θ -> λ̂ θ + ρ̂ + √η ξ`. `one_minus_lambda` and `one_minus_lambda_hat`
/// are stored separately because `λ` is within 1e-6 of one at realistic `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgldCoefficients {
    pub n: u64,
    pub eta: f64,
    pub lambda: f64,
    pub lambda_hat: f64,
    pub rho: f64,
    pub rho_hat: f64,
    pub one_minus_lambda: f64,
    pub one_minus_lambda_hat: f64,
}

impl SgldCoefficients {
    /// Coefficients at the default step size `η = 2/(α + n x_h² β)²`.
    pub fn new(spec: &DomainSpec, model: &ModelParams) -> Self {
        let a = model.alpha + spec.n_f64() * spec.xh2_beta(model);
        let mut c = Self::with_eta(spec.n, spec.c, spec.x_h, model, 2.0 / (a * a));
        c.one_minus_lambda = 1.0 / a;
        c.lambda = 1.0 - c.one_minus_lambda;
        c
    }

    /// Coefficients for an arbitrary step size.
    pub fn with_eta(n: u64, c: f64, x_h: f64, model: &ModelParams, eta: f64) -> Self {
        let nf = n as f64;
        let s = x_h * x_h * model.beta;
        let d = 0.5 * eta * (model.alpha + nf * s);
        let d_hat = 0.5 * eta * (model.alpha + nf * s / 4.0);
        let rho = 0.5 * eta * nf * c * s;
        Self {
            n,
            eta,
            lambda: 1.0 - d,
            lambda_hat: 1.0 - d_hat,
            rho,
            rho_hat: rho / 4.0,
            one_minus_lambda: d,
            one_minus_lambda_hat: d_hat,
        }
    }

    pub fn ln_lambda(&self) -> f64 {
        (-self.one_minus_lambda).ln_1p()
    }

    pub fn ln_lambda_hat(&self) -> f64 {
        (-self.one_minus_lambda_hat).ln_1p()
    }

    /// `λ^m`.
    pub fn lambda_pow(&self, m: f64) -> f64 {
        pow1m(self.one_minus_lambda, m)
    }

    /// Stationary mean of the `D1` chain, `n c x_h² β / (α + n x_h² β)`.
    pub fn d1_limit_mean(&self) -> f64 {
        self.rho / self.one_minus_lambda
    }
}

pub fn coefficients(spec: &DomainSpec, model: &ModelParams) -> SgldCoefficients {
    SgldCoefficients::new(spec, model)
}

/// One epoch as `θ -> exp(log_mult) θ + drift + N(0, noise)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMap {
    pub log_mult: f64,
    pub drift: f64,
    pub noise: f64,
}

impl EpochMap {
    fn apply(&self, g: &Gaussian1D) -> Gaussian1D {
        let m = self.log_mult.exp();
        Gaussian1D {
            mean: m * g.mean + self.drift,
            variance: m * m * g.variance + self.noise,
        }
    }

    fn apply_k(&self, g: &Gaussian1D, k: u64) -> Gaussian1D {
        let kf = k as f64;
        Gaussian1D {
            mean: (kf * self.log_mult).exp() * g.mean + self.drift * geom_sum_log(self.log_mult, kf),
            variance: (2.0 * kf * self.log_mult).exp() * g.variance
                + self.noise * geom_sum_log(2.0 * self.log_mult, kf),
        }
    }
}

/// Epoch map of `D1`.
pub fn d1_epoch_map(c: &SgldCoefficients) -> EpochMap {
    let n = c.n as f64;
    let d = c.one_minus_lambda;
    EpochMap {
        log_mult: n * c.ln_lambda(),
        drift: c.rho * geom_sum(d, n),
        noise: c.eta * geom_sum_sq(d, n),
    }
}

/// Epoch map of `D2` when the halved record sits at cyclic position `r`
/// (1-based): `r - 1` regular steps, the halved step, then `n - r` regular
/// steps.
pub fn d2_epoch_map(c: &SgldCoefficients, r: u64) -> EpochMap {
    let n = c.n as f64;
    let r = r as f64;
    let d = c.one_minus_lambda;
    let after = n - r;
    let lam_after = pow1m(d, after);
    let lam_hat = c.lambda_hat;
    EpochMap {
        log_mult: c.ln_lambda_hat() + (n - 1.0) * c.ln_lambda(),
        drift: c.rho * lam_hat * lam_after * geom_sum(d, r - 1.0)
            + c.rho_hat * lam_after
            + c.rho * geom_sum(d, after),
        noise: c.eta
            * (lam_hat * lam_hat * lam_after * lam_after * geom_sum_sq(d, r - 1.0)
                + lam_after * lam_after
                + geom_sum_sq(d, after)),
    }
}

/// Distributions at an epoch boundary (step `epoch · n`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochState {
    pub epoch: u64,
    /// Iterate law on `D1`.
    pub d1: Gaussian1D,
    /// Iterate law on `D2` given cyclic position `r = 1..=n`.
    pub d2_components: Vec<Gaussian1D>,
}

impl EpochState {
    /// Every chain starts from the prior `N(0, 1/α)`.
    pub fn prior(n: u64, model: &ModelParams) -> Self {
        let g = Gaussian1D { mean: 0.0, variance: 1.0 / model.alpha };
        Self {
            epoch: 0,
            d1: g,
            d2_components: vec![g; n as usize],
        }
    }

    /// Uniform mixture over cyclic positions.
    pub fn d2_mixture(&self) -> GaussianMixture1D {
        GaussianMixture1D::uniform(self.d2_components.clone()).expect("nonempty state")
    }

    pub fn min_component_mean(&self) -> f64 {
        self.d2_components.iter().map(|g| g.mean).fold(f64::INFINITY, f64::min)
    }

    pub fn max_component_mean(&self) -> f64 {
        self.d2_components.iter().map(|g| g.mean).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Standardised separations `(μ - μ̂ʳ)/σ̂ʳ`.
    pub fn separations(&self) -> impl Iterator<Item = f64> + '_ {
        let mu = self.d1.mean;
        self.d2_components.iter().map(move |g| (mu - g.mean) / g.sd())
    }
}

pub fn advance_epoch(state: &EpochState, coeff: &SgldCoefficients) -> EpochState {
    let d1 = d1_epoch_map(coeff).apply(&state.d1);
    let d2_components = state
        .d2_components
        .par_iter()
        .enumerate()
        .map(|(i, g)| d2_epoch_map(coeff, i as u64 + 1).apply(g))
        .collect();
    EpochState { epoch: state.epoch + 1, d1, d2_components }
}

/// Closed-form state after `k` epochs from the prior.
pub fn state_at_epoch(k: u64, coeff: &SgldCoefficients, model: &ModelParams) -> EpochState {
    let prior = Gaussian1D { mean: 0.0, variance: 1.0 / model.alpha };
    let d1 = d1_epoch_map(coeff).apply_k(&prior, k);
    let d2_components = (1..=coeff.n)
        .into_par_iter()
        .map(|r| d2_epoch_map(coeff, r).apply_k(&prior, k))
        .collect();
    EpochState { epoch: k, d1, d2_components }
}

/// `(1/n) Σ_r (μ - μ̂ʳ)² / (σ̂ʳ)²`.
pub fn gap_metric(state: &EpochState) -> f64 {
    let n = state.d2_components.len() as f64;
    state.separations().map(|t| t * t).sum::<f64>() / n
}

/// Exponential bound on the `D2` mixture mass above the `D1` mean,
/// `(1/n) Σ_r exp(-(μ - μ̂ʳ)²/(σ̂ʳ)²)`, clamped to 1.
///
/// Without the usual factor 1/2 in the exponent this is not a valid tail
/// bound once a separation exceeds about 1.85; [`gaussian_tail_bound`] is the
/// conventional version and [`exact_tail_mass`] the exact value.
pub fn chernoff_mass_bound(state: &EpochState) -> f64 {
    (log_chernoff_mass_bound(state).exp()).min(1.0)
}

pub fn log_chernoff_mass_bound(state: &EpochState) -> f64 {
    let n = state.d2_components.len() as f64;
    (log_sum_exp(state.separations().map(|t| -t * t)) - n.ln()).min(0.0)
}

/// `(1/n) Σ_r exp(-t_r²/2)` over positive separations `t_r` (1 otherwise).
pub fn gaussian_tail_bound(state: &EpochState) -> f64 {
    let n = state.d2_components.len() as f64;
    state
        .separations()
        .map(|t| if t > 0.0 { (-0.5 * t * t).exp() } else { 1.0 })
        .sum::<f64>()
        / n
}

/// Exact `D2` mixture mass above the `D1` mean.
pub fn exact_tail_mass(state: &EpochState) -> f64 {
    let n = state.d2_components.len() as f64;
    state.separations().map(norm_sf).sum::<f64>() / n
}

pub fn log_exact_tail_mass(state: &EpochState) -> f64 {
    let n = state.d2_components.len() as f64;
    log_sum_exp(state.separations().map(log_norm_sf)) - n.ln()
}
