//! Critical epoch, mean-gap growth and the non-privacy certificate.

use serde::{Deserialize, Serialize};

use super::{exact_tail_mass, gaussian_tail_bound, log_chernoff_mass_bound, log_exact_tail_mass, EpochState, SgldCoefficients};
use crate::error::{Error, Result};
use crate::model::{DomainSpec, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalEpochReport {
    pub k_dot: f64,
    pub k_star: u64,
    /// `T = (k_star + 1) n`.
    pub violation_step: u64,
    pub v1: f64,
    /// Set once a `delta` is fixed, see [`violation_epsilon`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_prime: Option<f64>,
}

impl CriticalEpochReport {
    /// Epoch at which the violation is certified, `k_star + 1`.
    pub fn violation_epoch(&self) -> u64 {
        self.k_star + 1
    }
}

/// Lower bounds on `n` needed for the critical-epoch analysis.
pub fn critical_epoch_gates(spec: &DomainSpec, model: &ModelParams) -> [(&'static str, f64); 3] {
    let s = spec.xh2_beta(model);
    let a = model.alpha;
    [
        ("n > alpha / (x_h^2 beta)", a / s),
        (
            "n > (alpha / (x_h^2 beta)) (e^(2/(x_h^2 beta)) - 2) + 1/(2 x_h^2 beta)",
            (a / s) * ((2.0 / s).exp() - 2.0) + 1.0 / (2.0 * s),
        ),
        ("n > 1/(2 alpha x_h^2 beta) - 1/(x_h^2 beta)", 1.0 / (2.0 * a * s) - 1.0 / s),
    ]
}

/// Epoch `k̇` where the decayed prior variance meets the injected noise.
pub fn critical_epoch(coeff: &SgldCoefficients, spec: &DomainSpec, model: &ModelParams) -> Result<CriticalEpochReport> {
    let n = spec.n_f64();
    for (bound, required) in critical_epoch_gates(spec, model) {
        if !(n > required) {
            return Err(Error::HypothesisViolated { bound, required, n });
        }
    }
    let d = coeff.one_minus_lambda;
    let one_minus_lam_sq = d * (2.0 - d);
    let arg_ln = -(one_minus_lam_sq / (model.alpha * coeff.eta)).ln_1p();
    let k_dot = arg_ln / coeff.ln_lambda() / (2.0 * n) - 1.0;
    if !(k_dot > 0.0) {
        return Err(Error::NonPositiveKdot(k_dot));
    }
    let k_star = k_dot.ceil() as u64;
    let s = spec.xh2_beta(model);
    Ok(CriticalEpochReport {
        k_dot,
        k_star,
        violation_step: (k_star + 1) * spec.n,
        v1: (1.0 + 2.0 * (1.0 / s).exp()).max(6.0),
        epsilon_prime: None,
    })
}

/// Lower bound on `μ - μ̂ʳ` at step `(k+1) n`, uniform in `r`:
/// `λ^(n-1) (n c x_h² β/(α + n x_h² β)) λ^(k(n-1)) (λ̂^(k+1) - λ^(k+1))`.
pub fn mean_gap_lower_bound(k: u64, coeff: &SgldCoefficients) -> f64 {
    let n = coeff.n as f64;
    let k1 = k as f64 + 1.0;
    let ll = coeff.ln_lambda();
    let llh = coeff.ln_lambda_hat();
    // λ̂^(k+1) - λ^(k+1) = λ^(k+1) expm1((k+1)(ln λ̂ - ln λ))
    let diff = (k1 * ll).exp() * (k1 * (llh - ll)).exp_m1();
    ((n - 1.0) * ll).exp() * coeff.d1_limit_mean() * ((k as f64) * (n - 1.0) * ll).exp() * diff
}

/// Violation level certified by the analytic bounds,
/// `e^(-2/(x_h² β)) (α/v1) (3/(32 x_h² β))² (c/n)² + ln(1/2 - δ)`.
pub fn violation_epsilon(report: &CriticalEpochReport, spec: &DomainSpec, model: &ModelParams, delta: f64) -> Result<f64> {
    if !(delta < 0.5) {
        return Err(Error::DeltaTooLarge(delta));
    }
    let s = spec.xh2_beta(model);
    let ratio = spec.c / spec.n_f64();
    let quad = (-2.0 / s).exp() * (model.alpha / report.v1) * (3.0 / (32.0 * s)).powi(2) * ratio * ratio;
    Ok(quad + (0.5 - delta).ln())
}

/// Masses of `S = {θ > μ_T}` under both databases at the violation step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateResult {
    #[serde(rename = "T")]
    pub t: u64,
    pub epsilon_prime: Option<f64>,
    pub epsilon_tested: f64,
    pub delta: f64,
    /// `D1` mass above its own mean.
    pub p1: f64,
    pub p2_exact: f64,
    /// Printed exponential bound (no factor 1/2).
    pub p2_chernoff: f64,
    /// Conventional Gaussian tail bound (factor 1/2).
    pub p2_tail_bound: f64,
    /// `p1 > e^ε p2_exact + δ`.
    pub violated: bool,
    pub violated_chernoff: bool,
    pub margin_exact: f64,
    pub margin_chernoff: f64,
    /// Largest `ε` refuted by each mass: `ln((p1 - δ)/p2)`.
    pub max_refuted_epsilon_exact: f64,
    pub max_refuted_epsilon_chernoff: f64,
}

pub fn certify_violation(report: &CriticalEpochReport, state_at_t: &EpochState, epsilon: f64, delta: f64) -> CertificateResult {
    let p1 = 0.5;
    let p2_exact = exact_tail_mass(state_at_t);
    let log_chernoff = log_chernoff_mass_bound(state_at_t);
    let p2_chernoff = log_chernoff.exp();
    let margin = |p2: f64| p1 - epsilon.exp() * p2 - delta;
    let refuted = |log_p2: f64| (p1 - delta).ln() - log_p2;
    let margin_exact = margin(p2_exact);
    let margin_chernoff = margin(p2_chernoff);
    CertificateResult {
        t: report.violation_step,
        epsilon_prime: report.epsilon_prime,
        epsilon_tested: epsilon,
        delta,
        p1,
        p2_exact,
        p2_chernoff,
        p2_tail_bound: gaussian_tail_bound(state_at_t),
        violated: margin_exact > 0.0,
        violated_chernoff: margin_chernoff > 0.0,
        margin_exact,
        margin_chernoff,
        max_refuted_epsilon_exact: refuted(log_exact_tail_mass(state_at_t)),
        max_refuted_epsilon_chernoff: refuted(log_chernoff),
    }
}
