//! Sizing a counterexample: a database on which the posterior is (ε, δ)-DP
//! while cyclic SGLD at step `T` is not (ε′, δ)-DP.

use serde::{Deserialize, Serialize};

use super::{certify_violation, critical_epoch, state_at_epoch, violation_epsilon, CertificateResult, CriticalEpochReport, SgldCoefficients};
use crate::error::{invalid, Error, Result};
use crate::model::{DomainSpec, ModelParams};
use crate::posterior::{posterior_adp_with, NuGrid, PrivacyBudget, RdpBound};

pub const DEFAULT_MAX_N: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Target {
    pub epsilon: f64,
    pub epsilon_prime: f64,
    pub delta: f64,
}

impl Theorem1Target {
    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::DeltaTooLarge(self.delta));
        }
        if !(self.epsilon > 0.0 && self.epsilon_prime > self.epsilon) {
            return Err(invalid(
                "epsilon_prime",
                format!("need epsilon_prime > epsilon > 0, got {} and {}", self.epsilon_prime, self.epsilon),
            ));
        }
        Ok(())
    }
}

/// Intermediate lower bounds on `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Sizes {
    pub nu1: f64,
    /// SGLD hypothesis bounds.
    pub n1: f64,
    /// Posterior budget bounds.
    pub n2: f64,
    /// RDP hypothesis bounds at `nu1`.
    pub n3: f64,
    /// Size at which the certified level reaches `epsilon_prime`.
    pub n_eps_prime: f64,
    pub n_p: f64,
    pub c_p: f64,
}

fn template_parts(base: &DomainSpec, model: &ModelParams) -> Result<(f64, f64, f64)> {
    let g1 = base.gamma1;
    let g2 = base
        .gamma2
        .ok_or_else(|| invalid("gamma2", "the template must carry gamma2"))?;
    if !(g2 > 1.0 + g1 && g2 < 1.5) {
        return Err(invalid("gamma2", format!("need 1 + gamma1 < gamma2 < 3/2, got {g2}")));
    }
    if base.x_h * base.x_h * model.beta <= 3.0 {
        return Err(invalid("x_h", "need x_h^2 beta > 3"));
    }
    Ok((base.x_h, g1, g2))
}

/// Lower bounds on `n` for the counterexample, with `x_l = x_h/2`.
pub fn theorem1_sizes(target: &Theorem1Target, base: &DomainSpec, model: &ModelParams) -> Result<Theorem1Sizes> {
    target.validate()?;
    model.validate()?;
    let (x_h, g1, g2) = template_parts(base, model)?;
    let (eps, delta) = (target.epsilon, target.delta);
    let (a, b) = (model.alpha, model.beta);
    let x_l = x_h / 2.0;
    let xh2 = x_h * x_h;
    let xl2 = x_l * x_l;
    let xh4 = xh2 * xh2;
    let r = xh2 / xl2;
    let s = xh2 * b;
    let nu = 2.0 * (1.0 / delta).ln() / eps + 1.0;

    let n1 = [
        1.0 / (2.0 * a * s) - 1.0 / s,
        a / s,
        (a / s) * ((2.0 / s).exp() - 2.0) + 1.0 / (2.0 * s),
    ]
    .into_iter()
    .fold(f64::NEG_INFINITY, f64::max);

    let k4 = s * (xh2 * a + xh4 * b) / (0.9 * (xl2 * b).powi(2));
    let k5 = (xh2 * a + xh4 * b).powi(2) / (0.9 * xl2 * xl2 * xl2 * b);
    let slack = 1.0 + 1.0 / (1.0 + 10.0 * r * nu / b).powf(g2 - g1);
    let n2 = [
        1.0 + r * 8.0 / eps,
        1.0 + nu * r * (1.0 + 8.0 * (nu - 1.0) / eps),
        (16.0 * nu * b * xh4 / (0.9 * eps * xl2)).powf(1.0 / (1.0 - 2.0 * g1)),
        (16.0 * nu * b / eps * k4 * slack).powf(1.0 / (2.0 - g1 - g2)),
        (4.0 * nu / eps * k5 * slack).powf(1.0 / (3.0 - 2.0 * g2)),
    ]
    .into_iter()
    .fold(f64::NEG_INFINITY, f64::max);

    let n3 = (1.0 + 10.0 * r * nu / b).max(1.0 + nu * r);

    let v1 = (1.0 + 2.0 * (1.0 / s).exp()).max(6.0);
    let n_eps_prime = ((target.epsilon_prime - (0.5 - delta).ln())
        * (2.0 / s).exp()
        * (32.0 * s / 3.0).powi(2)
        * v1
        / a)
        .powf(1.0 / (2.0 * (g2 - 1.0)));

    let n_p = n1.max(n2).max(n3).max(n_eps_prime);
    Ok(Theorem1Sizes { nu1: nu, n1, n2, n3, n_eps_prime, n_p, c_p: n_p.powf(g2) })
}

fn spec_at(n: u64, base: &DomainSpec, g2: f64) -> DomainSpec {
    DomainSpec {
        n,
        c: (n as f64).powf(g2),
        gamma1: base.gamma1,
        gamma2: Some(g2),
        x_l: base.x_h / 2.0,
        x_h: base.x_h,
    }
}

/// Smallest integer strictly above every lower bound; `c = n^gamma2`.
pub fn theorem1_instantiate(
    target: &Theorem1Target,
    base: &DomainSpec,
    model: &ModelParams,
    max_n: f64,
) -> Result<(DomainSpec, CriticalEpochReport)> {
    let sizes = theorem1_sizes(target, base, model)?;
    let n = sizes.n_p.floor() + 1.0;
    if !(n <= max_n) || n >= u64::MAX as f64 {
        return Err(Error::InfeasibleTarget { required: n, cap: max_n });
    }
    let g2 = base.gamma2.expect("checked by theorem1_sizes");
    let spec = spec_at(n as u64, base, g2);
    let coeff = SgldCoefficients::new(&spec, model);
    let mut report = critical_epoch(&coeff, &spec, model)?;
    report.epsilon_prime = Some(violation_epsilon(&report, &spec, model, target.delta)?);
    Ok((spec, report))
}

/// Counterexample found by direct certification below a size cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CappedInstance {
    /// Size the closed-form construction asks for.
    pub literal_n_p: f64,
    pub literal_feasible: bool,
    pub spec: DomainSpec,
    pub report: CriticalEpochReport,
    pub posterior_budget: PrivacyBudget,
    pub posterior_bound: RdpBound,
    pub certificate: CertificateResult,
    /// Largest ε refuted by both the exact and the exponential margins.
    pub certified_epsilon_prime: f64,
    pub reached_target: bool,
}

/// Uses the closed-form construction when it fits under `max_n`. Otherwise
/// scans `n` geometrically (with `c = n^gamma2`, `x_l = x_h/2`) for the
/// smallest size whose posterior passes the ε budget and whose SGLD law at
/// `T` is refuted at level `epsilon_prime` by both margins. If no size
/// reaches `epsilon_prime`, the largest size passing the posterior budget is
/// returned with its certified level.
pub fn instantiate_within_cap(
    target: &Theorem1Target,
    base: &DomainSpec,
    model: &ModelParams,
    max_n: f64,
) -> Result<CappedInstance> {
    let sizes = theorem1_sizes(target, base, model)?;
    let g2 = base.gamma2.expect("checked by theorem1_sizes");
    let grid = NuGrid::with_eps_ref(target.epsilon);

    let evaluate = |spec: &DomainSpec, eps_tested: f64| -> Result<(CriticalEpochReport, CertificateResult)> {
        let coeff = SgldCoefficients::new(spec, model);
        let mut report = critical_epoch(&coeff, spec, model)?;
        report.epsilon_prime = Some(violation_epsilon(&report, spec, model, target.delta)?);
        let state = state_at_epoch(report.violation_epoch(), &coeff, model);
        Ok((report, certify_violation(&report, &state, eps_tested, target.delta)))
    };
    let certified = |c: &CertificateResult| c.max_refuted_epsilon_exact.min(c.max_refuted_epsilon_chernoff);
    let finish = |spec: DomainSpec, post: (PrivacyBudget, RdpBound), report, certificate: CertificateResult, literal: bool| CappedInstance {
        literal_n_p: sizes.n_p,
        literal_feasible: literal,
        spec,
        report,
        posterior_budget: post.0,
        posterior_bound: post.1,
        certified_epsilon_prime: certified(&certificate),
        reached_target: certificate.violated && certificate.violated_chernoff,
        certificate,
    };

    if let Ok((spec, _)) = theorem1_instantiate(target, base, model, max_n) {
        let post = posterior_adp_with(&spec, model, target.delta, &grid)?;
        let (report, cert) = evaluate(&spec, target.epsilon_prime)?;
        return Ok(finish(spec, post, report, cert, true));
    }

    let n_lo = (sizes.n1.max(sizes.n3).floor() + 1.0).max(2.0);
    let mut candidates = Vec::new();
    let mut n = n_lo;
    while n < max_n {
        candidates.push(n.round() as u64);
        n *= 1.2;
    }
    candidates.push(max_n.floor() as u64);
    candidates.dedup();

    let mut best = None;
    for n in candidates {
        let spec = spec_at(n, base, g2);
        let Ok(post) = posterior_adp_with(&spec, model, target.delta, &grid) else { continue };
        if post.0.epsilon > target.epsilon {
            continue;
        }
        let Ok((report, cert)) = evaluate(&spec, target.epsilon_prime) else { continue };
        if cert.violated && cert.violated_chernoff {
            return Ok(finish(spec, post, report, cert, false));
        }
        best = Some((spec, post));
    }
    let (spec, post) = best.ok_or(Error::InfeasibleTarget { required: sizes.n_p, cap: max_n })?;
    let (_, probe) = evaluate(&spec, target.epsilon_prime)?;
    let level = certified(&probe) - 1e-6;
    let (report, cert) = evaluate(&spec, level)?;
    Ok(finish(spec, post, report, cert, false))
}
