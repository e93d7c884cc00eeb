//! Conjugate posterior, Gaussian Rényi divergence and the posterior privacy
//! accountant (RDP bound, conversion to (ε, δ), order selection).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{DataPoint, Dataset, SufficientStats};
use crate::error::{invalid, Error, Result};
use crate::gaussian::Gaussian1D;
use crate::model::{DomainSpec, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
}

/// A Rényi-DP guarantee of order `nu`, with the five contributions to
/// `epsilon1` kept for auditing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdpBound {
    pub nu: f64,
    pub epsilon1: f64,
    pub terms: [f64; 5],
}

/// JSON report of a posterior ADP computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorReport {
    pub epsilon: f64,
    pub delta: f64,
    pub nu: f64,
    pub epsilon1: f64,
    pub terms: [f64; 5],
}

impl PosteriorReport {
    pub fn new(budget: PrivacyBudget, bound: RdpBound) -> Self {
        Self {
            epsilon: budget.epsilon,
            delta: budget.delta,
            nu: bound.nu,
            epsilon1: bound.epsilon1,
            terms: bound.terms,
        }
    }
}

pub fn posterior(data: &Dataset, model: &ModelParams) -> Gaussian1D {
    posterior_from_stats(data.stats(), model)
}

pub fn posterior_from_stats(s: SufficientStats, model: &ModelParams) -> Gaussian1D {
    let precision = model.alpha + model.beta * s.z;
    Gaussian1D {
        mean: model.beta * s.q / precision,
        variance: 1.0 / precision,
    }
}

/// `D_nu(p || q)` for univariate Gaussians.
pub fn renyi_divergence_gaussians(p: &Gaussian1D, q: &Gaussian1D, nu: f64) -> Result<f64> {
    if !(nu > 1.0) {
        return Err(invalid("nu", format!("must exceed 1, got {nu}")));
    }
    let mixed = nu * q.variance + (1.0 - nu) * p.variance;
    if !(mixed > 0.0) {
        return Err(Error::DivergenceUndefined(mixed));
    }
    let log_sd_ratio = 0.5 * (q.variance / p.variance).ln();
    let log_mixed = (q.variance / mixed).ln() / (2.0 * (nu - 1.0));
    let dm = p.mean - q.mean;
    let d = log_sd_ratio + log_mixed + 0.5 * nu * dm * dm / mixed;
    Ok(d.max(0.0))
}

fn powf_ln(base: f64, exp: f64) -> f64 {
    (exp * base.ln()).exp()
}

/// Checks the two lower bounds on `n` under which the RDP bound applies.
pub fn rdp_hypothesis(spec: &DomainSpec, model: &ModelParams, nu: f64) -> Result<()> {
    let n = spec.n_f64();
    let r = (spec.x_h / spec.x_l).powi(2);
    let b1 = 1.0 + 10.0 * r * nu / model.beta;
    let b2 = 1.0 + nu * r;
    if !(n > b1) {
        return Err(Error::HypothesisViolated { bound: "n > 1 + 10 (x_h/x_l)^2 nu / beta", required: b1, n });
    }
    if !(n > b2) {
        return Err(Error::HypothesisViolated { bound: "n > 1 + nu (x_h/x_l)^2", required: b2, n });
    }
    Ok(())
}

/// Order-`nu` RDP bound for one posterior sample on the restricted domain.
pub fn posterior_rdp_epsilon(spec: &DomainSpec, model: &ModelParams, nu: f64) -> Result<RdpBound> {
    if !(nu > 1.0) {
        return Err(invalid("nu", format!("must exceed 1, got {nu}")));
    }
    rdp_hypothesis(spec, model, nu)?;
    let (a, b) = (model.alpha, model.beta);
    let n = spec.n_f64();
    let g1 = spec.gamma1;
    let xh2 = spec.x_h * spec.x_h;
    let xl2 = spec.x_l * spec.x_l;
    let xh4 = xh2 * xh2;
    let xl6 = xl2 * xl2 * xl2;
    let spread = spec.c + powf_ln(n, g1);
    let k = xh2 * a + xh4 * b;

    let t1 = xh2 / (2.0 * (n - 1.0) * xl2);
    let t2 = 0.5 * (nu - 1.0) * nu * xh2 / ((n - 1.0) * xl2 - nu * xh2);
    let t3 = 2.0 * nu * b * xh4 / (0.9 * powf_ln(n, 1.0 - 2.0 * g1) * xl2);
    let t4 = 2.0 * nu * b * ((xh2 * b) * k / (0.9 * (xl2 * b).powi(2))) * spread / powf_ln(n, 2.0 - g1);
    let t5 = 0.5 * nu * (k * k / (0.9 * xl6 * b)) * spread * spread / (n * n * n);
    let terms = [t1, t2, t3, t4, t5];
    Ok(RdpBound {
        nu,
        epsilon1: terms.iter().sum(),
        terms,
    })
}

pub fn rdp_to_adp(bound: &RdpBound, delta: f64) -> PrivacyBudget {
    PrivacyBudget {
        epsilon: bound.epsilon1 + (1.0 / delta).ln() / (bound.nu - 1.0),
        delta,
    }
}

/// Candidate Rényi orders `1 + 2^k ln(1/δ)/eps_ref` for `k` in
/// `k_min..=k_max`, plus `1 + 2 ln(1/δ)/eps_ref`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuGrid {
    pub eps_ref: f64,
    pub k_min: i32,
    pub k_max: i32,
}

impl Default for NuGrid {
    fn default() -> Self {
        Self { eps_ref: 1.0, k_min: -10, k_max: 20 }
    }
}

impl NuGrid {
    pub fn with_eps_ref(eps_ref: f64) -> Self {
        Self { eps_ref, ..Self::default() }
    }

    pub fn points(&self, delta: f64) -> Vec<f64> {
        let base = (1.0 / delta).ln() / self.eps_ref;
        let mut v: Vec<f64> = (self.k_min..=self.k_max)
            .map(|k| 1.0 + 2f64.powi(k) * base)
            .collect();
        v.push(1.0 + 2.0 * base);
        v
    }
}

pub fn posterior_adp(spec: &DomainSpec, model: &ModelParams, delta: f64) -> Result<(PrivacyBudget, RdpBound)> {
    posterior_adp_with(spec, model, delta, &NuGrid::default())
}

/// Minimises the converted ε over the admissible orders of `grid`.
pub fn posterior_adp_with(
    spec: &DomainSpec,
    model: &ModelParams,
    delta: f64,
    grid: &NuGrid,
) -> Result<(PrivacyBudget, RdpBound)> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(invalid("delta", format!("must lie in (0, 1/2), got {delta}")));
    }
    spec.validate_with(model)?;
    grid.points(delta)
        .into_iter()
        .filter_map(|nu| posterior_rdp_epsilon(spec, model, nu).ok())
        .map(|b| (rdp_to_adp(&b, delta), b))
        .min_by(|x, y| x.0.epsilon.total_cmp(&y.0.epsilon))
        .ok_or(Error::NoAdmissibleNu { n: spec.n })
}

/// Largest Rényi divergence between posteriors of neighbouring databases
/// found by grid search.
///
/// Each database holds `n - 1` copies of a domain corner and one free record;
/// the neighbour swaps that record for another grid record or for `(0, 0)`
/// (removal). Both orderings of every pair are evaluated.
pub fn worst_case_renyi_oracle(spec: &DomainSpec, model: &ModelParams, nu: f64, grid_size: usize) -> Result<f64> {
    if grid_size < 2 {
        return Err(invalid("grid_size", "must be at least 2"));
    }
    let tol = spec.slope_tolerance();
    let lin = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (grid_size - 1) as f64;
    let mut records = vec![DataPoint::new(0.0, 0.0)];
    for i in 0..grid_size {
        let x = lin(spec.x_l, spec.x_h, i);
        for j in 0..grid_size {
            records.push(DataPoint::new(x, lin(spec.c - tol, spec.c + tol, j) * x));
        }
    }
    let m = spec.n_f64() - 1.0;
    let mut bases = Vec::new();
    for x in [spec.x_l, spec.x_h] {
        for s in [spec.c - tol, spec.c + tol] {
            bases.push(SufficientStats { z: m * x * x, q: m * x * x * s });
        }
    }
    bases
        .par_iter()
        .flat_map_iter(|base| records.iter().map(move |a| (*base, *a)))
        .map(|(base, a)| {
            let p = posterior_from_stats(base.with_point(&a), model);
            records.iter().try_fold(0.0f64, |acc, b| {
                let q = posterior_from_stats(base.with_point(b), model);
                Ok(acc.max(renyi_divergence_gaussians(&p, &q, nu)?))
            })
        })
        .try_reduce(|| 0.0, |x, y| Ok(x.max(y)))
}
