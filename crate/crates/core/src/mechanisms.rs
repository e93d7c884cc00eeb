//! Laplace noise and the Propose-Test-Sample mechanism for private posterior
//! sampling on unrestricted data.
//!
//! The mechanism clips the data, privately discards points whose slope is
//! implausibly large (set `V`), privately estimates the slope, keeps points
//! near it (set `W`), and releases one posterior draw on `W` only if a noisy
//! count of `W` clears `n_min`.

use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{DataPoint, Dataset};
use crate::error::{invalid, Error, Result};
use crate::model::ModelParams;
use crate::montecarlo::{run_chain, ChainConfig, Order};
use crate::posterior::posterior;

/// One draw from Laplace(0, `scale`) by inversion.
pub fn laplace_sample<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample::<f64, _>(Open01) - 0.5;
    -scale * u.signum() * (-2.0 * u.abs()).ln_1p()
}

/// How `n_min` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateMode {
    /// Every term, including the asymptotic privacy constants.
    #[default]
    Strict,
    /// Only the structural term `n2^(rho2/gamma1)`; the asymptotic constants
    /// are far beyond desk-scale `n`.
    Relaxed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PtsParams {
    pub epsilon: f64,
    pub delta: f64,
    pub x_l: f64,
    pub x_h: f64,
    pub alpha: f64,
    pub beta: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub gamma1: f64,
    #[serde(default)]
    pub gate: GateMode,
}

impl PtsParams {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, name: &'static str, what: &str| {
            if ok { Ok(()) } else { Err(invalid(name, what.to_string())) }
        };
        check(self.epsilon > 0.0, "epsilon", "must be positive")?;
        check(self.delta > 0.0 && self.delta < 0.5, "delta", "must lie in (0, 1/2)")?;
        check(self.x_l > 0.0 && self.x_l < self.x_h, "x_l/x_h", "need 0 < x_l < x_h")?;
        check(self.alpha > 0.0, "alpha", "must be positive")?;
        check(self.beta >= 3.0 / (self.x_h * self.x_h), "beta", "need beta >= 3/x_h^2")?;
        check(self.rho1 > 1.0 && self.rho1 < 1.5, "rho1", "must lie in (1, 3/2)")?;
        check(self.rho2 > 0.0 && self.rho2 < 0.5, "rho2", "must lie in (0, 1/2)")?;
        check(self.gamma1 > self.rho2 && self.gamma1 < 0.5, "gamma1", "must lie in (rho2, 1/2)")?;
        Ok(())
    }

    pub fn model(&self) -> ModelParams {
        ModelParams { alpha: self.alpha, beta: self.beta }
    }

    /// Offset subtracted from every noisy count, `(1/ε) ln(1/(2δ))`.
    pub fn count_shift(&self) -> f64 {
        (1.0 / (2.0 * self.delta)).ln() / self.epsilon
    }

    /// The parameter set used for the non-privacy argument about the SGLD
    /// variant, at a chosen per-query budget.
    pub fn non_private_claim(epsilon: f64, delta: f64) -> Self {
        Self {
            epsilon,
            delta,
            x_l: 0.5,
            x_h: 1.0,
            alpha: 1.0,
            beta: 3.0,
            rho1: 1.25,
            rho2: 0.45,
            gamma1: 0.49,
            gate: GateMode::Strict,
        }
    }
}

/// Terms of `n_min`, in order: the seven budget terms, the two RDP
/// hypothesis terms, and `n2^(rho2/gamma1)`.
pub fn n_min_terms(params: &PtsParams, m_noisy: f64, n2: f64) -> [f64; 10] {
    let (eps, b, a, g1) = (params.epsilon, params.beta, params.alpha, params.gamma1);
    let nu = 2.0 * (1.0 / params.delta).ln() / eps + 1.0;
    let xh2 = params.x_h * params.x_h;
    let xl2 = params.x_l * params.x_l;
    let xh4 = xh2 * xh2;
    let r = xh2 / xl2;
    let k4 = (xh2 * b) * (xh2 * a + xh4 * b) / (0.9 * (xl2 * b).powi(2));
    let k5 = (xh2 * a + xh4 * b).powi(2) / (0.9 * xl2 * xl2 * xl2 * b);
    let m = m_noisy.max(0.0);
    [
        1.0 + r * 8.0 / eps,
        1.0 + nu * r * (1.0 + 8.0 * (nu - 1.0) / eps),
        (16.0 * nu * b * xh4 / (0.9 * eps * xl2)).powf(1.0 / (1.0 - 2.0 * g1)),
        (32.0 * nu * b / eps * k4 * m).powf(1.0 / (2.0 - g1)),
        (32.0 * nu * b / eps * k4).powf(1.0 / (2.0 - 2.0 * g1)),
        (8.0 * nu / eps * k5 * m).powf(2.0 / 3.0),
        (8.0 * nu / eps * k5).powf(1.0 / (3.0 - 2.0 * g1)),
        1.0 + r * 10.0 * nu / b,
        1.0 + nu * r,
        n2.max(0.0).powf(params.rho2 / g1),
    ]
}

/// Minimum noisy size of `W` for releasing a sample. Computed after the slope
/// estimate is released, since several terms depend on it.
pub fn n_min(params: &PtsParams, m_noisy: f64, n2: f64) -> f64 {
    let t = n_min_terms(params, m_noisy, n2);
    match params.gate {
        GateMode::Strict => t.into_iter().fold(f64::NEG_INFINITY, f64::max),
        GateMode::Relaxed => t[9],
    }
}

/// Lower bounds on `n1` for the non-privacy argument about the SGLD variant.
pub fn claim_gates(params: &PtsParams, n_min_value: f64) -> [f64; 4] {
    let shift = params.count_shift();
    [
        n_min_value + 2.0 * shift,
        4.0 * shift,
        2f64.powf(10.0 * params.rho1),
        2f64.powf(9.0 + 10.0 * params.rho2),
    ]
}

/// Sensitivity of the ratio-of-sums slope over `V` when `|V| >= n2`.
pub fn m_sensitivity(n1_noisy: f64, n2: f64, params: &PtsParams) -> Result<f64> {
    if !(n2 > 1.0) {
        return Err(Error::DegenerateCount(n2));
    }
    let xh2 = params.x_h * params.x_h;
    let xl2 = params.x_l * params.x_l;
    Ok(n1_noisy.max(0.0).powf(params.rho1) * (2.0 * (n2 - 1.0) * xh2 * xl2 + xh2 * xh2)
        / (n2 * (n2 - 1.0) * xl2 * xl2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PtsOutcome {
    NullAtStep10,
    NullAtStep18,
    Sampled,
}

/// Every intermediate value of one run. Fields after the first null are
/// absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtsTrace {
    pub n1: usize,
    pub n1_noisy: f64,
    pub v_size: usize,
    pub n2: f64,
    pub m: Option<f64>,
    pub m_noisy: Option<f64>,
    pub w_size: Option<usize>,
    pub n_w: Option<f64>,
    pub n_min: Option<f64>,
    pub outcome: PtsOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<f64>,
}

/// Clip `x` into `[x_l, x_h]` (max first, then min) and `y` to `y >= 0`.
pub fn clip(data: &Dataset, params: &PtsParams) -> Dataset {
    Dataset::new(
        data.points
            .iter()
            .map(|p| DataPoint::new(p.x.max(params.x_l).min(params.x_h), p.y.max(0.0)))
            .collect(),
    )
}

/// Outcome of the tests preceding the final draw.
enum Tested {
    Null(PtsTrace),
    Release(PtsTrace, Dataset),
}

fn propose_and_test<R: Rng + ?Sized>(data: &Dataset, params: &PtsParams, rng: &mut R) -> Tested {
    let clipped = clip(data, params);
    let shift = params.count_shift();
    let lap = 1.0 / params.epsilon;
    let n1 = clipped.len();

    let n1_noisy = n1 as f64 - shift + laplace_sample(lap, rng);
    // a nonpositive noisy size caps slopes at zero
    let cap = n1_noisy.max(0.0).powf(params.rho1);
    let v: Vec<DataPoint> = clipped.points.iter().copied().filter(|p| p.y / p.x <= cap).collect();
    let n2 = v.len() as f64 - shift + laplace_sample(lap, rng);
    let mut trace = PtsTrace {
        n1,
        n1_noisy,
        v_size: v.len(),
        n2,
        m: None,
        m_noisy: None,
        w_size: None,
        n_w: None,
        n_min: None,
        outcome: PtsOutcome::NullAtStep10,
        sample: None,
    };
    if n2 <= 1.0 {
        return Tested::Null(trace);
    }

    let (sxy, sxx) = v.iter().fold((0.0, 0.0), |(a, b), p| (a + p.x * p.y, b + p.x * p.x));
    // V can be empty when the count noise is large; the slope is then 0
    let m = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let sens = m_sensitivity(n1_noisy, n2, params).expect("n2 > 1 checked above");
    let m_noisy = m + laplace_sample(sens / params.epsilon, rng);

    let width = n2.powf(params.rho2);
    let w: Vec<DataPoint> = clipped
        .points
        .iter()
        .copied()
        .filter(|p| (p.y / p.x - m_noisy).abs() <= width)
        .collect();
    let n_w = w.len() as f64 - shift + laplace_sample(lap, rng);
    let gate = n_min(params, m_noisy, n2);

    trace.m = Some(m);
    trace.m_noisy = Some(m_noisy);
    trace.w_size = Some(w.len());
    trace.n_w = Some(n_w);
    trace.n_min = Some(gate);
    if n_w < gate {
        trace.outcome = PtsOutcome::NullAtStep18;
        return Tested::Null(trace);
    }
    trace.outcome = PtsOutcome::Sampled;
    Tested::Release(trace, Dataset::new(w))
}

/// One run of Propose-Test-Sample releasing an exact posterior draw on `W`.
pub fn propose_test_sample<R: Rng + ?Sized>(data: &Dataset, params: &PtsParams, rng: &mut R) -> (Option<f64>, PtsTrace) {
    match propose_and_test(data, params, rng) {
        Tested::Null(trace) => (None, trace),
        Tested::Release(mut trace, w) => {
            let g = posterior(&w, &params.model());
            let z: f64 = StandardNormal.sample(rng);
            let s = g.mean + g.sd() * z;
            trace.sample = Some(s);
            (Some(s), trace)
        }
    }
}

/// Step size of the SGLD variant, `1/(α + n1 x_h² β)²`.
pub fn pts_sgld_eta(n1: usize, params: &PtsParams) -> f64 {
    let a = params.alpha + n1 as f64 * params.x_h * params.x_h * params.beta;
    1.0 / (a * a)
}

/// As [`propose_test_sample`], but the release runs `steps` cyclic SGLD
/// steps on `W` from a prior draw. The random stream consumed by the tests
/// is identical to the exact variant's.
pub fn propose_test_sample_sgld<R: Rng + ?Sized>(
    data: &Dataset,
    params: &PtsParams,
    steps: u64,
    rng: &mut R,
) -> Result<(Option<f64>, PtsTrace)> {
    if steps == 0 {
        return Err(invalid("steps", "must be at least 1"));
    }
    Ok(match propose_and_test(data, params, rng) {
        Tested::Null(trace) => (None, trace),
        Tested::Release(mut trace, w) => {
            let config = ChainConfig {
                eta: pts_sgld_eta(trace.n1, params),
                steps,
                batch: 1,
                order: Order::Cyclic { offset: 0 },
                seed: rng.next_u64(),
                chain: 0,
            };
            let s = run_chain(&w, &params.model(), &config);
            trace.sample = Some(s);
            (Some(s), trace)
        }
    })
}
