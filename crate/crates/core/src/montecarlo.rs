//! Reference SGLD simulator and empirical distribution tools.

use rand::{Rng, SeedableRng};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Order in which a chain visits the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    /// Stored order starting at index `offset`, wrapping around.
    Cyclic { offset: usize },
    /// Cyclic with an offset drawn uniformly per chain.
    RandomRotation,
    /// Cyclic over one random permutation drawn per chain.
    ShuffledOnce,
    /// Independent uniform indices with replacement (exploratory only).
    UniformWithReplacement,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub eta: f64,
    pub steps: u64,
    pub batch: usize,
    pub order: Order,
    pub seed: u64,
    /// Stream index; chains sharing a seed but not a stream are independent.
    pub chain: u64,
}

impl ChainConfig {
    pub fn cyclic(eta: f64, steps: u64, seed: u64) -> Self {
        Self { eta, steps, batch: 1, order: Order::Cyclic { offset: 0 }, seed, chain: 0 }
    }
}

/// Generator for chain `chain` under `seed`: ChaCha8 keyed by the seed with
/// the chain index as stream id.
pub fn chain_rng(seed: u64, chain: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain);
    rng
}

/// Derives an unrelated seed (SplitMix64 finaliser).
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs one chain, calling `observe(step, θ)` at step 0 and after every
/// `every` steps. Draw order: prior sample, then the order's own draws, then
/// one normal per step.
fn drive(data: &Dataset, model: &ModelParams, config: &ChainConfig, every: u64, mut observe: impl FnMut(u64, f64)) -> f64 {
    let mut rng = chain_rng(config.seed, config.chain);
    let z: f64 = StandardNormal.sample(&mut rng);
    let mut theta = z / model.alpha.sqrt();
    observe(0, theta);
    let n = data.len();
    let b = config.batch.max(1);
    let mut offset = 0usize;
    let mut perm: Vec<usize> = (0..n).collect();
    match config.order {
        Order::Cyclic { offset: o } => offset = o,
        Order::RandomRotation if n > 0 => offset = rng.random_range(0..n),
        Order::ShuffledOnce => perm.shuffle(&mut rng),
        _ => {}
    }
    let sqrt_eta = config.eta.sqrt();
    let half_eta = 0.5 * config.eta;
    let scale = n as f64 / b as f64;
    let mut cursor = offset;
    for step in 1..=config.steps {
        let mut lik = 0.0;
        if n > 0 {
            for _ in 0..b {
                let idx = match config.order {
                    Order::UniformWithReplacement => rng.random_range(0..n),
                    _ => {
                        let i = perm[cursor % n];
                        cursor += 1;
                        i
                    }
                };
                let p = data.points[idx];
                lik += model.beta * p.x * (p.y - theta * p.x);
            }
        }
        let grad = -model.alpha * theta + scale * lik;
        let xi: f64 = StandardNormal.sample(&mut rng);
        theta += half_eta * grad + sqrt_eta * xi;
        if every > 0 && step % every == 0 {
            observe(step, theta);
        }
    }
    theta
}

/// Final iterate of one SGLD chain started from a prior draw.
pub fn run_chain(data: &Dataset, model: &ModelParams, config: &ChainConfig) -> f64 {
    drive(data, model, config, 0, |_, _| {})
}

/// Iterates at steps `0, every, 2 every, …, ≤ steps`.
pub fn run_chain_trace(data: &Dataset, model: &ModelParams, config: &ChainConfig, every: u64) -> Vec<f64> {
    let mut out = Vec::new();
    drive(data, model, config, every, |_, t| out.push(t));
    out
}

/// Final iterates of many chains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDist {
    pub samples: Vec<f64>,
    pub count: usize,
}

impl EmpiricalDist {
    pub fn new(samples: Vec<f64>) -> Self {
        let count = samples.len();
        Self { samples, count }
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.count as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (self.count as f64 - 1.0)
    }

    pub fn se_mean(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }

    /// Standard error of the sample variance from the fourth central moment.
    pub fn se_variance(&self) -> f64 {
        let m = self.mean();
        let n = self.count as f64;
        let m4 = self.samples.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
        let v = self.variance();
        ((m4 - v * v * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()
    }

    /// Kolmogorov–Smirnov distance to a continuous CDF.
    pub fn ks_distance(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        let mut s = self.samples.clone();
        s.sort_by(f64::total_cmp);
        let n = s.len() as f64;
        s.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                ((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
            })
            .fold(0.0, f64::max)
    }
}

/// Runs `chains` chains (streams `0..chains`) in parallel.
pub fn simulate(data: &Dataset, model: &ModelParams, config: &ChainConfig, chains: u64) -> EmpiricalDist {
    let samples = (0..chains)
        .into_par_iter()
        .map(|i| run_chain(data, model, &ChainConfig { chain: i, ..*config }))
        .collect();
    EmpiricalDist::new(samples)
}

/// Per-record-point distributions of [`run_chain_trace`] over many chains.
pub fn simulate_trace(data: &Dataset, model: &ModelParams, config: &ChainConfig, chains: u64, every: u64) -> Vec<EmpiricalDist> {
    let traces: Vec<Vec<f64>> = (0..chains)
        .into_par_iter()
        .map(|i| run_chain_trace(data, model, &ChainConfig { chain: i, ..*config }, every))
        .collect();
    let points = traces.first().map_or(0, Vec::len);
    (0..points)
        .map(|j| EmpiricalDist::new(traces.iter().map(|t| t[j]).collect()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetMass {
    pub mass: f64,
    pub se: f64,
}

/// Fraction of samples strictly above `threshold`, with binomial SE.
pub fn empirical_set_mass(dist: &EmpiricalDist, threshold: f64) -> Result<SetMass> {
    if dist.count < 100 {
        return Err(Error::TooFewSamples(dist.count));
    }
    let n = dist.count as f64;
    let hits = dist.samples.iter().filter(|&&s| s > threshold).count() as f64;
    let mass = hits / n;
    Ok(SetMass { mass, se: (mass * (1.0 - mass) / n).sqrt() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditResult {
    pub chains: u64,
    pub threshold: f64,
    pub p_a: f64,
    pub p_b: f64,
    pub se_a: f64,
    pub se_b: f64,
    /// `p_a - e^ε p_b - δ`.
    pub margin: f64,
    pub ci_level: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Frequency test of `P_A(S) <= e^ε P_B(S) + δ` on `S = {θ > threshold}`.
///
/// Chains on `data_a` follow `config.order`; chains on `data_b` use a fresh
/// uniform rotation each. The interval is a percentile bootstrap over
/// resampled chains (2000 replicates, 99%).
#[allow(clippy::too_many_arguments)]
pub fn empirical_dp_audit(
    data_a: &Dataset,
    data_b: &Dataset,
    model: &ModelParams,
    config: &ChainConfig,
    epsilon: f64,
    delta: f64,
    chains: u64,
    threshold: f64,
) -> Result<AuditResult> {
    if chains < 10_000 {
        return Err(crate::error::invalid("chains", format!("need at least 10^4, got {chains}")));
    }
    let a = simulate(data_a, model, config, chains);
    let cb = ChainConfig { order: Order::RandomRotation, seed: derive_seed(config.seed, 1), ..*config };
    let b = simulate(data_b, model, &cb, chains);
    let ma = empirical_set_mass(&a, threshold)?;
    let mb = empirical_set_mass(&b, threshold)?;
    let e = epsilon.exp();
    let margin_of = |pa: f64, pb: f64| pa - e * pb - delta;

    let replicates = 2000;
    let mut rng = chain_rng(derive_seed(config.seed, 2), 0);
    let draw = |p: f64, rng: &mut ChaCha8Rng| -> f64 {
        Binomial::new(chains, p).expect("valid probability").sample(rng) as f64 / chains as f64
    };
    let mut boot: Vec<f64> = (0..replicates)
        .map(|_| {
            let pa = draw(ma.mass, &mut rng);
            let pb = draw(mb.mass, &mut rng);
            margin_of(pa, pb)
        })
        .collect();
    boot.sort_by(f64::total_cmp);
    let q = |p: f64| boot[((p * (replicates - 1) as f64).round() as usize).min(replicates - 1)];
    Ok(AuditResult {
        chains,
        threshold,
        p_a: ma.mass,
        p_b: mb.mass,
        se_a: ma.se,
        se_b: mb.se,
        margin: margin_of(ma.mass, mb.mass),
        ci_level: 0.99,
        ci_low: q(0.005),
        ci_high: q(0.995),
    })
}
