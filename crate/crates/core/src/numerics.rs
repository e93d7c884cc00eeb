//! Numerically stable powers and geometric sums for ratios close to one.
//!
//! Contraction factors appear as `1 - d` with `d` as small as 1e-7, so every
//! power and sum here takes `d` rather than the factor itself.

use libm::erfc;

/// `(1 - d)^m` for real `m`.
pub fn pow1m(d: f64, m: f64) -> f64 {
    (m * (-d).ln_1p()).exp()
}

/// `1 - (1 - d)^m`, accurate when the result is small.
pub fn one_minus_pow1m(d: f64, m: f64) -> f64 {
    -(m * (-d).ln_1p()).exp_m1()
}

/// `sum_{i=0}^{m-1} (1 - d)^i = (1 - (1 - d)^m) / d`.
pub fn geom_sum(d: f64, m: f64) -> f64 {
    if d == 0.0 {
        return m;
    }
    one_minus_pow1m(d, m) / d
}

/// `sum_{i=0}^{m-1} (1 - d)^(2i)`.
pub fn geom_sum_sq(d: f64, m: f64) -> f64 {
    if d == 0.0 {
        return m;
    }
    let l = (-d).ln_1p();
    (2.0 * m * l).exp_m1() / (2.0 * l).exp_m1()
}

/// `sum_{j=0}^{k-1} p^j` for `p = exp(log_p)`, stable as `p -> 1`.
pub fn geom_sum_log(log_p: f64, k: f64) -> f64 {
    if log_p == 0.0 {
        return k;
    }
    (k * log_p).exp_m1() / log_p.exp_m1()
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal upper tail `P(Z > x)`.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// `ln P(Z > x)`, finite far beyond the range where the tail underflows.
pub fn log_norm_sf(x: f64) -> f64 {
    if x < 30.0 {
        return norm_sf(x).ln();
    }
    // asymptotic series Q(x) ~ φ(x)/x · Σ (-1)^k (2k-1)!! / x^(2k)
    let inv2 = 1.0 / (x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..8 {
        term *= -((2 * k - 1) as f64) * inv2;
        sum += term;
    }
    -0.5 * x * x - (x * (2.0 * std::f64::consts::PI).sqrt()).ln() + sum.ln()
}

/// `ln Σ exp(v_i)`.
pub fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
