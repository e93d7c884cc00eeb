//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls the closed forms under test: divergences and posterior
//! moments come from numerical quadrature, SGLD moments from the raw per-step
//! update, and slope sensitivity from brute-force neighbour enumeration.

#![allow(dead_code)]

use sgld_interim::{DataPoint, Dataset, Gaussian1D, ModelParams};

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature on `[a, b]` to absolute tolerance `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    // split first so narrow peaks are not missed by the initial coarse rule
    let pieces = 64;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let (lo, hi) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            adapt(&f, lo, hi, fa, fm, fb, simpson(lo, hi, fa, fm, fb), tol / pieces as f64, 14)
        })
        .sum()
}

fn log_pdf(g: &Gaussian1D, x: f64) -> f64 {
    let z = x - g.mean;
    -0.5 * z * z / g.variance - 0.5 * (2.0 * std::f64::consts::PI * g.variance).ln()
}

/// `(1/(ν-1)) ln ∫ p^ν q^(1-ν)` by quadrature.
pub fn renyi_quadrature(p: &Gaussian1D, q: &Gaussian1D, nu: f64) -> f64 {
    let log_f = |x: f64| nu * log_pdf(p, x) + (1.0 - nu) * log_pdf(q, x);
    // the integrand is an unnormalised Gaussian; locate its peak and width
    let prec = nu / p.variance + (1.0 - nu) / q.variance;
    let centre = (nu * p.mean / p.variance + (1.0 - nu) * q.mean / q.variance) / prec;
    let width = 1.0 / prec.sqrt();
    let peak = log_f(centre);
    let integral = integrate(|x| (log_f(x) - peak).exp(), centre - 40.0 * width, centre + 40.0 * width, 1e-13 * width);
    (integral.ln() + peak) / (nu - 1.0)
}

/// Posterior mean and variance by locating the mode with golden-section
/// search and integrating the unnormalised density around it.
pub fn quadrature_posterior(data: &Dataset, model: &ModelParams) -> (f64, f64) {
    let log_post = |t: f64| {
        -0.5 * model.alpha * t * t
            - 0.5 * model.beta * data.points.iter().map(|p| (p.y - t * p.x).powi(2)).sum::<f64>()
    };
    let bound = 10.0 + data.points.iter().map(|p| (p.y / p.x).abs()).fold(0.0, f64::max);
    let (mut lo, mut hi) = (-bound, bound);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if log_post(a) > log_post(b) { hi = b } else { lo = a }
    }
    let mode = 0.5 * (lo + hi);
    let h = 1e-3;
    let curv = -(log_post(mode + h) - 2.0 * log_post(mode) + log_post(mode - h)) / (h * h);
    let width = 1.0 / curv.sqrt();
    let peak = log_post(mode);
    let f = |k: i32| move |t: f64| (t - mode).powi(k) * (log_post(t) - peak).exp();
    let (a, b) = (mode - 40.0 * width, mode + 40.0 * width);
    let z = integrate(f(0), a, b, 1e-14 * width);
    let m1 = integrate(f(1), a, b, 1e-14 * width * width) / z;
    let m2 = integrate(f(2), a, b, 1e-14 * width * width * width) / z;
    (mode + m1, m2 - m1 * m1)
}

/// Exact mean and variance after `steps` raw SGLD updates with batch 1,
/// `θ ← θ + (η/2)(-α θ + n β x (y - x θ)) + N(0, η)`, visiting records in
/// `order` cyclically, from the `N(0, 1/α)` prior.
pub fn per_step_moments(data: &Dataset, model: &ModelParams, eta: f64, order: &[usize], steps: usize) -> (f64, f64) {
    let n = data.len() as f64;
    let (mut m, mut v) = (0.0, 1.0 / model.alpha);
    for j in 0..steps {
        let p = data.points[order[j % order.len()]];
        let mult = 1.0 - 0.5 * eta * (model.alpha + n * model.beta * p.x * p.x);
        let drift = 0.5 * eta * n * model.beta * p.x * p.y;
        m = mult * m + drift;
        v = mult * mult * v + eta;
    }
    (m, v)
}

/// Visiting order that puts stored record `n - 1` at cyclic position `r`
/// (1-based) while keeping the other records in stored order.
pub fn order_with_last_at(n: usize, r: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n - 1).collect();
    order.insert(r - 1, n - 1);
    order
}

fn slope(v: &[DataPoint]) -> f64 {
    let (sxy, sxx) = v.iter().fold((0.0, 0.0), |(a, b), p| (a + p.x * p.y, b + p.x * p.x));
    sxy / sxx
}

/// Lattice of admissible records: `x` in `xs`, slope `y/x` in `[0, cap]`.
pub fn record_lattice(xs: &[f64], cap: f64, slope_steps: usize) -> Vec<DataPoint> {
    xs.iter()
        .flat_map(|&x| (0..=slope_steps).map(move |k| DataPoint::new(x, cap * k as f64 / slope_steps as f64 * x)))
        .collect()
}

/// Largest change in the least-squares slope over every multiset `V` of
/// `size` lattice records and every one-record swap within the lattice.
pub fn max_slope_change(lattice: &[DataPoint], size: usize) -> f64 {
    fn rec(lattice: &[DataPoint], start: usize, size: usize, cur: &mut Vec<DataPoint>, best: &mut f64) {
        if cur.len() == size {
            let base = slope(cur);
            for i in 0..size {
                let keep = cur[i];
                for &p in lattice {
                    cur[i] = p;
                    *best = best.max((slope(cur) - base).abs());
                }
                cur[i] = keep;
            }
            return;
        }
        for k in start..lattice.len() {
            cur.push(lattice[k]);
            rec(lattice, k, size, cur, best);
            cur.pop();
        }
    }
    let mut best = 0.0;
    rec(lattice, 0, size, &mut Vec::with_capacity(size), &mut best);
    best
}
