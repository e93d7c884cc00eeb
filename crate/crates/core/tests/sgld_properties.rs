mod common;

use proptest::prelude::*;
use sgld_interim::dataset::{make_d1, make_d2};
use sgld_interim::sgld::{
    advance_epoch, certify_violation, chernoff_mass_bound, coefficients, critical_epoch, exact_tail_mass, gap_metric,
    gaussian_tail_bound, mean_gap_lower_bound, state_at_epoch,
};
use sgld_interim::{DomainSpec, EpochState, ModelParams};

/// Parameters inside every gate of the critical-epoch analysis, with
/// `alpha > 1/2` so that the decay-factor bound holds.
fn admissible() -> impl Strategy<Value = (DomainSpec, ModelParams)> {
    (0.55f64..3.0, 0.5f64..3.0, 3.2f64..12.0, 20u64..300, 1.0f64..1e4).prop_map(|(alpha, beta, s, n, c)| {
        let x_h = (s / beta).sqrt();
        (
            DomainSpec { n, c, gamma1: 0.1, gamma2: None, x_l: x_h / 2.0, x_h },
            ModelParams { alpha, beta },
        )
    })
}

fn small() -> impl Strategy<Value = (DomainSpec, ModelParams)> {
    (0.2f64..3.0, 0.5f64..4.0, 0.5f64..3.0, 1u64..=20, 0.1f64..50.0).prop_map(|(alpha, beta, x_h, n, c)| {
        (
            DomainSpec { n, c, gamma1: 0.1, gamma2: None, x_l: x_h / 2.0, x_h },
            ModelParams { alpha, beta },
        )
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn closed_form_equals_iteration((spec, model) in small(), k in 0u64..=10) {
        let c = coefficients(&spec, &model);
        let mut s = EpochState::prior(spec.n, &model);
        for _ in 0..k {
            s = advance_epoch(&s, &c);
        }
        let direct = state_at_epoch(k, &c, &model);
        prop_assert!(rel(s.d1.mean, direct.d1.mean) <= 1e-12);
        prop_assert!(rel(s.d1.variance, direct.d1.variance) <= 1e-12);
        for (a, b) in s.d2_components.iter().zip(&direct.d2_components) {
            prop_assert!(rel(a.mean, b.mean) <= 1e-12);
            prop_assert!(rel(a.variance, b.variance) <= 1e-12);
        }
    }

    #[test]
    fn closed_form_equals_raw_updates((spec, model) in small(), k in 0u64..=5) {
        let c = coefficients(&spec, &model);
        let s = state_at_epoch(k, &c, &model);
        let n = spec.n as usize;
        let steps = k as usize * n;
        let d1 = make_d1(&spec);
        let d2 = make_d2(&spec);
        let (m, v) = common::per_step_moments(&d1, &model, c.eta, &(0..n).collect::<Vec<_>>(), steps);
        prop_assert!(rel(s.d1.mean, m) <= 1e-12 && rel(s.d1.variance, v) <= 1e-12);
        for r in 1..=n {
            let (m, v) = common::per_step_moments(&d2, &model, c.eta, &common::order_with_last_at(n, r), steps);
            let g = s.d2_components[r - 1];
            prop_assert!(rel(g.mean, m) <= 1e-12, "r={r} {} vs {m}", g.mean);
            prop_assert!(rel(g.variance, v) <= 1e-12);
        }
    }

    #[test]
    fn algebraic_identities((spec, model) in admissible()) {
        let c = coefficients(&spec, &model);
        let n = spec.n_f64();
        let s = spec.xh2_beta(&model);
        let target = n * spec.c * s / (model.alpha + n * s);
        // drift over contraction is the D1 limit mean
        prop_assert!(rel(c.rho / c.one_minus_lambda, target) <= 1e-10);
        let lam_n1 = c.lambda_pow(n - 1.0);
        let lam_n = c.lambda_pow(n);
        let g = (1.0 - lam_n1) / c.one_minus_lambda;
        // mean after one epoch on D1 from zero
        prop_assert!(rel(c.rho * g + c.rho * lam_n1, target * (1.0 - lam_n)) <= 1e-10);
        // mean after one epoch on D2, modified record last
        let m3 = target * (1.0 - lam_n * (0.75 / c.lambda + 0.25));
        prop_assert!(rel(c.rho * g + c.rho_hat * lam_n1, m3) <= 1e-10);
        // modified-record contraction in terms of the regular one, in both forms
        let rhs = 0.75 * 0.5 * c.eta * model.alpha;
        prop_assert!(rel(c.one_minus_lambda_hat - 0.25 * c.one_minus_lambda, rhs) <= 1e-10);
        prop_assert!((0.25 * c.lambda + 0.75 - c.lambda_hat - rhs).abs() <= 1e-15);
    }

    #[test]
    fn decay_factor_bound((spec, model) in admissible()) {
        let s = spec.xh2_beta(&model);
        let n = spec.n_f64();
        let a = model.alpha + n * s;
        prop_assume!((2.0 * model.alpha - 1.0) * a > 1.0);
        let lhs = 2.0 * n * (-1.0 / a).ln_1p();
        prop_assert!(lhs > -2.0 / s);
    }

    #[test]
    fn variance_bounds_before_critical_epoch((spec, model) in admissible()) {
        let c = coefficients(&spec, &model);
        let report = critical_epoch(&c, &spec, &model).unwrap();
        let n = spec.n_f64();
        let log_p = c.ln_lambda_hat() + (n - 1.0) * c.ln_lambda();
        let mut k = 1u64;
        while (k as f64) <= report.k_dot {
            let st = state_at_epoch(k + 1, &c, &model);
            for (i, g) in st.d2_components.iter().enumerate() {
                let r = i as f64 + 1.0;
                let lead: f64 = if i == 0 { 2.0 } else { 6.0 };
                let log_b = lead.ln() + 2.0 * (c.ln_lambda_hat() + (n - r) * c.ln_lambda()) - model.alpha.ln() + 2.0 * k as f64 * log_p;
                prop_assert!(g.variance.ln() < log_b, "k={k} r={r}");
            }
            k += 1;
        }
    }

    #[test]
    fn separation_ratio_at_critical_epoch((spec, model) in admissible()) {
        let c = coefficients(&spec, &model);
        let report = critical_epoch(&c, &spec, &model).unwrap();
        let st = state_at_epoch(report.violation_epoch(), &c, &model);
        let s = spec.xh2_beta(&model);
        let ratio = spec.c / spec.n_f64();
        let lower = (-2.0 / s).exp() * (model.alpha / report.v1) * (3.0 / (32.0 * s)).powi(2) * ratio * ratio;
        for sep in st.separations() {
            prop_assert!(sep * sep >= lower);
        }
    }

    #[test]
    fn gap_metric_and_mean_gap((spec, model) in admissible(), k in 1u64..60) {
        let c = coefficients(&spec, &model);
        prop_assert_eq!(gap_metric(&state_at_epoch(0, &c, &model)), 0.0);
        let st = state_at_epoch(k, &c, &model);
        prop_assert!(gap_metric(&st) > 0.0);
        let min_gap = st.d2_components.iter().map(|g| st.d1.mean - g.mean).fold(f64::INFINITY, f64::min);
        prop_assert!(mean_gap_lower_bound(k - 1, &c) <= min_gap * (1.0 + 1e-9));
    }

    #[test]
    fn tail_bounds_dominate_exact_mass((spec, model) in admissible(), k in 0u64..80, eps in 0.0f64..5.0, delta in 0.0f64..0.49) {
        let c = coefficients(&spec, &model);
        let st = state_at_epoch(k, &c, &model);
        let exact = exact_tail_mass(&st);
        prop_assert!(gaussian_tail_bound(&st) >= exact);
        // the exponential form is only an upper bound while every separation is below ~1.85
        if st.separations().all(|t| (0.0..=1.8).contains(&t)) {
            prop_assert!(chernoff_mass_bound(&st) >= exact);
        }
        let report = critical_epoch(&c, &spec, &model).unwrap();
        let cert = certify_violation(&report, &st, eps, delta);
        let tail_margin = cert.p1 - eps.exp() * cert.p2_tail_bound - delta;
        if tail_margin > 0.0 {
            prop_assert!(cert.violated);
        }
    }
}

#[test]
fn printed_exponential_bound_undercuts_the_tail_at_three_standard_deviations() {
    use sgld_interim::Gaussian1D;
    let st = EpochState {
        epoch: 1,
        d1: Gaussian1D { mean: 3.0, variance: 1.0 },
        d2_components: vec![Gaussian1D { mean: 0.0, variance: 1.0 }],
    };
    let exact = exact_tail_mass(&st);
    assert!((exact - 1.349_898_031_630_094_6e-3).abs() < 1e-15, "{exact:e}");
    assert!(chernoff_mass_bound(&st) < exact);
    assert!(gaussian_tail_bound(&st) >= exact);
}

#[test]
fn chernoff_bound_shrinks_with_separation() {
    use sgld_interim::Gaussian1D;
    let at = |gap: f64| {
        chernoff_mass_bound(&EpochState {
            epoch: 1,
            d1: Gaussian1D { mean: gap, variance: 1.0 },
            d2_components: vec![Gaussian1D { mean: 0.0, variance: 1.0 }; 3],
        })
    };
    let mut last = at(0.0);
    assert_eq!(last, 1.0);
    for g in [0.1, 0.5, 1.0, 2.0, 4.0] {
        let b = at(g);
        assert!(b < last);
        last = b;
    }
}
