use proptest::prelude::*;
use sgld_interim::wasserstein::{
    ball_volume, gaussian_1d, ratio_curve, smooth, smooth_unnormalized, theorem2_rhs, theorem2_rhs_annulus_form,
    verify_bound, wasserstein2_1d, GriddedDensity, SmoothingConfig,
};
use std::f64::consts::PI;

fn gaussian_2d(mx: f64, my: f64, sd: f64, lo: f64, h: f64, k: usize) -> GriddedDensity {
    let lip = (-0.5f64).exp() / ((2.0 * PI).sqrt() * sd * sd) / (2.0 * PI).sqrt() / sd;
    GriddedDensity::from_fn(vec![lo, lo], h, vec![k, k], lip, |p| {
        let r2 = ((p[0] - mx).powi(2) + (p[1] - my).powi(2)) / (sd * sd);
        (-0.5 * r2).exp() / (2.0 * PI * sd * sd)
    })
    .unwrap()
}

#[test]
fn ball_volume_recursion() {
    for r in [0.3, 1.0, 2.5] {
        for d in 3..=12 {
            let rec = ball_volume(d - 2, r) * 2.0 * PI * r * r / d as f64;
            assert!((ball_volume(d, r) - rec).abs() <= 1e-12 * rec, "d={d} r={r}");
        }
    }
}

#[test]
fn smoothing_preserves_mass_before_renormalising() {
    let p = gaussian_1d(0.0, 1.0, -10.0, 0.01, 2001).unwrap();
    assert!((smooth_unnormalized(&p, 0.5).unwrap().mass() - 1.0).abs() <= 1e-6);
    let q = gaussian_2d(0.0, 0.0, 1.0, -8.0, 0.1, 161);
    assert!((smooth_unnormalized(&q, 0.3).unwrap().mass() - q.mass()).abs() <= 1e-6);
    assert!((smooth(&q, 0.3).unwrap().mass() - 1.0).abs() <= 1e-12);
}

#[test]
fn smoothing_moves_values_by_at_most_radius_times_lipschitz() {
    let p = gaussian_1d(0.3, 0.7, -8.0, 0.005, 3201).unwrap();
    for s in [0.05, 0.5, 1.0] {
        let ps = smooth_unnormalized(&p, s).unwrap();
        let gap = p.values.iter().zip(&ps.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(gap <= s * p.lipschitz, "s={s}: {gap} > {}", s * p.lipschitz);
    }
    let q = gaussian_2d(0.0, 0.0, 1.0, -7.0, 0.1, 141);
    let qs = smooth_unnormalized(&q, 0.4).unwrap();
    let gap = q.values.iter().zip(&qs.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(gap <= 0.4 * q.lipschitz);
}

#[test]
fn quantile_w2_matches_gaussian_closed_form() {
    for (m2, s2) in [(0.01, 1.0), (0.5, 1.0), (0.2, 1.3)] {
        let p = gaussian_1d(0.0, 1.0, -10.0, 0.005, 4001).unwrap();
        let q = gaussian_1d(m2, s2, -10.0, 0.005, 4001).unwrap();
        let expected = (m2 * m2 + (s2 - 1.0f64).powi(2)).sqrt();
        let w2 = wasserstein2_1d(&p, &q).unwrap();
        assert!((w2 - expected).abs() <= 1e-4 + 1e-3 * expected, "{w2} vs {expected}");
    }
}

#[test]
fn identical_densities_keep_the_budget_term_as_slack() {
    let p = gaussian_1d(0.0, 1.0, -8.0, 0.005, 3201).unwrap();
    let cfg = SmoothingConfig::new(0.5, 0.1).unwrap();
    let report = verify_bound(&p, &p, &cfg, None).unwrap();
    assert_eq!(report.violations, 0);
    assert_eq!(report.ball_violations, 0);
    assert!(report.min_slack >= 0.1 / ball_volume(1, 0.4) - 1e-12);
}

#[test]
fn gaussian_fixture_with_true_and_understated_budget() {
    let p = gaussian_1d(0.0, 1.0, -8.0, 0.005, 3201).unwrap();
    let q = gaussian_1d(0.01, 1.0, -8.0, 0.005, 3201).unwrap();
    let ok = verify_bound(&p, &q, &SmoothingConfig::new(0.5, 0.1).unwrap(), Some(0.01)).unwrap();
    assert!(ok.budget_consistent);
    assert_eq!(ok.violations, 0);
    assert_eq!(ok.ball_violations, 0);
    assert!(ok.excluded_boundary_points > 0);
    let bad = verify_bound(&p, &q, &SmoothingConfig::new(0.5, 0.001).unwrap(), Some(0.01)).unwrap();
    assert!(!bad.budget_consistent);
    assert!(bad.violations > 0);
}

#[test]
fn two_dimensional_shift_passes() {
    let p = gaussian_2d(0.0, 0.0, 1.0, -6.0, 0.1, 121);
    let q = gaussian_2d(0.02, 0.0, 1.0, -6.0, 0.1, 121);
    let cfg = SmoothingConfig::new(0.5, 0.2).unwrap();
    let report = verify_bound(&p, &q, &cfg, Some(0.02)).unwrap();
    assert!(report.budget_consistent);
    assert_eq!(report.violations, 0);
    assert!(report.w2 <= 0.04);
}

#[test]
fn mismatched_grids_are_rejected() {
    let p = gaussian_1d(0.0, 1.0, -8.0, 0.01, 1601).unwrap();
    let q = gaussian_1d(0.0, 1.0, -8.0, 0.02, 801).unwrap();
    assert!(verify_bound(&p, &q, &SmoothingConfig::new(0.5, 0.1).unwrap(), None).is_err());
}

proptest! {
    #[test]
    fn rhs_forms_agree(q in 0.0f64..5.0, s in 0.05f64..3.0, frac in 0.01f64..0.95, d in 1usize..=6, l in 0.0f64..10.0) {
        let cfg = SmoothingConfig::new(s, s * frac).unwrap();
        let a = theorem2_rhs(q, &cfg, d, l);
        let b = theorem2_rhs_annulus_form(q, &cfg, d, l);
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn ratio_curve_is_the_closed_form(s in 0.05f64..3.0, frac in 0.01f64..0.95) {
        let cfg = SmoothingConfig::new(s, s * frac).unwrap();
        for (d, r) in ratio_curve(&cfg, 12) {
            let base = 1.0 + cfg.w2_budget / (cfg.radius - cfg.w2_budget);
            prop_assert_eq!(r, base.powi(d as i32));
            let vols = ball_volume(d, s) / ball_volume(d, s - s * frac);
            prop_assert!((vols - r).abs() <= 1e-12 * r);
        }
    }
}
