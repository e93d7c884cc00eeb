mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sgld_interim::dataset::make_d3_d4;
use sgld_interim::mechanisms::{
    clip, m_sensitivity, propose_test_sample, propose_test_sample_sgld, pts_sgld_eta, GateMode, PtsOutcome, PtsParams,
};
use sgld_interim::montecarlo::derive_seed;
use sgld_interim::sgld::{critical_epoch, state_at_epoch};
use sgld_interim::{DataPoint, Dataset, DomainSpec, SgldCoefficients};

fn relaxed(epsilon: f64, delta: f64) -> PtsParams {
    PtsParams { gate: GateMode::Relaxed, ..PtsParams::non_private_claim(epsilon, delta) }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn empty_dataset_is_null_at_the_size_test() {
    let params = PtsParams::non_private_claim(1.0, 0.05);
    let runs = 10_000;
    let hits = (0..runs)
        .filter(|&s| propose_test_sample(&Dataset::default(), &params, &mut rng(s)).1.outcome == PtsOutcome::NullAtStep10)
        .count();
    assert!(hits as f64 / runs as f64 >= 1.0 - params.delta, "{hits}");
}

#[test]
fn desk_scale_d3_reaches_the_release_step() {
    let params = relaxed(3.0, 0.05);
    let (d3, _) = make_d3_d4(20_000, 1.15, params.x_h);
    let runs = 2_000u64;
    let sampled = (0..runs)
        .filter(|&s| {
            let (_, t) = propose_test_sample(&d3, &params, &mut rng(s));
            if t.outcome == PtsOutcome::Sampled {
                assert!(t.n_w.unwrap() >= t.n_min.unwrap());
            }
            t.outcome == PtsOutcome::Sampled
        })
        .count() as f64
        / runs as f64;
    let se = (sampled * (1.0 - sampled) / runs as f64).sqrt();
    assert!(sampled >= 1.0 - 5.0 * params.delta - 3.0 * se, "{sampled}");
}

/// Output cell of one run: the null step, or the bin of the released sample.
fn cell(outcome: PtsOutcome, sample: Option<f64>, edges: &[f64]) -> usize {
    match outcome {
        PtsOutcome::NullAtStep10 => 0,
        PtsOutcome::NullAtStep18 => 1,
        PtsOutcome::Sampled => 2 + edges.partition_point(|&e| e < sample.unwrap()),
    }
}

#[test]
fn released_outputs_respect_the_composed_budget() {
    let params = relaxed(1.0, 0.05);
    let (d3, d4) = make_d3_d4(100, 1.15, params.x_h);
    let runs = 100_000u64;
    let run = |d: &Dataset, salt: u64| -> Vec<(PtsOutcome, Option<f64>)> {
        (0..runs)
            .map(|s| {
                let (x, t) = propose_test_sample(d, &params, &mut rng(derive_seed(s, salt)));
                (t.outcome, x)
            })
            .collect()
    };
    let (a, b) = (run(&d3, 1), run(&d4, 2));
    let mut pooled: Vec<f64> = a.iter().chain(&b).filter_map(|r| r.1).collect();
    pooled.sort_by(f64::total_cmp);
    let edges: Vec<f64> = (1..8).map(|k| pooled[k * pooled.len() / 8]).collect();
    let freq = |rs: &[(PtsOutcome, Option<f64>)]| {
        let mut f = vec![0.0; 10];
        for r in rs {
            f[cell(r.0, r.1, &edges)] += 1.0 / runs as f64;
        }
        f
    };
    let (fa, fb) = (freq(&a), freq(&b));
    let factor = (5.0 * params.epsilon).exp();
    for (i, (&pa, &pb)) in fa.iter().zip(&fb).enumerate() {
        let slack = 4.0 * ((pa * (1.0 - pa) + pb * (1.0 - pb)) / runs as f64).sqrt();
        assert!(pa <= factor * pb + 2.0 * params.delta + slack, "cell {i}: {pa} vs {pb}");
        assert!(pb <= factor * pa + 2.0 * params.delta + slack, "cell {i}: {pb} vs {pa}");
    }
}

#[test]
fn sensitivity_bounds_exhaustive_swaps() {
    for (x_l, x_h) in [(0.5f64, 1.0f64), (1.0, 1.0), (0.25, 1.5)] {
        let params = PtsParams { x_l, x_h, ..PtsParams::non_private_claim(1.0, 0.05) };
        let n1_noisy: f64 = 7.0;
        let cap = n1_noisy.powf(params.rho1);
        let xs = [x_l, 0.5 * (x_l + x_h), x_h];
        let lattice = common::record_lattice(&xs, cap, 4);
        for size in 2..=6 {
            let observed = common::max_slope_change(&lattice, size);
            let bound = m_sensitivity(n1_noisy, size as f64, &params).unwrap();
            assert!(observed <= bound, "size {size}: {observed} > {bound}");
        }
    }
}

#[test]
fn sgld_release_separates_neighbours() {
    let params = relaxed(3.0, 0.05);
    let n1 = 100;
    let (d3, d4) = make_d3_d4(n1, 1.15, params.x_h);
    let model = params.model();
    let c = (n1 as f64).powf(1.15);
    let spec = DomainSpec { n: n1 as u64, c, gamma1: params.gamma1, gamma2: None, x_l: params.x_l, x_h: params.x_h };
    let coeff = SgldCoefficients::with_eta(spec.n, c, spec.x_h, &model, pts_sgld_eta(n1, &params));
    let report = critical_epoch(&coeff, &spec, &model).unwrap();
    let state = state_at_epoch(report.violation_epoch(), &coeff, &model);
    let threshold = state.d1.mean;
    let predicted_b = state.d2_components[n1 - 1].sf(threshold);
    assert!(predicted_b < 0.01);

    let runs = 4_000u64;
    let freq = |d: &Dataset, salt: u64| {
        (0..runs)
            .filter(|&s| {
                let (x, _) = propose_test_sample_sgld(d, &params, report.violation_step, &mut rng(derive_seed(s, salt))).unwrap();
                x.is_some_and(|v| v > threshold)
            })
            .count() as f64
            / runs as f64
    };
    let (pa, pb) = (freq(&d3, 11), freq(&d4, 12));
    let eps_prime: f64 = 2.0;
    assert!(pa > eps_prime.exp() * pb + params.delta, "{pa} vs {pb}");
}

#[test]
fn sgld_variant_rejects_zero_steps() {
    let params = relaxed(1.0, 0.05);
    assert!(propose_test_sample_sgld(&Dataset::default(), &params, 0, &mut rng(0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn runs_are_deterministic_and_clipping_idempotent(
        pts in prop::collection::vec((-1.0f64..3.0, -5.0f64..50.0), 0..40),
        seed in any::<u64>(),
    ) {
        let data = Dataset::new(pts.iter().map(|&(x, y)| DataPoint::new(x, y)).collect());
        let params = relaxed(1.0, 0.05);
        let once = clip(&data, &params);
        prop_assert_eq!(clip(&once, &params), once);
        let a = propose_test_sample(&data, &params, &mut rng(seed));
        let b = propose_test_sample(&data, &params, &mut rng(seed));
        prop_assert_eq!(&a.1, &b.1);
        prop_assert_eq!(a.0, b.0);
        let (_, exact) = propose_test_sample(&data, &params, &mut rng(seed));
        let (_, sgld) = propose_test_sample_sgld(&data, &params, 5, &mut rng(seed)).unwrap();
        prop_assert_eq!(exact.outcome, sgld.outcome);
        prop_assert_eq!(exact.m_noisy, sgld.m_noisy);
        if exact.outcome == PtsOutcome::Sampled {
            prop_assert!(exact.n_w.unwrap() >= exact.n_min.unwrap());
        }
    }
}
