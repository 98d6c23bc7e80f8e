mod common;

use common::{params, ALPHA_S1, ALPHA_S2, ALPHA_S3};
use privacy_pricing::utility::{evaluate_quality, quality_derivatives};
use privacy_pricing::{fit_quality_curve, FitOptions, QualityParams, QualitySample};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

prop_compose! {
    fn valid_params()(a1 in 0.1..1.0f64, frac in 1e-3..0.9f64, a3 in 0.5..5.0f64) -> QualityParams {
        QualityParams::new(a1, a1 * frac, a3).unwrap()
    }
}

fn grid_samples(p: &QualityParams) -> Vec<QualitySample> {
    (0..=10)
        .map(|i| {
            let r = i as f64 / 10.0;
            QualitySample::new(r, p.quality(r)).unwrap()
        })
        .collect()
}

proptest! {
    #[test]
    fn quality_strictly_decreases(p in valid_params(), a in 0.0..2.0f64, gap in 1e-6..1.0f64) {
        let lo = evaluate_quality(a, &p).unwrap();
        let hi = evaluate_quality(a + gap, &p).unwrap();
        prop_assert!(lo > hi);
    }

    #[test]
    fn quality_is_concave(p in valid_params(), r in 0.01..1.0f64) {
        let d = quality_derivatives(r, &p).unwrap();
        prop_assert!(d.curvature < 0.0);
        let h = 1e-3;
        let fd = (p.quality(r + h) - 2.0 * p.quality(r) + p.quality(r - h)) / (h * h);
        prop_assert!(fd < 0.0);
    }

    #[test]
    fn derivatives_match_finite_differences(p in valid_params(), r in 0.05..1.0f64) {
        let d = quality_derivatives(r, &p).unwrap();
        let h = 1e-4;
        let slope = (p.quality(r + h) - p.quality(r - h)) / (2.0 * h);
        let curvature = (quality_derivatives(r + h, &p).unwrap().slope
            - quality_derivatives(r - h, &p).unwrap().slope)
            / (2.0 * h);
        prop_assert!(common::rel_close(d.slope, slope, 1e-6), "{} vs {}", d.slope, slope);
        prop_assert!(common::rel_close(d.curvature, curvature, 1e-6), "{} vs {}", d.curvature, curvature);

        let (a1, a2, a3) = (p.alpha1(), p.alpha2(), p.alpha3());
        let shifted = |b1: f64, b2: f64, b3: f64| QualityParams::new(b1, b2, b3).unwrap().quality(r);
        // u is linear in α1 and α2, so wide steps cost nothing there
        let (h1, h2, h3) = (1e-3, 1e-3 * a2, 1e-4);
        let fd = [
            (shifted(a1 + h1, a2, a3) - shifted(a1 - h1, a2, a3)) / (2.0 * h1),
            (shifted(a1, a2 + h2, a3) - shifted(a1, a2 - h2, a3)) / (2.0 * h2),
            (shifted(a1, a2, a3 + h3) - shifted(a1, a2, a3 - h3)) / (2.0 * h3),
        ];
        for (analytic, numeric) in d.param_gradient.iter().zip(fd) {
            prop_assert!(common::rel_close(*analytic, numeric, 1e-6), "{analytic} vs {numeric}");
        }
    }

    #[test]
    fn max_privacy_zeroes_quality(p in valid_params()) {
        let r = p.max_privacy();
        prop_assert!(evaluate_quality(r, &p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn noiseless_fit_is_idempotent(
        a1 in 0.3..1.0f64,
        frac in 1e-3..0.5f64,
        a3 in 0.5..4.0f64,
    ) {
        // keep the curve inside [0, 1] over the sampled privacy range
        let a2 = a1 * frac * (-a3).exp();
        let p = QualityParams::new(a1, a2, a3).unwrap();
        let fit = fit_quality_curve(&grid_samples(&p), &FitOptions::default()).unwrap();
        prop_assert!(fit.residual_sum_squares <= 1e-12, "rss {}", fit.residual_sum_squares);
    }
}

#[test]
fn reference_triples_round_trip() {
    for a in [ALPHA_S1, ALPHA_S2, ALPHA_S3] {
        let p = params(a);
        let fit = fit_quality_curve(&grid_samples(&p), &FitOptions::default()).unwrap();
        assert!(fit.converged);
        assert!(fit.residual_sum_squares <= 1e-12);
        let got = [
            fit.params.alpha1(),
            fit.params.alpha2(),
            fit.params.alpha3(),
        ];
        for (g, w) in got.iter().zip([a.0, a.1, a.2]) {
            assert!((g - w).abs() < 1e-6, "{got:?} vs {a:?}");
        }
    }
}

#[test]
fn noisy_fit_recovers_ceiling() {
    let truth = params(ALPHA_S3);
    let noise = Normal::new(0.0, 0.005).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut within = 0;
    for _ in 0..100 {
        let samples: Vec<QualitySample> = (0..=10)
            .map(|i| {
                let r = i as f64 / 10.0;
                let tau = (truth.quality(r) + noise.sample(&mut rng)).clamp(0.0, 1.0);
                QualitySample::new(r, tau).unwrap()
            })
            .collect();
        let fit = fit_quality_curve(&samples, &FitOptions::default()).unwrap();
        let truth_rss: f64 = samples
            .iter()
            .map(|s| (truth.quality(s.r) - s.tau).powi(2))
            .sum();
        // the generator is a feasible point, so a least-squares fit never does worse
        assert!(fit.converged);
        assert!(fit.residual_sum_squares <= truth_rss);
        if (fit.params.alpha1() - truth.alpha1()).abs() < 0.01 {
            within += 1;
        }
    }
    assert!(
        within >= 95,
        "{within} of 100 fits recovered alpha1 within 0.01"
    );
}
