use privacy_pricing::market::{
    compare_demand_modes, line_region_buy_probability, prob_buy_complement, prob_buy_separate,
    prob_buy_substitute, BundleKind,
};
use privacy_pricing::oracle::{estimate_buy_probability, DemandRegion, SimulationSpec};
use privacy_pricing::DemandMode::{self, ExactGeometry, PaperForm};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn prob(kind: BundleKind, p: f64, u1: f64, u2: f64, g: f64, mode: DemandMode) -> f64 {
    match kind {
        BundleKind::Complement => prob_buy_complement(p, u1, u2, g, mode).unwrap(),
        BundleKind::Substitute => prob_buy_substitute(p, u1, u2, g, mode).unwrap(),
    }
}

fn kinds() -> impl Strategy<Value = (BundleKind, f64)> {
    prop_oneof![
        (0.0..1.0f64).prop_map(|g| (BundleKind::Complement, g)),
        (-0.499..-1e-6f64).prop_map(|g| (BundleKind::Substitute, g)),
    ]
}

fn modes() -> impl Strategy<Value = DemandMode> {
    prop_oneof![Just(PaperForm), Just(ExactGeometry)]
}

proptest! {
    #[test]
    fn probabilities_are_bounded(
        (kind, g) in kinds(), mode in modes(),
        p in 0.0..3.0f64, u1 in 1e-3..1.0f64, u2 in 1e-3..1.0f64,
    ) {
        let v = prob(kind, p, u1, u2, g, mode);
        prop_assert!((0.0..=1.0).contains(&v));
        let s = prob_buy_separate(p, u1).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
    }

    #[test]
    fn probabilities_are_monotone(
        (kind, g) in kinds(), mode in modes(),
        p in 0.0..2.0f64, u1 in 1e-2..0.9f64, u2 in 1e-2..0.9f64,
        dp in 0.0..0.5f64, du in 0.0..0.1f64, dg in 0.0..0.2f64,
    ) {
        let base = prob(kind, p, u1, u2, g, mode);
        let tol = 1e-12;
        prop_assert!(prob(kind, p + dp, u1, u2, g, mode) <= base + tol);
        prop_assert!(prob(kind, p, u1 + du, u2, g, mode) >= base - tol);
        prop_assert!(prob(kind, p, u1, u2 + du, g, mode) >= base - tol);
        let g_up = match kind {
            BundleKind::Complement => g + dg,
            BundleKind::Substitute => (g + dg).min(-1e-9),
        };
        prop_assert!(prob(kind, p, u1, u2, g_up, mode) >= base - tol);
        prop_assert!(prob_buy_separate(p + dp, u1).unwrap() <= prob_buy_separate(p, u1).unwrap());
    }

    #[test]
    fn substitute_region_contains_the_line_region(
        g in -0.499..-1e-6f64, p in 0.0..2.0f64, u1 in 1e-2..1.0f64, u2 in 1e-2..1.0f64,
    ) {
        let sub = prob_buy_substitute(p, u1, u2, g, ExactGeometry).unwrap();
        prop_assert!(sub >= line_region_buy_probability(p, u1, u2, g) - 1e-12);
    }

    #[test]
    fn complement_modes_coincide_below_the_corner(
        g in 0.0..1.0f64, u1 in 1e-2..1.0f64, u2 in 1e-2..1.0f64, t in 0.0..=1.0f64,
    ) {
        let p = t * (1.0 + g) * u1.min(u2);
        let paper = prob_buy_complement(p, u1, u2, g, PaperForm).unwrap();
        let exact = prob_buy_complement(p, u1, u2, g, ExactGeometry).unwrap();
        prop_assert_eq!(paper.to_bits(), exact.to_bits());
    }
}

#[test]
fn substitute_mode_discrepancy_is_reported() {
    let c = compare_demand_modes(BundleKind::Substitute, 0.58, 0.811, 0.793, -0.1).unwrap();
    assert!(!c.modes_agree);
    // (0.5 + γ²) versus (0.5 − γ²) in the non-buy area
    let expected = -2.0 * 0.01 * 0.58 * 0.58 / (0.81 * 0.811 * 0.793);
    assert!(
        (c.discrepancy - expected).abs() < 1e-12,
        "{}",
        c.discrepancy
    );
}

/// Exact-geometry probabilities against 10⁶-draw Monte-Carlo estimates.
#[test]
fn exact_geometry_matches_simulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for case in 0..150u64 {
        let u1 = rng.random_range(0.05..1.0);
        let u2 = rng.random_range(0.05..1.0);
        let (region, exact) = match case % 3 {
            0 => {
                let fee = rng.random_range(0.0..u1);
                (
                    DemandRegion::Separate { fee, quality: u1 },
                    prob_buy_separate(fee, u1).unwrap(),
                )
            }
            1 => {
                let gamma = rng.random_range(0.0..0.5);
                let fee = rng.random_range(0.0..(1.0 + gamma) * (u1 + u2));
                let p = prob_buy_complement(fee, u1, u2, gamma, ExactGeometry).unwrap();
                (DemandRegion::Complement { fee, u1, u2, gamma }, p)
            }
            _ => {
                let gamma = rng.random_range(-0.45..-0.01);
                let fee = rng.random_range(0.0..u1.max(u2));
                let p = prob_buy_substitute(fee, u1, u2, gamma, ExactGeometry).unwrap();
                (DemandRegion::Substitute { fee, u1, u2, gamma }, p)
            }
        };
        let sim = SimulationSpec::new(1_000_000, case, 1.0).unwrap();
        let est = estimate_buy_probability(&region, &sim).unwrap();
        // an all-buy or no-buy sample has zero spread; fall back to the
        // binomial standard error of the exact probability
        let se = if est.std_error > 0.0 {
            est.std_error
        } else {
            (exact * (1.0 - exact) / sim.draws as f64).sqrt()
        };
        let z = if se > 0.0 {
            (est.mean - exact).abs() / se
        } else {
            0.0
        };
        assert!(se > 0.0 || est.mean == exact);
        worst = worst.max(z);
        assert!(
            z <= 3.0,
            "{region:?}: exact {exact}, simulated {} ± {}",
            est.mean,
            est.std_error
        );
    }
    println!("largest deviation {worst:.2} standard errors");
}
