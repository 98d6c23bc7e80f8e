#![allow(dead_code)]

use privacy_pricing::market::{BundleKind, MarketSpec};
use privacy_pricing::{BundleSpec, QualityParams, SeparateScenario, ServiceSpec};
use rand::Rng;

pub const ALPHA_S1: (f64, f64, f64) = (0.822, 0.004, 2.813);
pub const ALPHA_S2: (f64, f64, f64) = (0.856, 0.013, 1.861);
pub const ALPHA_S3: (f64, f64, f64) = (0.867, 0.001, 4.2);

pub fn params(a: (f64, f64, f64)) -> QualityParams {
    QualityParams::new(a.0, a.1, a.2).unwrap()
}

pub fn service(a: (f64, f64, f64), c: f64) -> ServiceSpec {
    ServiceSpec::new(params(a), 100, c).unwrap()
}

pub fn market() -> MarketSpec {
    MarketSpec::new(1000).unwrap()
}

pub fn s1() -> SeparateScenario {
    SeparateScenario::new(service(ALPHA_S1, 0.2), market())
}

pub fn sb1() -> BundleSpec {
    BundleSpec::new(
        service(ALPHA_S1, 0.2),
        service(ALPHA_S3, 0.1),
        market(),
        0.1,
        BundleKind::Complement,
    )
    .unwrap()
}

pub fn sb2() -> BundleSpec {
    BundleSpec::new(
        service(ALPHA_S1, 0.2),
        service(ALPHA_S2, 0.2),
        market(),
        -0.1,
        BundleKind::Substitute,
    )
    .unwrap()
}

/// Quality curve that stays positive on `[0, 1]` about half the time.
pub fn random_params<R: Rng>(rng: &mut R) -> QualityParams {
    let a1 = rng.random_range(0.2..1.0);
    let a2 = a1 * rng.random_range(1e-3..0.2);
    let a3 = rng.random_range(0.5..5.0);
    QualityParams::new(a1, a2, a3).unwrap()
}

/// Quality curve with `u(1) ≥ 0.2·α1`.
pub fn random_bundle_params<R: Rng>(rng: &mut R) -> QualityParams {
    let a1: f64 = rng.random_range(0.5..1.0);
    let a3: f64 = rng.random_range(1.0..5.0);
    let a2 = a1 * rng.random_range(1e-4..0.8) * (-a3).exp();
    QualityParams::new(a1, a2, a3).unwrap()
}

pub fn random_scenario<R: Rng>(rng: &mut R) -> SeparateScenario {
    let m = rng.random_range(10..=10_000);
    let n = rng.random_range(1..=1000);
    let c = rng.random_range(0.0..=1.0);
    SeparateScenario::new(
        ServiceSpec::new(random_params(rng), n, c).unwrap(),
        MarketSpec::new(m).unwrap(),
    )
}

pub fn random_bundle<R: Rng>(rng: &mut R, kind: BundleKind) -> BundleSpec {
    let m = rng.random_range(100..=10_000);
    let n = rng.random_range(1..=100);
    let gamma = match kind {
        BundleKind::Complement => rng.random_range(0.0..0.5),
        BundleKind::Substitute => rng.random_range(-0.45..-0.01),
    };
    // wages small enough that neither privacy level is pushed to its cap
    let wage = |rng: &mut R| rng.random_range(0.02..0.5) * m as f64 / (n as f64 * 10.0);
    let first = ServiceSpec::new(random_bundle_params(rng), n, wage(rng)).unwrap();
    let second = ServiceSpec::new(random_bundle_params(rng), n, wage(rng)).unwrap();
    BundleSpec::new(first, second, MarketSpec::new(m).unwrap(), gamma, kind).unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}
