mod common;

use common::{random_scenario, s1, sb1};
use privacy_pricing::oracle::{
    estimate_buy_probability, grid_maximize, simulate_market, DemandRegion, MarketPoint,
    ProfitSurface, SimulationSpec,
};
use privacy_pricing::{optimize_separate, DemandMode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn simulation_is_bit_identical_across_thread_counts() {
    let sc = s1();
    let b = sb1();
    let points = [
        MarketPoint::Separate {
            scenario: &sc,
            r: 0.62,
            fee: 0.406,
        },
        MarketPoint::Bundle {
            bundle: &b,
            r1: 0.513,
            r2: 0.499,
            fee: 0.754,
        },
    ];
    let sim = SimulationSpec::new(200_003, 42, 0.5).unwrap();
    for point in &points {
        let one = in_pool(1, || simulate_market(point, &sim).unwrap());
        let many = in_pool(7, || simulate_market(point, &sim).unwrap());
        let again = simulate_market(point, &sim).unwrap();
        assert_eq!(one, many);
        assert_eq!(one, again);
    }
    let region = DemandRegion::Substitute {
        fee: 0.58,
        u1: 0.811,
        u2: 0.793,
        gamma: -0.1,
    };
    let one = in_pool(1, || estimate_buy_probability(&region, &sim).unwrap());
    let many = in_pool(5, || estimate_buy_probability(&region, &sim).unwrap());
    assert_eq!(one, many);
}

#[test]
fn lattice_search_is_thread_independent() {
    let b = sb1();
    let surface = ProfitSurface::Bundle(&b, DemandMode::ExactGeometry);
    let grid = surface.default_grid(40).unwrap();
    let one = in_pool(1, || grid_maximize(&surface, &grid).unwrap());
    let many = in_pool(6, || grid_maximize(&surface, &grid).unwrap());
    assert_eq!(one, many);
}

#[test]
fn refinement_never_lowers_the_maximum() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..20 {
        let sc = random_scenario(&mut rng);
        let surface = ProfitSurface::Separate(&sc);
        let mut grid = surface.default_grid(17).unwrap();
        let mut last = grid_maximize(&surface, &grid).unwrap().value;
        for _ in 0..4 {
            grid = grid.refined();
            let v = grid_maximize(&surface, &grid).unwrap().value;
            assert!(v >= last);
            last = v;
        }
    }
    let b = sb1();
    let surface = ProfitSurface::Bundle(&b, DemandMode::PaperForm);
    let coarse = surface.default_grid(21).unwrap();
    let a = grid_maximize(&surface, &coarse).unwrap().value;
    let fine = grid_maximize(&surface, &coarse.refined()).unwrap().value;
    assert!(fine >= a);
}

#[test]
fn simulated_profit_is_unbiased() {
    let sc = s1();
    let opt = optimize_separate(&sc);
    let point = MarketPoint::Separate {
        scenario: &sc,
        r: opt.r_star,
        fee: opt.p_star,
    };
    // 99% two-sided band
    let hits = (0..30)
        .filter(|&seed| {
            let sim = SimulationSpec::new(1_000_000, seed, 1.0).unwrap();
            let res = simulate_market(&point, &sim).unwrap();
            (res.mean - opt.profit).abs() <= 2.576 * res.std_error
        })
        .count();
    assert!(hits >= 28, "{hits} of 30 seeds inside the band");
}

#[test]
fn noise_has_the_requested_spread() {
    let sc = s1();
    let point = MarketPoint::Separate {
        scenario: &sc,
        r: 0.5,
        fee: 0.4,
    };
    let sim = SimulationSpec::new(400_000, 3, 2.0).unwrap();
    let res = simulate_market(&point, &sim).unwrap();
    let share = res.noisy_reports as f64 / res.draws as f64;
    assert!((share - 0.5).abs() < 0.005);
    assert!((res.noise_variance - 4.0).abs() < 0.05);
}
