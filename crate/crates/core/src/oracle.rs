//! Independent checks for the closed forms: exhaustive lattice maximization,
//! finite-difference derivatives, and seeded Monte-Carlo simulation of the
//! market.
//!
//! Both the lattice search and the simulators split work across rayon
//! workers but reduce in a fixed order, so results are bit-identical for a
//! given input regardless of the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;

use crate::bundle::{gross_profit_bundle, BundleSpec};
use crate::error::{ensure_finite, invalid, Error, Result};
use crate::market::{BundleKind, DemandMode};
use crate::separate::{gross_profit_separate, SeparateScenario};

/// One lattice dimension: `points` evenly spaced values over `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        ensure_finite("lo", lo)?;
        ensure_finite("hi", hi)?;
        if points < 2 {
            return Err(invalid("points", "each grid axis needs at least 2 points"));
        }
        if hi < lo {
            return Err(invalid(
                "hi",
                format!("axis range [{lo}, {hi}] is reversed"),
            ));
        }
        Ok(Self { lo, hi, points })
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.points - 1) as f64
        }
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub axes: Vec<Axis>,
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>) -> Self {
        Self { axes }
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.axes.is_empty()
    }

    /// Same ranges with `points` per axis.
    pub fn with_points(&self, points: usize) -> Self {
        Self {
            axes: self.axes.iter().map(|a| Axis { points, ..*a }).collect(),
        }
    }

    /// Halves every cell: `n` points become `2n − 1`, so the old lattice is a
    /// subset of the new one.
    pub fn refined(&self) -> Self {
        Self {
            axes: self
                .axes
                .iter()
                .map(|a| Axis {
                    points: 2 * a.points - 1,
                    ..*a
                })
                .collect(),
        }
    }

    fn point(&self, mut linear: usize, out: &mut [f64]) -> Vec<usize> {
        let mut index = vec![0; self.axes.len()];
        for (d, axis) in self.axes.iter().enumerate().rev() {
            index[d] = linear % axis.points;
            linear /= axis.points;
            out[d] = axis.value(index[d]);
        }
        index
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridMaximum {
    pub argmax: Vec<f64>,
    pub index: Vec<usize>,
    pub value: f64,
}

/// Exhaustive lattice maximization of an arbitrary objective.
///
/// `objective` returns `None` at points outside its domain. Ties go to the
/// lexicographically smallest lattice index.
pub fn grid_maximize_fn<F>(grid: &GridSpec, objective: F) -> Result<GridMaximum>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    if grid.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let total = grid.len();
    let chunk = grid.axes.last().map(|a| a.points).unwrap_or(1).max(1024);
    let chunks = total.div_ceil(chunk);

    let best = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut x = vec![0.0; grid.axes.len()];
            let mut best: Option<(f64, usize)> = None;
            for linear in c * chunk..((c + 1) * chunk).min(total) {
                grid.point(linear, &mut x);
                if let Some(v) = objective(&x).filter(|v| !v.is_nan()) {
                    if best.is_none_or(|(bv, _)| v > bv) {
                        best = Some((v, linear));
                    }
                }
            }
            best
        })
        .reduce(|| None, pick_better);

    let (value, linear) = best.ok_or(Error::EmptyDomain)?;
    let mut argmax = vec![0.0; grid.axes.len()];
    let index = grid.point(linear, &mut argmax);
    Ok(GridMaximum {
        argmax,
        index,
        value,
    })
}

fn pick_better(a: Option<(f64, usize)>, b: Option<(f64, usize)>) -> Option<(f64, usize)> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => {
            if a.0 > b.0 || (a.0 == b.0 && a.1 < b.1) {
                Some(a)
            } else {
                Some(b)
            }
        }
    }
}

/// A profit surface the oracle knows how to evaluate.
///
/// Coordinates: `(r, p_s)` for standalone sales, `(r1, r2, p_b)` for bundles.
#[derive(Debug, Clone, Copy)]
pub enum ProfitSurface<'a> {
    Separate(&'a SeparateScenario),
    Bundle(&'a BundleSpec, DemandMode),
}

impl ProfitSurface<'_> {
    pub fn dims(&self) -> usize {
        match self {
            ProfitSurface::Separate(_) => 2,
            ProfitSurface::Bundle(..) => 3,
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        match *self {
            ProfitSurface::Separate(sc) => gross_profit_separate(sc, x[0], x[1]),
            ProfitSurface::Bundle(b, mode) => gross_profit_bundle(b, x[0], x[1], x[2], mode),
        }
    }

    /// Privacy in `[0, min(1, r_max)]`, fee from zero to the largest fee any
    /// customer could accept.
    pub fn default_grid(&self, points: usize) -> Result<GridSpec> {
        let axes = match *self {
            ProfitSurface::Separate(sc) => {
                let q = sc.service.quality();
                vec![
                    Axis::new(0.0, q.max_privacy().min(1.0), points)?,
                    Axis::new(0.0, q.alpha1(), points)?,
                ]
            }
            ProfitSurface::Bundle(b, _) => {
                let (q1, q2) = (b.first().quality(), b.second().quality());
                vec![
                    Axis::new(0.0, q1.max_privacy().min(1.0), points)?,
                    Axis::new(0.0, q2.max_privacy().min(1.0), points)?,
                    Axis::new(0.0, b.fee_ceiling(), points)?,
                ]
            }
        };
        Ok(GridSpec::new(axes))
    }
}

/// Lattice maximum of a profit surface. Points where quality is not positive
/// are skipped.
pub fn grid_maximize(surface: &ProfitSurface<'_>, grid: &GridSpec) -> Result<GridMaximum> {
    if grid.axes.len() != surface.dims() {
        return Err(invalid(
            "grid",
            format!(
                "surface has {} dimensions, grid has {}",
                surface.dims(),
                grid.axes.len()
            ),
        ));
    }
    grid_maximize_fn(grid, |x| surface.evaluate(x).ok())
}

/// Central-difference gradient.
pub fn numeric_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Central-difference Hessian.
pub fn numeric_hessian<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut probe = x.to_vec();
    let mut hess = vec![vec![0.0; n]; n];
    let f0 = f(x);
    for i in 0..n {
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        hess[i][i] = (up - 2.0 * f0 + down) / (h * h);
        for j in 0..i {
            let mut corner = |si: f64, sj: f64| {
                probe[i] = x[i] + si * h;
                probe[j] = x[j] + sj * h;
                let v = f(&probe);
                probe[i] = x[i];
                probe[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0))
                / (4.0 * h * h);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    hess
}

/// Monte-Carlo controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationSpec {
    pub draws: u64,
    pub seed: u64,
    /// Standard deviation of the noise added to reports sent under privacy.
    pub sigma_z: f64,
}

impl SimulationSpec {
    pub fn new(draws: u64, seed: u64, sigma_z: f64) -> Result<Self> {
        if draws == 0 {
            return Err(invalid("draws", "need at least one draw"));
        }
        ensure_finite("sigma_z", sigma_z)?;
        if sigma_z < 0.0 {
            return Err(invalid(
                "sigma_z",
                format!("must be nonnegative, got {sigma_z}"),
            ));
        }
        Ok(Self {
            draws,
            seed,
            sigma_z,
        })
    }
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            draws: 1_000_000,
            seed: 0,
            sigma_z: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimResult {
    pub mean: f64,
    pub std_error: f64,
    pub draws: u64,
    /// Participant reports that were sent noisy (only for market simulations).
    pub noisy_reports: u64,
    /// Empirical variance of the noise added to those reports.
    pub noise_variance: f64,
}

/// A decision point on a profit surface.
#[derive(Debug, Clone, Copy)]
pub enum MarketPoint<'a> {
    Separate {
        scenario: &'a SeparateScenario,
        r: f64,
        fee: f64,
    },
    Bundle {
        bundle: &'a BundleSpec,
        r1: f64,
        r2: f64,
        fee: f64,
    },
}

/// Reservation-price region whose probability mass is the buy probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DemandRegion {
    Separate {
        fee: f64,
        quality: f64,
    },
    Complement {
        fee: f64,
        u1: f64,
        u2: f64,
        gamma: f64,
    },
    Substitute {
        fee: f64,
        u1: f64,
        u2: f64,
        gamma: f64,
    },
}

impl DemandRegion {
    fn validate(&self) -> Result<()> {
        use crate::market::{prob_buy_complement, prob_buy_separate, prob_buy_substitute};
        match *self {
            DemandRegion::Separate { fee, quality } => prob_buy_separate(fee, quality).map(drop),
            DemandRegion::Complement { fee, u1, u2, gamma } => {
                prob_buy_complement(fee, u1, u2, gamma, DemandMode::PaperForm).map(drop)
            }
            DemandRegion::Substitute { fee, u1, u2, gamma } => {
                prob_buy_substitute(fee, u1, u2, gamma, DemandMode::PaperForm).map(drop)
            }
        }
    }

    fn buys(&self, rng: &mut ChaCha8Rng) -> bool {
        match *self {
            DemandRegion::Separate { fee, quality } => {
                let theta: f64 = rng.random();
                theta * quality >= fee
            }
            DemandRegion::Complement { fee, u1, u2, gamma } => {
                bundle_rule(BundleKind::Complement, fee, u1, u2, gamma, rng)
            }
            DemandRegion::Substitute { fee, u1, u2, gamma } => {
                bundle_rule(BundleKind::Substitute, fee, u1, u2, gamma, rng)
            }
        }
    }
}

/// One customer's decision: buy above the bundle line; substitutes also buy
/// when either single valuation clears the fee.
fn bundle_rule(
    kind: BundleKind,
    fee: f64,
    u1: f64,
    u2: f64,
    gamma: f64,
    rng: &mut ChaCha8Rng,
) -> bool {
    let t1: f64 = rng.random();
    let t2: f64 = rng.random();
    let above = (1.0 + gamma) * (t1 * u1 + t2 * u2) > fee;
    match kind {
        BundleKind::Complement => above,
        BundleKind::Substitute => above || t1 * u1 >= fee || t2 * u2 >= fee,
    }
}

const BATCH: u64 = 4096;

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
    noisy: u64,
    noise_sum: f64,
    noise_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2
            + other.m2
            + delta * delta * self.count as f64 * other.count as f64 / count as f64;
        Moments {
            count,
            mean,
            m2,
            noisy: self.noisy + other.noisy,
            noise_sum: self.noise_sum + other.noise_sum,
            noise_sq: self.noise_sq + other.noise_sq,
        }
    }

    fn finish(self) -> SimResult {
        let n = self.count as f64;
        let variance = if self.count > 1 {
            self.m2 / (n - 1.0)
        } else {
            0.0
        };
        let noise_variance = if self.noisy > 1 {
            let k = self.noisy as f64;
            ((self.noise_sq - self.noise_sum * self.noise_sum / k) / (k - 1.0)).max(0.0)
        } else {
            0.0
        };
        SimResult {
            mean: self.mean,
            std_error: (variance / n).sqrt(),
            draws: self.count,
            noisy_reports: self.noisy,
            noise_variance,
        }
    }
}

/// Runs `draws` samples in fixed-size batches; batch `i` owns ChaCha stream
/// `i` of the seed, and batch moments are merged in batch order.
fn run_batches<F>(sim: &SimulationSpec, sample: F) -> SimResult
where
    F: Fn(&mut ChaCha8Rng, &mut Moments) + Sync,
{
    let batches = sim.draws.div_ceil(BATCH);
    let parts: Vec<Moments> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(sim.seed);
            rng.set_stream(b);
            let mut m = Moments::default();
            let n = BATCH.min(sim.draws - b * BATCH);
            for _ in 0..n {
                sample(&mut rng, &mut m);
            }
            m
        })
        .collect();
    parts
        .into_iter()
        .fold(Moments::default(), Moments::merge)
        .finish()
}

/// Emits one participant report: true data with probability `1 − r`,
/// otherwise `y = x + z` with `x ~ N(0, 1)` and `z ~ N(0, σ_z²)`.
/// Returns whether true data was sent.
fn participant_report(r: f64, noise: &Normal<f64>, rng: &mut ChaCha8Rng, m: &mut Moments) -> bool {
    let noisy = rng.random::<f64>() < r;
    let x: f64 = StandardNormal.sample(rng);
    if noisy {
        let y = x + noise.sample(rng);
        let z = y - x;
        m.noisy += 1;
        m.noise_sum += z;
        m.noise_sq += z * z;
    }
    !noisy
}

/// Monte-Carlo gross profit at a decision point.
///
/// Each draw pairs one customer with one participant per service and scales
/// them to the market: revenue `M·p` when the customer buys, wage `N·c` per
/// service whose participant sends true data. The mean over draws is an
/// unbiased estimate of the expected profit.
pub fn simulate_market(point: &MarketPoint<'_>, sim: &SimulationSpec) -> Result<SimResult> {
    SimulationSpec::new(sim.draws, sim.seed, sim.sigma_z)?;
    let noise = Normal::new(0.0, sim.sigma_z).map_err(|e| invalid("sigma_z", e.to_string()))?;
    match *point {
        MarketPoint::Separate { scenario, r, fee } => {
            gross_profit_separate(scenario, r, fee)?;
            let u = scenario.service.quality().quality(r);
            let revenue = scenario.market.customers() as f64 * fee;
            let wage_bill = scenario.service.participants() as f64 * scenario.service.wage();
            let region = DemandRegion::Separate { fee, quality: u };
            Ok(run_batches(sim, |rng, m| {
                let mut x = 0.0;
                if region.buys(rng) {
                    x += revenue;
                }
                if participant_report(r, &noise, rng, m) {
                    x -= wage_bill;
                }
                m.push(x);
            }))
        }
        MarketPoint::Bundle {
            bundle,
            r1,
            r2,
            fee,
        } => {
            gross_profit_bundle(bundle, r1, r2, fee, DemandMode::ExactGeometry)?;
            let u1 = bundle.first().quality().quality(r1);
            let u2 = bundle.second().quality().quality(r2);
            let revenue = bundle.market().customers() as f64 * fee;
            let n = bundle.first().participants() as f64;
            let (bill1, bill2) = (n * bundle.first().wage(), n * bundle.second().wage());
            let (kind, gamma) = (bundle.kind(), bundle.gamma());
            Ok(run_batches(sim, |rng, m| {
                let mut x = 0.0;
                if bundle_rule(kind, fee, u1, u2, gamma, rng) {
                    x += revenue;
                }
                if participant_report(r1, &noise, rng, m) {
                    x -= bill1;
                }
                if participant_report(r2, &noise, rng, m) {
                    x -= bill2;
                }
                m.push(x);
            }))
        }
    }
}

/// Monte-Carlo estimate of a buy probability.
pub fn estimate_buy_probability(region: &DemandRegion, sim: &SimulationSpec) -> Result<SimResult> {
    SimulationSpec::new(sim.draws, sim.seed, sim.sigma_z)?;
    region.validate()?;
    Ok(run_batches(sim, |rng, m| {
        m.push(if region.buys(rng) { 1.0 } else { 0.0 });
    }))
}
