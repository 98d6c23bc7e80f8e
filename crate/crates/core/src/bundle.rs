//! Two services sold together at one fee.
//!
//! Gross profit is `G(r1, r2, p) = M·p·P_buy(p, u1(r1), u2(r2)) − N·c1·(1 − r1)
//! − N·c2·(1 − r2)`. In paper-form mode the buy probability is
//! `1 − k·p²/((1+γ)²·u1·u2)` with `k = 0.5` for complements and
//! `k = 0.5 + γ²` for substitutes, which makes `G` a cubic in the fee. The
//! complementary maximizer has a closed form; the substitute closed form is
//! evaluated as derived and, when it lands outside the feasible box, the
//! optimizer falls back to a lattice-seeded projected local search.

use crate::concavity::ConcavityReport;
use crate::error::{invalid, Error, Result};
use crate::market::{bundle_unchecked, BundleKind, DemandMode, MarketSpec};
use crate::oracle::{grid_maximize, ProfitSurface};
use crate::separate::{optimize_separate, SeparateScenario, ServiceSpec, Variable};

/// A two-service bundle. Both services share the market and the participant
/// count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BundleSpec {
    first: ServiceSpec,
    second: ServiceSpec,
    market: MarketSpec,
    gamma: f64,
    kind: BundleKind,
}

impl BundleSpec {
    pub fn new(
        first: ServiceSpec,
        second: ServiceSpec,
        market: MarketSpec,
        gamma: f64,
        kind: BundleKind,
    ) -> Result<Self> {
        kind.check_gamma(gamma)?;
        if first.participants() != second.participants() {
            return Err(invalid(
                "N",
                format!(
                    "bundled services must share the participant count, got {} and {}",
                    first.participants(),
                    second.participants()
                ),
            ));
        }
        Ok(Self {
            first,
            second,
            market,
            gamma,
            kind,
        })
    }

    pub fn first(&self) -> &ServiceSpec {
        &self.first
    }

    pub fn second(&self) -> &ServiceSpec {
        &self.second
    }

    pub fn market(&self) -> &MarketSpec {
        &self.market
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn kind(&self) -> BundleKind {
        self.kind
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.first, self.second, self.market, gamma, self.kind)
    }

    pub fn with_services(&self, first: ServiceSpec, second: ServiceSpec) -> Result<Self> {
        Self::new(first, second, self.market, self.gamma, self.kind)
    }

    pub fn with_market(&self, market: MarketSpec) -> Self {
        Self { market, ..*self }
    }

    /// The same bundle with the two services exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            first: self.second,
            second: self.first,
            ..*self
        }
    }

    /// Expected wage bill for both services.
    pub fn data_cost(&self, r1: f64, r2: f64) -> f64 {
        self.first.data_cost(r1) + self.second.data_cost(r2)
    }

    /// A fee at or above which nobody buys, in either demand mode.
    pub fn fee_ceiling(&self) -> f64 {
        let (a1, b1) = (
            self.first.quality().alpha1(),
            self.second.quality().alpha1(),
        );
        ((1.0 + self.gamma) * (a1 + b1)).max(a1.max(b1))
    }

    fn qualities(&self, r1: f64, r2: f64) -> (f64, f64) {
        (
            self.first.quality().quality(r1),
            self.second.quality().quality(r2),
        )
    }

    fn privacy_ceilings(&self) -> [f64; 2] {
        [
            self.first.quality().privacy_ceiling(),
            self.second.quality().privacy_ceiling(),
        ]
    }
}

fn check_point(bundle: &BundleSpec, r1: f64, r2: f64, fee: f64) -> Result<(f64, f64)> {
    for (name, r) in [("r1", r1), ("r2", r2)] {
        if !r.is_finite() || !(0.0..=1.0).contains(&r) {
            return Err(invalid(
                name,
                format!("privacy level must lie in [0, 1], got {r}"),
            ));
        }
    }
    if !fee.is_finite() || fee < 0.0 {
        return Err(invalid(
            "p_b",
            format!("fee must be finite and nonnegative, got {fee}"),
        ));
    }
    let (u1, u2) = bundle.qualities(r1, r2);
    if u1 <= 0.0 || u2 <= 0.0 {
        return Err(Error::Domain(format!(
            "qualities ({u1}, {u2}) at privacy levels ({r1}, {r2}) must both be positive"
        )));
    }
    Ok((u1, u2))
}

pub fn gross_profit_bundle(
    bundle: &BundleSpec,
    r1: f64,
    r2: f64,
    fee: f64,
    mode: DemandMode,
) -> Result<f64> {
    let (u1, u2) = check_point(bundle, r1, r2, fee)?;
    let buy = bundle_unchecked(bundle.kind, fee, u1, u2, bundle.gamma, mode);
    Ok(bundle.market.m() * fee * buy - bundle.data_cost(r1, r2))
}

/// The named intermediate quantity behind a closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intermediate {
    pub name: &'static str,
    pub value: f64,
}

/// Stationary point as given by a closed form. Entries may be negative or
/// NaN when a logarithm's argument is not positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForm {
    pub r1: f64,
    pub r2: f64,
    pub fee: f64,
    pub intermediate: Intermediate,
}

/// Complementary-bundle stationary point.
///
/// `A1 = √(⅜·(γ²+2γ+1)·α1β1M²α3²β3² … + 9N²(α3c2 − β3c1)²) − 3Nα3c2 − 3Nβ3c1`
/// with the three contingency-weighted terms carrying coefficients `8/3`,
/// `16/3`, `8/3`; then `p = A1/(2Mα3β3)` and `r1`, `r2` follow from the
/// privacy stationarity conditions.
pub fn complement_closed_form(bundle: &BundleSpec) -> ClosedForm {
    let (q1, q2) = (bundle.first.quality(), bundle.second.quality());
    let (a1, a2, a3) = (q1.alpha1(), q1.alpha2(), q1.alpha3());
    let (b1, b2, b3) = (q2.alpha1(), q2.alpha2(), q2.alpha3());
    let (m, n, g) = (bundle.market.m(), bundle.first.n(), bundle.gamma);
    let (c1, c2) = (bundle.first.wage(), bundle.second.wage());
    let lift2 = g * g + 2.0 * g + 1.0;
    let common = a1 * b1 * m * m * a3 * a3 * b3 * b3;

    let radicand = 8.0 / 3.0 * common * g * g
        + 16.0 / 3.0 * common * g
        + 8.0 / 3.0 * common
        + 9.0 * n * n * a3 * a3 * c2 * c2
        - 18.0 * n * n * a3 * c1 * c2 * b3
        + 9.0 * n * n * c1 * c1 * b3 * b3;
    let a_1 = radicand.sqrt() - 3.0 * n * a3 * c2 - 3.0 * n * b3 * c1;

    let fee = 0.5 * a_1 / (m * a3 * b3);
    let r1 = (13.5 * n * n * c1 * c2 / (m * m * a2 * a3 * b1 * b3 * lift2)
        + 2.25 * n * c1 * a_1 / (m * m * a2 * a3 * a3 * b1 * b3 * lift2))
        .ln()
        / a3;
    let r2 = (13.5 * n * n * c1 * c2 / (m * m * a1 * a3 * b2 * b3 * lift2)
        + 2.25 * n * c2 * a_1 / (m * m * a1 * a3 * b2 * b3 * b3 * lift2))
        .ln()
        / b3;
    ClosedForm {
        r1,
        r2,
        fee,
        intermediate: Intermediate {
            name: "A1",
            value: a_1,
        },
    }
}

/// Substitute-bundle closed form, with the four self-cancelling
/// leading terms of `A3` removed. The fee `−A3/(2Mα3β3)` is negative for
/// every valid input, so [`optimize_bundle`] always falls back to search.
pub fn substitute_closed_form(bundle: &BundleSpec) -> ClosedForm {
    let (q1, q2) = (bundle.first.quality(), bundle.second.quality());
    let (a1, a2, a3) = (q1.alpha1(), q1.alpha2(), q1.alpha3());
    let (b1, b2, b3) = (q2.alpha1(), q2.alpha2(), q2.alpha3());
    let (m, n, g) = (bundle.market.m(), bundle.first.n(), bundle.gamma);
    let (c1, c2) = (bundle.first.wage(), bundle.second.wage());
    let g2 = g * g;
    let lift2 = g2 + 2.0 * g + 1.0;
    let common = a1 * b1 * m * m * a3 * a3 * b3 * b3;

    let bracket = 8.0 * common * g2
        + 16.0 * common * g
        + 8.0 * common
        + 27.0 * n * n * a3 * a3 * c2 * c2 * g2
        + 27.0 * n * n * a3 * a3 * c2 * c2
        - 54.0 * n * n * a3 * c1 * c2 * g2 * b3
        - 54.0 * n * n * a3 * c1 * c2 * b3
        + 27.0 * n * n * c1 * c1 * g2 * b3 * b3
        + 27.0 * n * n * c1 * c1 * b3 * b3;
    let a_3 = bracket.sqrt() / (9.0 * (g2 + 1.0) * (g2 + 1.0));

    let fee = -0.5 * a_3 / (m * a3 * b3);
    let r1 = (13.5 * (c1 * c2 * n * n * g2 + c1 * c2 * n * n)
        / (m * m * a2 * a3 * b1 * b3 * lift2)
        - 2.25 * (n * c1 * g2 + n * c1) * a_3 / (m * m * a2 * a3 * a3 * b1 * b3 * lift2))
        .ln()
        / a3;
    let r2 = (13.5 * n * c2 * (n * c1 * g2 + n * c1) / (m * m * a1 * a3 * b2 * b3 * lift2)
        - 2.25 * n * c2 * (g2 + 1.0) * a_3 / (m * m * a1 * a3 * b2 * b3 * b3 * lift2))
        .ln()
        / b3;
    ClosedForm {
        r1,
        r2,
        fee,
        intermediate: Intermediate {
            name: "A3",
            value: a_3,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    ClosedForm,
    NumericSearch,
}

impl SolveMethod {
    pub fn name(&self) -> &'static str {
        match self {
            SolveMethod::ClosedForm => "closed-form",
            SolveMethod::NumericSearch => "numeric-search",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOptions {
    pub demand_mode: DemandMode,
    /// Certify the result against an exhaustive lattice search.
    pub verify: bool,
    /// Points per axis of the certifying lattice.
    pub verify_points: usize,
    /// Points per axis of the lattice that seeds the fallback search.
    pub seed_points: usize,
    /// Largest accepted shortfall of the closed form below the lattice maximum.
    pub verify_tolerance: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            demand_mode: DemandMode::PaperForm,
            verify: false,
            verify_points: 120,
            seed_points: 24,
            verify_tolerance: 1e-2,
        }
    }
}

/// Result of the lattice certification.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub value: f64,
    pub argmax: Vec<f64>,
    /// `profit − lattice maximum`; negative means the lattice did better.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimumBundle {
    pub r1_star: f64,
    pub r2_star: f64,
    pub p_b_star: f64,
    pub profit: f64,
    /// No bound is active at the returned point.
    pub interior: bool,
    /// Variables the raw closed form placed outside their bounds.
    pub clamped_variables: Vec<Variable>,
    pub closed_form: ClosedForm,
    pub intermediate: Intermediate,
    pub demand_mode: DemandMode,
    pub method: SolveMethod,
    pub oracle: Option<OracleCheck>,
}

impl OptimumBundle {
    pub fn fallback(&self) -> bool {
        self.method == SolveMethod::NumericSearch
    }

    pub fn data_cost(&self, bundle: &BundleSpec) -> f64 {
        bundle.data_cost(self.r1_star, self.r2_star)
    }

    pub fn revenue(&self, bundle: &BundleSpec) -> f64 {
        self.profit + self.data_cost(bundle)
    }
}

/// Box `[0, ceiling] × [0, ceiling] × [0, fee ceiling]` for `(r1, r2, p)`.
fn search_box(bundle: &BundleSpec) -> ([f64; 3], [f64; 3]) {
    let [c1, c2] = bundle.privacy_ceilings();
    ([0.0; 3], [c1, c2, bundle.fee_ceiling()])
}

fn violations(cf: &ClosedForm, hi: &[f64; 3]) -> Vec<Variable> {
    let mut out = Vec::new();
    if !(cf.r1 >= 0.0 && cf.r1 <= hi[0]) {
        out.push(Variable::Privacy1);
    }
    if !(cf.r2 >= 0.0 && cf.r2 <= hi[1]) {
        out.push(Variable::Privacy2);
    }
    if !(cf.fee >= 0.0 && cf.fee <= hi[2]) {
        out.push(Variable::BundleFee);
    }
    out
}

/// Maximizes bundle profit over privacy levels and fee.
///
/// In paper-form mode the kind-matching closed form is tried first; it is kept
/// when it is feasible and, with `verify`, no worse than the lattice maximum
/// by more than `verify_tolerance`. Otherwise, and always in exact-geometry
/// mode, a projected pattern search started from the best lattice points
/// (and a Newton polish on the free coordinates) produces the answer.
pub fn optimize_bundle(bundle: &BundleSpec, options: &OptimizeOptions) -> Result<OptimumBundle> {
    let mode = options.demand_mode;
    let closed_form = match bundle.kind {
        BundleKind::Complement => complement_closed_form(bundle),
        BundleKind::Substitute => substitute_closed_form(bundle),
    };
    let (lo, hi) = search_box(bundle);
    let clamped_variables = violations(&closed_form, &hi);
    let objective = |x: [f64; 3]| -> f64 {
        gross_profit_bundle(bundle, x[0], x[1], x[2], mode).unwrap_or(f64::NEG_INFINITY)
    };

    let surface = ProfitSurface::Bundle(bundle, mode);
    let oracle = if options.verify {
        let grid = surface.default_grid(options.verify_points)?;
        Some(grid_maximize(&surface, &grid)?)
    } else {
        None
    };

    let mut accepted = None;
    if mode == DemandMode::PaperForm && clamped_variables.is_empty() {
        let x = [closed_form.r1, closed_form.r2, closed_form.fee];
        let value = objective(x);
        let certified = oracle
            .as_ref()
            .is_none_or(|o| value >= o.value - options.verify_tolerance);
        if value.is_finite() && certified {
            accepted = Some((x, value));
        }
    }

    let (x, profit, method) = match accepted {
        Some((x, v)) => (x, v, SolveMethod::ClosedForm),
        None => {
            let seed_grid = surface.default_grid(options.seed_points)?;
            let seed = grid_maximize(&surface, &seed_grid)?;
            let mut starts = vec![[seed.argmax[0], seed.argmax[1], seed.argmax[2]]];
            if let Some(o) = &oracle {
                starts.push([o.argmax[0], o.argmax[1], o.argmax[2]]);
            }
            let projected = [
                clamp_or(closed_form.r1, lo[0], hi[0]),
                clamp_or(closed_form.r2, lo[1], hi[1]),
                clamp_or(closed_form.fee, lo[2], hi[2]),
            ];
            if objective(projected).is_finite() {
                starts.push(projected);
            }
            let steps: [f64; 3] = std::array::from_fn(|i| seed_grid.axes[i].step());
            let mut best: Option<([f64; 3], f64)> = None;
            for start in starts {
                let (x, v) = local_search(bundle, mode, &objective, lo, hi, start, steps);
                if best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((x, v));
                }
            }
            let (x, v) = best.ok_or(Error::EmptyDomain)?;
            (x, v, SolveMethod::NumericSearch)
        }
    };

    let interior = (0..3).all(|i| x[i] > lo[i] + 1e-9 && x[i] < hi[i] - 1e-9);
    let oracle = oracle.map(|o| OracleCheck {
        delta: profit - o.value,
        value: o.value,
        argmax: o.argmax,
    });
    Ok(OptimumBundle {
        r1_star: x[0],
        r2_star: x[1],
        p_b_star: x[2],
        profit,
        interior,
        clamped_variables,
        intermediate: closed_form.intermediate,
        closed_form,
        demand_mode: mode,
        method,
        oracle,
    })
}

fn clamp_or(v: f64, lo: f64, hi: f64) -> f64 {
    if v.is_nan() {
        lo
    } else {
        v.clamp(lo, hi)
    }
}

/// Projected compass search with step halving, followed by a Newton polish
/// of the coordinates that are not at a bound.
fn local_search<F: Fn([f64; 3]) -> f64>(
    bundle: &BundleSpec,
    mode: DemandMode,
    objective: &F,
    lo: [f64; 3],
    hi: [f64; 3],
    start: [f64; 3],
    initial_steps: [f64; 3],
) -> ([f64; 3], f64) {
    let mut x = start;
    let mut fx = objective(x);
    let mut steps = initial_steps;
    let mut evals = 0usize;
    while steps.iter().zip(&hi).any(|(s, h)| *s > 1e-13 * h.max(1.0)) && evals < 400_000 {
        let mut improved = false;
        for i in 0..3 {
            for dir in [1.0, -1.0] {
                let mut cand = x;
                cand[i] = (x[i] + dir * steps[i]).clamp(lo[i], hi[i]);
                if cand[i] == x[i] {
                    continue;
                }
                let fc = objective(cand);
                evals += 1;
                if fc > fx {
                    x = cand;
                    fx = fc;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            for s in &mut steps {
                *s *= 0.5;
            }
        }
    }
    newton_polish(bundle, mode, objective, lo, hi, x)
}

/// Demand factor `k` of the cubic profit model valid at this point, if any.
fn cubic_factor(bundle: &BundleSpec, mode: DemandMode, x: [f64; 3]) -> Option<f64> {
    let (u1, u2) = bundle.qualities(x[0], x[1]);
    let g = bundle.gamma;
    match (bundle.kind, mode) {
        (BundleKind::Complement, DemandMode::PaperForm) => Some(0.5),
        (BundleKind::Substitute, DemandMode::PaperForm) => Some(0.5 + g * g),
        (BundleKind::Complement, DemandMode::ExactGeometry) => {
            (x[2] <= (1.0 + g) * u1.min(u2)).then_some(0.5)
        }
        (BundleKind::Substitute, DemandMode::ExactGeometry) => {
            (x[2] <= u1.min(u2)).then_some(0.5 - g * g)
        }
    }
}

/// Gradient and Hessian, in `(r1, r2, p)` order, of
/// `M·p − k·M·p³/((1+γ)²·u1·u2) − N·c1·(1 − r1) − N·c2·(1 − r2)`.
pub(crate) fn cubic_model_derivatives(
    bundle: &BundleSpec,
    k: f64,
    x: [f64; 3],
) -> ([f64; 3], [[f64; 3]; 3]) {
    let (r1, r2, p) = (x[0], x[1], x[2]);
    let (q1, q2) = (bundle.first.quality(), bundle.second.quality());
    let (u1, u2) = bundle.qualities(r1, r2);
    let (e1, e2) = (q1.decay(r1), q2.decay(r2));
    let (d1, d2) = (e1 * q1.alpha3(), e2 * q2.alpha3());
    let m = bundle.market.m();
    let n = bundle.first.n();
    let lift = 1.0 + bundle.gamma;
    let w = k * m / (lift * lift);
    let uu = u1 * u2;

    let grad = [
        -w * p * p * p * d1 / (u1 * uu) + n * bundle.first.wage(),
        -w * p * p * p * d2 / (u2 * uu) + n * bundle.second.wage(),
        m - 3.0 * w * p * p / uu,
    ];
    let h11 = -w * p * p * p * q1.alpha3() * d1 * (u1 + 2.0 * e1) / (u1 * u1 * uu);
    let h22 = -w * p * p * p * q2.alpha3() * d2 * (u2 + 2.0 * e2) / (u2 * u2 * uu);
    let h12 = -w * p * p * p * d1 * d2 / (uu * uu);
    let h13 = -3.0 * w * p * p * d1 / (u1 * uu);
    let h23 = -3.0 * w * p * p * d2 / (u2 * uu);
    let h33 = -6.0 * w * p / uu;
    (grad, [[h11, h12, h13], [h12, h22, h23], [h13, h23, h33]])
}

fn newton_polish<F: Fn([f64; 3]) -> f64>(
    bundle: &BundleSpec,
    mode: DemandMode,
    objective: &F,
    lo: [f64; 3],
    hi: [f64; 3],
    mut x: [f64; 3],
) -> ([f64; 3], f64) {
    let free_norm =
        |g: &[f64; 3], free: &[usize]| free.iter().fold(0.0_f64, |a, &i| a.max(g[i].abs()));
    for _ in 0..50 {
        let Some(k) = cubic_factor(bundle, mode, x) else {
            break;
        };
        let (g, h) = cubic_model_derivatives(bundle, k, x);
        // coordinates held at a bound by an outward gradient stay there
        let mut free = Vec::with_capacity(3);
        for i in 0..3 {
            let eps = 1e-12 * hi[i].max(1.0);
            if x[i] <= lo[i] + eps && g[i] <= 0.0 {
                x[i] = lo[i];
            } else if x[i] >= hi[i] - eps && g[i] >= 0.0 {
                x[i] = hi[i];
            } else {
                free.push(i);
            }
        }
        let fx = objective(x);
        if free.is_empty() {
            break;
        }
        let gnorm = free_norm(&g, &free);
        if gnorm == 0.0 {
            break;
        }
        let Some(step) = solve_free(&h, &g, &free) else {
            break;
        };
        // Near the optimum profit changes drop below rounding, so a step that
        // keeps profit within rounding and shrinks the gradient also counts.
        let noise = 4.0 * f64::EPSILON * fx.abs().max(1.0);
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-6 {
            let mut cand = x;
            for (j, &i) in free.iter().enumerate() {
                cand[i] = (x[i] - t * step[j]).clamp(lo[i], hi[i]);
            }
            if cand == x {
                break;
            }
            let fc = objective(cand);
            let flatter = fc >= fx - noise
                && cubic_factor(bundle, mode, cand).is_some_and(|kc| {
                    free_norm(&cubic_model_derivatives(bundle, kc, cand).0, &free) < gnorm
                });
            if fc > fx || flatter {
                x = cand;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (x, objective(x))
}

/// Solves `H[free, free]·s = g[free]`.
fn solve_free(h: &[[f64; 3]; 3], g: &[f64; 3], free: &[usize]) -> Option<Vec<f64>> {
    let n = free.len();
    let mut a: Vec<Vec<f64>> = free
        .iter()
        .map(|&i| {
            let mut row: Vec<f64> = free.iter().map(|&j| h[i][j]).collect();
            row.push(g[i]);
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..=n {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    let mut s = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * s[k]).sum();
        s[row] = (a[row][n] - tail) / a[row][row];
    }
    s.iter().all(|v| v.is_finite()).then_some(s)
}

fn require_complement(bundle: &BundleSpec, operation: &'static str) -> Result<()> {
    match bundle.kind {
        BundleKind::Complement => Ok(()),
        BundleKind::Substitute => Err(Error::UnsupportedKind {
            operation,
            kind: "substitute",
        }),
    }
}

/// Fee for imposed privacy levels: `0.82·(1+γ)·√(u1·u2)`, with the stationary
/// constant `√(2/3)` rounded to two digits.
pub fn optimal_bundle_fee_fixed_privacy(bundle: &BundleSpec, r1: f64, r2: f64) -> Result<f64> {
    require_complement(bundle, "fixed-privacy bundle fee")?;
    let (u1, u2) = check_point(bundle, r1, r2, 0.0)?;
    Ok(0.82 * (1.0 + bundle.gamma) * (u1 * u2).sqrt())
}

/// Exact stationary fee for imposed privacy levels: `√(2/3)·(1+γ)·√(u1·u2)`.
pub fn stationary_bundle_fee_fixed_privacy(bundle: &BundleSpec, r1: f64, r2: f64) -> Result<f64> {
    require_complement(bundle, "fixed-privacy bundle fee")?;
    let (u1, u2) = check_point(bundle, r1, r2, 0.0)?;
    Ok((2.0_f64 / 3.0).sqrt() * (1.0 + bundle.gamma) * (u1 * u2).sqrt())
}

/// Analytic Hessian of complementary-bundle profit in `(r1, r2, p_b)` order,
/// its leading principal minors and the factor `A2` that fixes the sign of
/// `D_3 = 0.375·A2/((1+γ)⁶·u1⁵·u2⁵)`.
pub fn concavity_report_bundle(
    bundle: &BundleSpec,
    r1: f64,
    r2: f64,
    fee: f64,
) -> Result<ConcavityReport> {
    require_complement(bundle, "bundle concavity report")?;
    check_point(bundle, r1, r2, fee)?;
    let (_, h) = cubic_model_derivatives(bundle, 0.5, [r1, r2, fee]);

    let (q1, q2) = (bundle.first.quality(), bundle.second.quality());
    let (a1, a2, a3) = (q1.alpha1(), q1.alpha2(), q1.alpha3());
    let (b1, b2, b3) = (q2.alpha1(), q2.alpha2(), q2.alpha3());
    let (e1, e2) = ((a3 * r1).exp(), (b3 * r2).exp());
    let m3 = bundle.market.m().powi(3);
    let p7 = fee.powi(7);
    let a_2 = m3 * a1 * a2 * a3 * a3 * p7 * b2 * b2 * b3 * b3 * e1 * e2 * e2
        + m3 * a2 * a2 * a3 * a3 * p7 * b1 * b2 * b3 * b3 * e2 * e1 * e1
        - 2.0 * m3 * a1 * a2 * a3 * a3 * p7 * b1 * b2 * b3 * b3 * e1 * e2;

    Ok(ConcavityReport::from_hessian(
        h.iter().map(|row| row.to_vec()).collect(),
        Some(a_2),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BundlingDecision {
    pub bundle_profit: f64,
    pub separate_profits: (f64, f64),
    pub recommend_bundle: bool,
}

/// Bundle only when it strictly beats selling both services alone.
pub fn recommend_bundle(bundle_profit: f64, separate_profits: (f64, f64)) -> bool {
    bundle_profit > separate_profits.0 + separate_profits.1
}

/// Compares the optimal bundle with the two standalone optima.
pub fn bundling_decision(
    bundle: &BundleSpec,
    options: &OptimizeOptions,
) -> Result<BundlingDecision> {
    let bundled = optimize_bundle(bundle, options)?;
    let alone =
        |s: &ServiceSpec| optimize_separate(&SeparateScenario::new(*s, bundle.market)).profit;
    let separate_profits = (alone(&bundle.first), alone(&bundle.second));
    Ok(BundlingDecision {
        bundle_profit: bundled.profit,
        separate_profits,
        recommend_bundle: recommend_bundle(bundled.profit, separate_profits),
    })
}
