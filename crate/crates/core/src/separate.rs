//! Standalone sales: one service, one fee, one privacy level.
//!
//! Gross profit is `F(r, p) = M·p·(1 − p/u(r)) − N·c·(1 − r)`: subscription
//! revenue from customers whose reservation price clears `p/u`, minus the
//! wage paid for every true-data report.

use std::fmt;

use crate::concavity::ConcavityReport;
use crate::error::{ensure_finite, invalid, Error, Result};
use crate::market::{separate_unchecked, MarketSpec};
use crate::utility::QualityParams;

/// One people-centric service: its quality curve, participant pool and the
/// participants' reservation wage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceSpec {
    quality: QualityParams,
    participants: u64,
    wage: f64,
}

impl ServiceSpec {
    pub fn new(quality: QualityParams, participants: u64, wage: f64) -> Result<Self> {
        if participants == 0 {
            return Err(invalid("N", "participant count must be at least 1"));
        }
        ensure_finite("c", wage)?;
        if wage < 0.0 {
            return Err(invalid(
                "c",
                format!("reservation wage must be nonnegative, got {wage}"),
            ));
        }
        Ok(Self {
            quality,
            participants,
            wage,
        })
    }

    pub fn quality(&self) -> &QualityParams {
        &self.quality
    }

    pub fn participants(&self) -> u64 {
        self.participants
    }

    pub fn wage(&self) -> f64 {
        self.wage
    }

    pub(crate) fn n(&self) -> f64 {
        self.participants as f64
    }

    /// Expected wage bill `N·c·(1 − r)`.
    pub fn data_cost(&self, r: f64) -> f64 {
        self.n() * self.wage * (1.0 - r)
    }

    pub fn with_wage(&self, wage: f64) -> Result<Self> {
        Self::new(self.quality, self.participants, wage)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparateScenario {
    pub service: ServiceSpec,
    pub market: MarketSpec,
}

impl SeparateScenario {
    pub fn new(service: ServiceSpec, market: MarketSpec) -> Self {
        Self { service, market }
    }
}

/// Decision variables, used to report which ones hit a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variable {
    Privacy,
    Fee,
    Privacy1,
    Privacy2,
    BundleFee,
}

impl Variable {
    pub fn name(&self) -> &'static str {
        match self {
            Variable::Privacy => "r",
            Variable::Fee => "p_s",
            Variable::Privacy1 => "r1",
            Variable::Privacy2 => "r2",
            Variable::BundleFee => "p_b",
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimumSeparate {
    pub r_star: f64,
    pub p_star: f64,
    pub profit: f64,
    /// The unconstrained stationary point was feasible (both multipliers zero).
    pub interior: bool,
    pub clamped_variables: Vec<Variable>,
    pub concave_at_optimum: bool,
    /// Best attainable profit is negative: a rational provider would not
    /// offer the service.
    pub unprofitable: bool,
    /// Stationary point before projection.
    pub raw_r_star: f64,
    pub raw_p_star: f64,
}

impl OptimumSeparate {
    pub fn revenue(&self, scenario: &SeparateScenario) -> f64 {
        self.profit + scenario.service.data_cost(self.r_star)
    }
}

fn check_point(scenario: &SeparateScenario, r: f64, fee: f64) -> Result<f64> {
    ensure_finite("r", r)?;
    ensure_finite("p_s", fee)?;
    if !(0.0..=1.0).contains(&r) {
        return Err(invalid(
            "r",
            format!("privacy level must lie in [0, 1], got {r}"),
        ));
    }
    if fee < 0.0 {
        return Err(invalid(
            "p_s",
            format!("fee must be nonnegative, got {fee}"),
        ));
    }
    let u = scenario.service.quality.quality(r);
    if u <= 0.0 {
        return Err(Error::Domain(format!(
            "quality is {u} at privacy level {r}; the service is worthless"
        )));
    }
    Ok(u)
}

pub fn gross_profit_separate(scenario: &SeparateScenario, r: f64, fee: f64) -> Result<f64> {
    let u = check_point(scenario, r, fee)?;
    Ok(scenario.market.m() * fee * separate_unchecked(fee, u) - scenario.service.data_cost(r))
}

/// Profit-maximizing fee `u(r)/2` when the privacy level is imposed.
pub fn optimal_fee_fixed_privacy(scenario: &SeparateScenario, r: f64) -> Result<f64> {
    let u = check_point(scenario, r, 0.0)?;
    Ok(u / 2.0)
}

/// Jointly optimal fee and privacy level.
///
/// The stationary point is `p* = (M·α1·α3 − 4Nc)/(2M·α3)`,
/// `r* = ln(4Nc/(M·α2·α3))/α3`. When it leaves `[0, min(1, r_max))` the
/// privacy level is projected onto that interval and the fee re-optimized
/// there; profit is concave in `r` once `p = u(r)/2` is substituted, so the
/// projection is optimal.
pub fn optimize_separate(scenario: &SeparateScenario) -> OptimumSeparate {
    let q = &scenario.service.quality;
    let (a1, a2, a3) = (q.alpha1(), q.alpha2(), q.alpha3());
    let m = scenario.market.m();
    let nc = scenario.service.n() * scenario.service.wage;

    let raw_r = (4.0 * nc / (m * a2 * a3)).ln() / a3;
    let raw_p = (m * a1 * a3 - 4.0 * nc) / (2.0 * m * a3);
    let ceiling = q.privacy_ceiling();

    let mut clamped_variables = Vec::new();
    let r_feasible = (0.0..=ceiling).contains(&raw_r);
    if !r_feasible {
        clamped_variables.push(Variable::Privacy);
    }
    if raw_p < 0.0 {
        clamped_variables.push(Variable::Fee);
    }
    let interior = r_feasible && raw_p >= 0.0;

    let r_star = raw_r.clamp(0.0, ceiling);
    let p_star = if interior {
        raw_p
    } else {
        q.quality(r_star) / 2.0
    };
    let profit = gross_profit_separate(scenario, r_star, p_star)
        .expect("projected point lies inside the validity domain");
    let concave_at_optimum = concavity_report_separate(scenario, r_star, p_star)
        .map(|c| c.negative_semidefinite)
        .unwrap_or(false);

    OptimumSeparate {
        r_star,
        p_star,
        profit,
        interior,
        clamped_variables,
        concave_at_optimum,
        unprofitable: profit < 0.0,
        raw_r_star: raw_r,
        raw_p_star: raw_p,
    }
}

/// Analytic Hessian of `F` in the variable order `(p_s, r)`, with its leading
/// principal minors `D_1 = −2M/u` and `D_2 = 2M²·α2·α3²·p²·e^{α3·r}/u³`.
pub fn concavity_report_separate(
    scenario: &SeparateScenario,
    r: f64,
    fee: f64,
) -> Result<ConcavityReport> {
    let u = check_point(scenario, r, fee)?;
    let q = &scenario.service.quality;
    let m = scenario.market.m();
    let a3 = q.alpha3();
    let decay = q.decay(r);

    let h_pp = -2.0 * m / u;
    let h_pr = -2.0 * m * a3 * fee * decay / (u * u);
    let h_rr = -2.0 * m * a3 * a3 * fee * fee * decay * decay / (u * u * u)
        - m * a3 * a3 * fee * fee * decay / (u * u);
    Ok(ConcavityReport::from_hessian(
        vec![vec![h_pp, h_pr], vec![h_pr, h_rr]],
        None,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s1() -> SeparateScenario {
        let q = QualityParams::new(0.822, 0.004, 2.813).unwrap();
        SeparateScenario::new(
            ServiceSpec::new(q, 100, 0.2).unwrap(),
            MarketSpec::new(1000).unwrap(),
        )
    }

    #[test]
    fn profit_examples() {
        let sc = s1();
        assert_eq!(gross_profit_separate(&sc, 1.0, 0.0).unwrap(), 0.0);
        let f = gross_profit_separate(&sc, 0.62, 0.406).unwrap();
        assert!((f - 192.1).abs() < 0.1, "{f}");
        let f = gross_profit_separate(&sc, 0.0, 0.409).unwrap();
        assert!((f - 184.5).abs() < 1e-9, "{f}");
    }

    #[test]
    fn profit_rejects_worthless_service() {
        let q = QualityParams::new(0.5, 0.4, 3.0).unwrap();
        let sc = SeparateScenario::new(
            ServiceSpec::new(q, 10, 0.1).unwrap(),
            MarketSpec::new(10).unwrap(),
        );
        assert!(q.max_privacy() < 1.0);
        assert!(matches!(
            gross_profit_separate(&sc, 0.99, 0.1),
            Err(Error::Domain(_))
        ));
        assert!(gross_profit_separate(&sc, 1.5, 0.1).is_err());
    }

    #[test]
    fn s1_optimum() {
        let opt = optimize_separate(&s1());
        assert!(opt.interior);
        assert!(opt.clamped_variables.is_empty());
        assert!((opt.p_star - 0.3968).abs() < 1e-4);
        assert!((opt.r_star - 0.6973).abs() < 1e-4);
        assert!((opt.profit - 192.3).abs() < 0.1);
        assert!(opt.concave_at_optimum);
        assert!(!opt.unprofitable);
    }

    #[test]
    fn free_data_means_no_privacy() {
        let mut sc = s1();
        sc.service = sc.service.with_wage(0.0).unwrap();
        let opt = optimize_separate(&sc);
        assert_eq!(opt.raw_r_star, f64::NEG_INFINITY);
        assert_eq!(opt.r_star, 0.0);
        assert!(!opt.interior);
        assert_eq!(opt.clamped_variables, vec![Variable::Privacy]);
        assert!((opt.p_star - 0.409).abs() < 1e-12);
    }

    #[test]
    fn expensive_data_hits_the_privacy_cap() {
        let mut sc = s1();
        sc.service = sc.service.with_wage(5.0).unwrap();
        let opt = optimize_separate(&sc);
        assert!(opt.raw_r_star > 1.0);
        assert_eq!(opt.r_star, 1.0);
        assert!((opt.p_star - sc.service.quality().quality(1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn unprofitable_scenario_is_reported() {
        let q = QualityParams::new(0.3, 0.2, 1.0).unwrap();
        let sc = SeparateScenario::new(
            ServiceSpec::new(q, 1000, 1.0).unwrap(),
            MarketSpec::new(10).unwrap(),
        );
        let opt = optimize_separate(&sc);
        assert!(opt.unprofitable);
        assert!(opt.profit < 0.0);
        assert!(opt.r_star < q.max_privacy());
        assert!(q.quality(opt.r_star) > 0.0);
    }

    #[test]
    fn fixed_privacy_fee() {
        let sc = s1();
        assert!((optimal_fee_fixed_privacy(&sc, 0.0).unwrap() - 0.409).abs() < 1e-15);
        assert!((optimal_fee_fixed_privacy(&sc, 0.62).unwrap() - 0.3995).abs() < 1e-4);
        let opt = optimize_separate(&sc);
        let p = optimal_fee_fixed_privacy(&sc, opt.r_star).unwrap();
        assert!((p - opt.p_star).abs() < 1e-12);
    }

    #[test]
    fn concavity_examples() {
        let sc = s1();
        let rep = concavity_report_separate(&sc, 0.62, 0.4).unwrap();
        let expected_d1 = -2000.0 / sc.service.quality().quality(0.62);
        assert!((rep.minors[0] - expected_d1).abs() < 1e-9);
        assert!((rep.minors[0] + 2502.8).abs() < 0.1);
        assert!(rep.minors[1] >= 0.0);
        assert!(rep.negative_semidefinite);

        let at_zero_fee = concavity_report_separate(&sc, 0.3, 0.0).unwrap();
        assert_eq!(at_zero_fee.minors[1], 0.0);
        assert!(at_zero_fee.negative_semidefinite);
    }
}
