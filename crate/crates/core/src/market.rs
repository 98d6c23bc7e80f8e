//! Customer demand under uniform reservation prices.
//!
//! A standalone customer buys when `θ ≥ p/u`. For a two-service bundle the
//! customer holds a reservation-price pair `(θ1, θ2)` uniform on the unit
//! square; complements buy above the line `(1+γ)(θ1·u1 + θ2·u2) = p`, and
//! substitutes additionally buy when either single-service strip
//! `θ1 ≥ p/u1` or `θ2 ≥ p/u2` is reached.
//!
//! Two evaluation modes exist. [`DemandMode::PaperForm`] uses the linear
//! closed forms (clamped to `[0, 1]`); [`DemandMode::ExactGeometry`] measures
//! the region by clipping it against the unit square. For substitutes the two
//! differ even at interior fees: the closed form removes a
//! `(0.5 + γ²)` share of the fee rectangle, while the clipped region removes
//! `(0.5 − γ²)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::geometry::{unit_square_area_within, HalfPlane};

/// Customer base. Reservation prices are fixed as Uniform[0, 1] per service.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MarketSpec {
    customers: u64,
}

impl MarketSpec {
    pub fn new(customers: u64) -> Result<Self> {
        if customers == 0 {
            return Err(invalid("M", "customer count must be at least 1"));
        }
        Ok(Self { customers })
    }

    pub fn customers(&self) -> u64 {
        self.customers
    }

    pub(crate) fn m(&self) -> f64 {
        self.customers as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum DemandMode {
    #[default]
    PaperForm,
    ExactGeometry,
}

impl DemandMode {
    pub fn name(&self) -> &'static str {
        match self {
            DemandMode::PaperForm => "paper",
            DemandMode::ExactGeometry => "exact",
        }
    }
}

impl fmt::Display for DemandMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DemandMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" | "paper-form" => Ok(DemandMode::PaperForm),
            "exact" | "exact-geometry" => Ok(DemandMode::ExactGeometry),
            other => Err(invalid(
                "demand-mode",
                format!("expected `paper` or `exact`, got `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BundleKind {
    Complement,
    Substitute,
}

impl BundleKind {
    pub fn name(&self) -> &'static str {
        match self {
            BundleKind::Complement => "complement",
            BundleKind::Substitute => "substitute",
        }
    }

    /// Checks that `gamma` lies in the kind's validity window.
    pub fn check_gamma(&self, gamma: f64) -> Result<f64> {
        ensure_finite("gamma", gamma)?;
        match self {
            BundleKind::Complement if gamma < 0.0 => Err(invalid(
                "gamma",
                format!("complements need a nonnegative degree of contingency, got {gamma}"),
            )),
            BundleKind::Substitute if !(gamma > -0.5 && gamma < 0.0) => Err(invalid(
                "gamma",
                format!("substitutes need a degree of contingency in (-0.5, 0), got {gamma}"),
            )),
            _ => Ok(gamma),
        }
    }
}

impl fmt::Display for BundleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BundleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complement" | "complements" => Ok(BundleKind::Complement),
            "substitute" | "substitutes" => Ok(BundleKind::Substitute),
            other => Err(invalid(
                "kind",
                format!("expected `complement` or `substitute`, got `{other}`"),
            )),
        }
    }
}

fn check_fee(name: &'static str, fee: f64) -> Result<f64> {
    ensure_finite(name, fee)?;
    if fee < 0.0 {
        return Err(invalid(name, format!("fee must be nonnegative, got {fee}")));
    }
    Ok(fee)
}

fn check_quality(name: &'static str, u: f64) -> Result<f64> {
    if !u.is_finite() || u <= 0.0 {
        return Err(Error::Domain(format!(
            "{name} must be positive for customers to value the service, got {u}"
        )));
    }
    Ok(u)
}

/// `P(θ ≥ p/u)` for θ ~ Uniform[0, 1].
pub fn prob_buy_separate(fee: f64, quality: f64) -> Result<f64> {
    check_fee("p_s", fee)?;
    check_quality("quality", quality)?;
    Ok(separate_unchecked(fee, quality))
}

#[inline]
pub(crate) fn separate_unchecked(fee: f64, quality: f64) -> f64 {
    (1.0 - fee / quality).clamp(0.0, 1.0)
}

/// Buy probability of a complementary bundle.
pub fn prob_buy_complement(
    fee: f64,
    u1: f64,
    u2: f64,
    gamma: f64,
    mode: DemandMode,
) -> Result<f64> {
    check_fee("p_b", fee)?;
    check_quality("u1", u1)?;
    check_quality("u2", u2)?;
    BundleKind::Complement.check_gamma(gamma)?;
    Ok(complement_unchecked(fee, u1, u2, gamma, mode))
}

#[inline]
fn complement_closed_form(fee: f64, u1: f64, u2: f64, gamma: f64) -> f64 {
    let lift = 1.0 + gamma;
    1.0 - 0.5 * fee * fee / (lift * lift * u1 * u2)
}

pub(crate) fn complement_unchecked(
    fee: f64,
    u1: f64,
    u2: f64,
    gamma: f64,
    mode: DemandMode,
) -> f64 {
    match mode {
        DemandMode::PaperForm => complement_closed_form(fee, u1, u2, gamma).clamp(0.0, 1.0),
        DemandMode::ExactGeometry => {
            // While both intercepts stay inside the square the region below
            // the line is the full triangle and the closed form is exact.
            if fee <= (1.0 + gamma) * u1.min(u2) {
                complement_closed_form(fee, u1, u2, gamma).clamp(0.0, 1.0)
            } else {
                line_region_buy_probability(fee, u1, u2, gamma)
            }
        }
    }
}

/// Probability of lying strictly above the bundle line, measured by clipping.
/// Defined for any `γ > −1`.
pub fn line_region_buy_probability(fee: f64, u1: f64, u2: f64, gamma: f64) -> f64 {
    let lift = 1.0 + gamma;
    let below = unit_square_area_within(&[HalfPlane::new(lift * u1, lift * u2, fee)]);
    1.0 - below
}

/// Buy probability of a substitute bundle.
pub fn prob_buy_substitute(
    fee: f64,
    u1: f64,
    u2: f64,
    gamma: f64,
    mode: DemandMode,
) -> Result<f64> {
    check_fee("p_b", fee)?;
    check_quality("u1", u1)?;
    check_quality("u2", u2)?;
    BundleKind::Substitute.check_gamma(gamma)?;
    Ok(substitute_unchecked(fee, u1, u2, gamma, mode))
}

pub(crate) fn substitute_unchecked(
    fee: f64,
    u1: f64,
    u2: f64,
    gamma: f64,
    mode: DemandMode,
) -> f64 {
    match mode {
        DemandMode::PaperForm => {
            let lift = 1.0 + gamma;
            let non_buy = (0.5 + gamma * gamma) * fee * fee / (lift * lift * u1 * u2);
            (1.0 - non_buy).clamp(0.0, 1.0)
        }
        DemandMode::ExactGeometry => {
            let lift = 1.0 + gamma;
            let below = unit_square_area_within(&[
                HalfPlane::new(1.0, 0.0, fee / u1),
                HalfPlane::new(0.0, 1.0, fee / u2),
                HalfPlane::new(lift * u1, lift * u2, fee),
            ]);
            1.0 - below
        }
    }
}

/// Bundle buy probability for either kind.
pub fn prob_buy_bundle(
    kind: BundleKind,
    fee: f64,
    u1: f64,
    u2: f64,
    gamma: f64,
    mode: DemandMode,
) -> Result<f64> {
    match kind {
        BundleKind::Complement => prob_buy_complement(fee, u1, u2, gamma, mode),
        BundleKind::Substitute => prob_buy_substitute(fee, u1, u2, gamma, mode),
    }
}

pub(crate) fn bundle_unchecked(
    kind: BundleKind,
    fee: f64,
    u1: f64,
    u2: f64,
    gamma: f64,
    mode: DemandMode,
) -> f64 {
    match kind {
        BundleKind::Complement => complement_unchecked(fee, u1, u2, gamma, mode),
        BundleKind::Substitute => substitute_unchecked(fee, u1, u2, gamma, mode),
    }
}

/// Both demand modes side by side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandComparison {
    pub paper_form: f64,
    pub exact_geometry: f64,
    /// `paper_form − exact_geometry`
    pub discrepancy: f64,
    pub modes_agree: bool,
}

/// Evaluates both modes and flags any disagreement above `1e-12`.
pub fn compare_demand_modes(
    kind: BundleKind,
    fee: f64,
    u1: f64,
    u2: f64,
    gamma: f64,
) -> Result<DemandComparison> {
    let paper_form = prob_buy_bundle(kind, fee, u1, u2, gamma, DemandMode::PaperForm)?;
    let exact_geometry = prob_buy_bundle(kind, fee, u1, u2, gamma, DemandMode::ExactGeometry)?;
    let discrepancy = paper_form - exact_geometry;
    Ok(DemandComparison {
        paper_form,
        exact_geometry,
        discrepancy,
        modes_agree: discrepancy.abs() <= 1e-12,
    })
}

/// Reservation prices used to define the degree of contingency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContingencyInput {
    pub theta_b: f64,
    pub theta_1: f64,
    pub theta_2: f64,
}

/// `γ = (θ_b − (θ1 + θ2)) / (θ1 + θ2)`: nonnegative for complements,
/// negative for substitutes.
pub fn degree_of_contingency(input: &ContingencyInput) -> Result<f64> {
    for (name, v) in [
        ("theta_b", input.theta_b),
        ("theta_1", input.theta_1),
        ("theta_2", input.theta_2),
    ] {
        ensure_finite(name, v)?;
        if v < 0.0 {
            return Err(invalid(
                name,
                format!("reservation price must be nonnegative, got {v}"),
            ));
        }
    }
    let standalone = input.theta_1 + input.theta_2;
    if standalone <= 0.0 {
        return Err(Error::Domain(
            "standalone reservation prices sum to zero; contingency is undefined".into(),
        ));
    }
    Ok((input.theta_b - standalone) / standalone)
}

/// Classifies a degree of contingency.
pub fn kind_for_gamma(gamma: f64) -> BundleKind {
    if gamma >= 0.0 {
        BundleKind::Complement
    } else {
        BundleKind::Substitute
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use DemandMode::{ExactGeometry, PaperForm};

    #[test]
    fn separate_examples() {
        assert_eq!(prob_buy_separate(0.4, 0.8).unwrap(), 0.5);
        assert_eq!(prob_buy_separate(0.0, 0.3).unwrap(), 1.0);
        assert_eq!(prob_buy_separate(1.0, 0.8).unwrap(), 0.0);
        assert!(matches!(prob_buy_separate(0.1, 0.0), Err(Error::Domain(_))));
        assert!(prob_buy_separate(-0.1, 0.5).is_err());
    }

    #[test]
    fn complement_unit_triangle() {
        for mode in [PaperForm, ExactGeometry] {
            assert_eq!(prob_buy_complement(1.0, 1.0, 1.0, 0.0, mode).unwrap(), 0.5);
        }
    }

    #[test]
    fn complement_at_bundle_optimum() {
        let p = prob_buy_complement(0.754, 0.805, 0.859, 0.1, PaperForm).unwrap();
        let expected = 1.0 - 0.5 * 0.754 * 0.754 / (1.21 * 0.805 * 0.859);
        assert!((p - expected).abs() < 1e-15);
        assert!((p - 0.660).abs() < 1e-3);
    }

    #[test]
    fn complement_fee_beyond_every_valuation() {
        // 0.5·θ1 + 0.5·θ2 ≤ 1 < 1.2 everywhere: nobody buys in either mode.
        let c = compare_demand_modes(BundleKind::Complement, 1.2, 0.5, 0.5, 0.0).unwrap();
        assert_eq!(c.paper_form, 0.0);
        assert_eq!(c.exact_geometry, 0.0);
        assert!(c.modes_agree);
    }

    #[test]
    fn complement_modes_disagree_once_the_line_leaves_the_square() {
        // θ1 + θ2 ≤ 1.4: the clipped region is a square minus a 0.6-leg corner.
        let c = compare_demand_modes(BundleKind::Complement, 0.7, 0.5, 0.5, 0.0).unwrap();
        assert!((c.paper_form - 0.02).abs() < 1e-12);
        assert!((c.exact_geometry - 0.18).abs() < 1e-12);
        assert!(!c.modes_agree);
        assert!(c.discrepancy < 0.0);
    }

    #[test]
    fn substitute_near_zero_contingency() {
        let g = -1e-9;
        for mode in [PaperForm, ExactGeometry] {
            let p = prob_buy_substitute(0.5, 1.0, 1.0, g, mode).unwrap();
            assert!((p - 0.875).abs() < 1e-8, "{mode}: {p}");
        }
    }

    #[test]
    fn substitute_paper_and_exact_factors() {
        let (fee, u1, u2, g) = (0.58, 0.811, 0.793, -0.1);
        let paper = prob_buy_substitute(fee, u1, u2, g, PaperForm).unwrap();
        assert!((paper - 0.6706).abs() < 1e-4, "{paper}");
        let exact = prob_buy_substitute(fee, u1, u2, g, ExactGeometry).unwrap();
        let rect = fee * fee / (u1 * u2);
        let expected = 1.0 - rect * (0.5 - g * g) / ((1.0 + g) * (1.0 + g));
        assert!((exact - expected).abs() < 1e-12, "{exact} vs {expected}");
        assert!(exact > paper);
    }

    #[test]
    fn gamma_windows() {
        assert!(prob_buy_complement(0.5, 0.8, 0.8, -0.01, PaperForm).is_err());
        assert!(prob_buy_substitute(0.5, 0.8, 0.8, 0.0, PaperForm).is_err());
        assert!(prob_buy_substitute(0.5, 0.8, 0.8, -0.5, PaperForm).is_err());
        assert!(prob_buy_substitute(0.5, 0.8, 0.8, -0.49, ExactGeometry).is_ok());
    }

    #[test]
    fn contingency_examples() {
        let g = |b: f64| {
            degree_of_contingency(&ContingencyInput {
                theta_b: b,
                theta_1: 0.5,
                theta_2: 0.5,
            })
            .unwrap()
        };
        assert!((g(1.1) - 0.1).abs() < 1e-12);
        assert_eq!(g(1.0), 0.0);
        assert!((g(0.9) + 0.1).abs() < 1e-12);
        assert_eq!(kind_for_gamma(0.0), BundleKind::Complement);
        assert_eq!(kind_for_gamma(-0.1), BundleKind::Substitute);
        let zero = ContingencyInput {
            theta_b: 1.0,
            theta_1: 0.0,
            theta_2: 0.0,
        };
        assert!(matches!(
            degree_of_contingency(&zero),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn mode_and_kind_parse() {
        assert_eq!("exact".parse::<DemandMode>().unwrap(), ExactGeometry);
        assert_eq!("paper".parse::<DemandMode>().unwrap(), PaperForm);
        assert!("fuzzy".parse::<DemandMode>().is_err());
        assert_eq!(
            "substitute".parse::<BundleKind>().unwrap(),
            BundleKind::Substitute
        );
    }
}
