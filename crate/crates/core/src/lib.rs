//! Privacy-aware pricing for people-centric sensing services.
//!
//! A provider buys data from crowdsensing participants at a chosen privacy
//! level `r` (the chance a participant reports noisy data), which fixes the
//! quality `u(r)` of the analytics service it sells to customers. This crate
//! models
//!
//! * the quality–privacy curve and its least-squares fit ([`utility`]),
//! * customer demand under uniform reservation prices ([`market`]),
//! * profit-maximizing fee and privacy for standalone services ([`separate`])
//!   and for complementary or substitute bundles ([`bundle`]),
//! * division of bundle profit between providers ([`sharing`]),
//! * independent lattice and Monte-Carlo oracles for all of the above
//!   ([`oracle`]).

pub mod bundle;
pub mod concavity;
pub mod error;
pub mod geometry;
pub mod market;
pub mod oracle;
pub mod separate;
pub mod sharing;
pub mod utility;

pub use bundle::{
    bundling_decision, concavity_report_bundle, gross_profit_bundle,
    optimal_bundle_fee_fixed_privacy, optimize_bundle, BundleSpec, BundlingDecision,
    OptimizeOptions, OptimumBundle, SolveMethod,
};
pub use concavity::ConcavityReport;
pub use error::{Error, Result};
pub use market::{BundleKind, DemandMode, MarketSpec};
pub use separate::{
    concavity_report_separate, gross_profit_separate, optimal_fee_fixed_privacy, optimize_separate,
    OptimumSeparate, SeparateScenario, ServiceSpec, Variable,
};
pub use sharing::{
    core_check, core_interval_two, shapley_allocation, Allocation, CharacteristicFunction,
};
pub use utility::{fit_quality_curve, FitOptions, FitResult, QualityParams, QualitySample};
