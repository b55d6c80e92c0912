//! Equilibria, optimal strategies and bargained side payments for a
//! two-sided market where an ISP carries a content provider's traffic to
//! end users and may charge (or pay) the CP a per-unit transfer.
//!
//! The crate covers two revenue models. With *subscription* revenue the
//! CP charges users directly and competes with the ISP in prices while
//! the ISP also tunes its QoS level; [`solve_ne`] returns the unique Nash
//! equilibrium in closed form and [`solve_ne_iterative`] reproduces it by
//! best-response iteration. With *advertisement* revenue the CP instead
//! invests in content and monetizes user attention through advertisers;
//! [`solve_equilibrium_ad`] finds the unique simultaneous best response
//! through a monotone fixed point. The [`bargain`] module negotiates the
//! side payment itself as the maximizer of a weighted Nash product,
//! before or after the strategic play.
//!
//! ```
//! use sidemarket::{solve_ne, SubscriptionMarket, SubscriptionRegime};
//!
//! let market = SubscriptionMarket::new(200.0, 10.0, 0.5, 0.5, 0.0, 1.0, 10.0, 0.0)?;
//! let eq = solve_ne(&market)?;
//! assert_eq!(eq.regime, SubscriptionRegime::Interior);
//! assert!((eq.p_s - 7.35983).abs() < 1e-4);
//! assert!((eq.p_c - 12.71967).abs() < 1e-4);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```
//!
//! A longer guide with the underlying economics lives in the `book/`
//! directory; its code listings double as this crate's doctests.

pub mod advertisement;
pub mod bargain;
pub mod model;
pub mod numerics;
pub mod subscription;

pub use advertisement::{
    check_ad_concavity, cp_best_investment, cp_marginal_revenue, fixed_point_residuals,
    investment_monotonicity, isp_best_response_ad, optimal_ad_price, solve_equilibrium_ad,
    AdSolveError, ConcavityReport, CONCAVITY_TOL,
};
pub use bargain::{
    interior_nash_objective, nash_log_objective, post_bargain_ad, post_bargain_subscription,
    pre_bargain_ad, pre_bargain_subscription, AdBargain, BargainError, DualRoot, Indeterminacy,
    SubscriptionBargain,
};
pub use model::{
    isp_utility_at_demand, AdMarket, AdOutcome, AdRegime, BargainSetting, BargainTiming,
    ModelError, SubscriptionMarket, SubscriptionOutcome, SubscriptionRegime,
    ValuationDistribution,
};
pub use numerics::{
    bisect_root, fixed_point_monotone, gaussian_lower_integral, gaussian_upper_integral,
    golden_max, Bisection, FixedPoint, Maximum, SolveConfig, SolveError,
};
pub use subscription::{
    best_response_cp, best_response_isp, qos_shift_sign, solve_ne, solve_ne_iterative, GameError,
    QosShift,
};

/// Book chapters compiled as doctests so the guide's listings stay in
/// sync with the library.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/market-model.md")]
    pub struct MarketModel;
    #[doc = include_str!("../../../book/src/subscription.md")]
    pub struct Subscription;
    #[doc = include_str!("../../../book/src/advertisement.md")]
    pub struct Advertisement;
    #[doc = include_str!("../../../book/src/bargaining.md")]
    pub struct Bargaining;
    #[doc = include_str!("../../../book/src/numerics.md")]
    pub struct Numerics;
}
