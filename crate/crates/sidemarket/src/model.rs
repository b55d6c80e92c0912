//! Domain types for the two-sided ISP/CP market and the raw demand and
//! utility formulas shared by every solver.
//!
//! Two revenue models are covered. In the *subscription* model the content
//! provider charges end users a price `p_c` and competes with the ISP,
//! whose strategy is the pair `(p_s, q)` of user price and QoS level. In
//! the *advertisement* model the content provider instead invests `c` in
//! content, sells user attention to advertisers at a per-attention price
//! `p_a`, and does not compete with the ISP directly.
//!
//! In both models a side payment of `p_t` per unit of demand flows from
//! the CP to the ISP (negative values mean the ISP pays the CP), taxed at
//! rate `delta`. All types are immutable after construction and all
//! operations are pure, so everything here is safe to evaluate from many
//! threads at once.

use crate::numerics::gaussian_upper_integral;
use std::fmt;
use thiserror::Error;

/// Validation and evaluation errors for the domain types.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    /// A constructor argument violates its documented range.
    #[error("{name}: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    /// Attention demand is undefined at a nonpositive ad price.
    #[error("ad price must be positive, got {p_a}")]
    NonpositiveAdPrice { p_a: f64 },
}

fn require(ok: bool, name: &'static str, reason: &'static str) -> Result<(), ModelError> {
    if ok {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter { name, reason })
    }
}

/// ISP utility at a precomputed demand level:
/// `(p_s - p_r) D + (1 - delta) p_t D - p_r q^2`.
///
/// Shared by both revenue models; the quadratic term is the bandwidth cost
/// of sustaining QoS level `q` at per-unit bandwidth price `p_r`.
pub fn isp_utility_at_demand(
    demand: f64,
    p_s: f64,
    q: f64,
    p_r: f64,
    delta: f64,
    p_t: f64,
) -> f64 {
    (p_s - p_r) * demand + (1.0 - delta) * p_t * demand - p_r * q * q
}

/// Exogenous parameters of the subscription-model price competition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubscriptionMarket {
    /// Potential aggregate demand at zero prices and zero QoS.
    pub d0: f64,
    /// Demand sensitivity to the ISP price (> 0).
    pub alpha: f64,
    /// Demand sensitivity to the QoS level (> 0).
    pub beta: f64,
    /// Relative sensitivity of the CP price versus the ISP price (> 0).
    pub rho: f64,
    /// Tax rate on the side-payment revenue, in `[0, 1]`.
    pub delta: f64,
    /// Per-unit bandwidth cost of the ISP (> 0).
    pub p_r: f64,
    /// QoS ceiling (> 0).
    pub q_max: f64,
    /// Side payment per unit demand from the CP to the ISP (any sign).
    pub p_t: f64,
}

impl SubscriptionMarket {
    /// Build a market, rejecting parameters that violate positivity or the
    /// concavity condition `4 alpha p_r > beta^2`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        d0: f64,
        alpha: f64,
        beta: f64,
        rho: f64,
        delta: f64,
        p_r: f64,
        q_max: f64,
        p_t: f64,
    ) -> Result<Self, ModelError> {
        let m = Self {
            d0,
            alpha,
            beta,
            rho,
            delta,
            p_r,
            q_max,
            p_t,
        };
        m.validate()?;
        Ok(m)
    }

    /// Re-check every construction invariant.
    pub fn validate(&self) -> Result<(), ModelError> {
        require(self.d0.is_finite() && self.d0 >= 0.0, "D0", "must be >= 0")?;
        require(self.alpha > 0.0 && self.alpha.is_finite(), "alpha", "must be > 0")?;
        require(self.beta > 0.0 && self.beta.is_finite(), "beta", "must be > 0")?;
        require(self.rho > 0.0 && self.rho.is_finite(), "rho", "must be > 0")?;
        require(
            (0.0..=1.0).contains(&self.delta),
            "delta",
            "must be in [0, 1]",
        )?;
        require(self.p_r > 0.0 && self.p_r.is_finite(), "p_r", "must be > 0")?;
        require(self.q_max > 0.0 && self.q_max.is_finite(), "q_max", "must be > 0")?;
        require(self.p_t.is_finite(), "p_t", "must be finite")?;
        require(
            4.0 * self.alpha * self.p_r > self.beta * self.beta,
            "beta",
            "must satisfy 4*alpha*p_r > beta^2",
        )
    }

    /// Copy of the market with a different side-payment price.
    pub fn with_p_t(&self, p_t: f64) -> Self {
        Self { p_t, ..*self }
    }

    /// Average user demand `max{0, D0 - alpha (p_s + rho p_c) + beta q}`.
    pub fn demand(&self, p_s: f64, p_c: f64, q: f64) -> f64 {
        self.demand_unclamped(p_s, p_c, q).max(0.0)
    }

    /// Demand before the clamp at zero. Solvers work on this branch and
    /// tag the outcome `ZeroDemand` when it goes nonpositive.
    pub fn demand_unclamped(&self, p_s: f64, p_c: f64, q: f64) -> f64 {
        self.d0 - self.alpha * (p_s + self.rho * p_c) + self.beta * q
    }

    /// CP revenue `(p_c - p_t) D`.
    pub fn cp_utility(&self, p_s: f64, p_c: f64, q: f64) -> f64 {
        (p_c - self.p_t) * self.demand(p_s, p_c, q)
    }

    /// ISP profit at the given strategy profile.
    pub fn isp_utility(&self, p_s: f64, p_c: f64, q: f64) -> f64 {
        isp_utility_at_demand(
            self.demand(p_s, p_c, q),
            p_s,
            q,
            self.p_r,
            self.delta,
            self.p_t,
        )
    }
}

/// Advertiser valuation distribution: each advertiser's willingness to pay
/// per unit of attention is an i.i.d. draw from this law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ValuationDistribution {
    /// Uniform on `[0, v_max]`.
    Uniform { v_max: f64 },
    /// Normal with mean `mu > 0`, untruncated: a small negative-valuation
    /// mass is accepted for tractability.
    Normal { mu: f64, sigma: f64 },
}

impl ValuationDistribution {
    /// Uniform valuations on `[0, v_max]`.
    pub fn uniform(v_max: f64) -> Result<Self, ModelError> {
        require(v_max > 0.0 && v_max.is_finite(), "v_max", "must be > 0")?;
        let d = Self::Uniform { v_max };
        d.check_unit_mass()?;
        Ok(d)
    }

    /// Normal valuations with mean `mu` and standard deviation `sigma`.
    pub fn normal(mu: f64, sigma: f64) -> Result<Self, ModelError> {
        require(mu > 0.0 && mu.is_finite(), "mu", "must be > 0")?;
        require(sigma > 0.0 && sigma.is_finite(), "sigma", "must be > 0")?;
        let d = Self::Normal { mu, sigma };
        d.check_unit_mass()?;
        Ok(d)
    }

    /// Numerically confirm that the density integrates to one (composite
    /// Simpson rule over the effective support, tolerance `1e-6`).
    fn check_unit_mass(&self) -> Result<(), ModelError> {
        let (lo, hi) = match *self {
            Self::Uniform { v_max } => (0.0, v_max),
            Self::Normal { mu, sigma } => (mu - 10.0 * sigma, mu + 10.0 * sigma),
        };
        let mass = simpson(|v| self.pdf(v), lo, hi, 2000);
        require((mass - 1.0).abs() < 1e-6, "dist", "pdf mass must be 1")
    }

    /// Probability density `x(v)`.
    pub fn pdf(&self, v: f64) -> f64 {
        match *self {
            Self::Uniform { v_max } => {
                if (0.0..=v_max).contains(&v) {
                    1.0 / v_max
                } else {
                    0.0
                }
            }
            Self::Normal { mu, sigma } => {
                let z = (v - mu) / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
        }
    }

    /// Cumulative distribution `X(v)`.
    pub fn cdf(&self, v: f64) -> f64 {
        match *self {
            Self::Uniform { v_max } => (v / v_max).clamp(0.0, 1.0),
            Self::Normal { mu, sigma } => {
                gaussian_lower_over_mass(mu, sigma, v)
            }
        }
    }

    /// Upper tail mass `1 - X(v)`, computed directly so it stays accurate
    /// deep in the tail.
    pub fn tail(&self, v: f64) -> f64 {
        match *self {
            Self::Uniform { v_max } => (1.0 - v / v_max).clamp(0.0, 1.0),
            Self::Normal { mu, sigma } => {
                let norm = (2.0 * std::f64::consts::PI * sigma * sigma).sqrt();
                gaussian_upper_integral(mu, sigma, v) / norm
            }
        }
    }
}

fn gaussian_lower_over_mass(mu: f64, sigma: f64, v: f64) -> f64 {
    let norm = (2.0 * std::f64::consts::PI * sigma * sigma).sqrt();
    crate::numerics::gaussian_lower_integral(mu, sigma, v) / norm
}

/// Composite Simpson rule with `n` (even) panels.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    debug_assert!(n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

/// Exogenous parameters of the advertisement-model interaction.
///
/// The advertiser mass `M` and per-advertiser budget `B` enter every
/// formula only through their product, so only `mb = M * B` is stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdMarket {
    /// Potential aggregate demand when the CP invests nothing.
    pub d0_0: f64,
    /// Investment efficiency: demand gained per unit of log-investment.
    pub k: f64,
    /// Advertiser mass times per-advertiser budget, `M * B` (> 0).
    pub mb: f64,
    /// Advertiser valuation distribution.
    pub dist: ValuationDistribution,
    /// Demand sensitivity to the ISP price (> 0).
    pub alpha: f64,
    /// Demand sensitivity to QoS (> 0).
    pub beta: f64,
    /// Tax rate on side-payment revenue, in `[0, 1]`.
    pub delta: f64,
    /// Per-unit bandwidth cost (> 0).
    pub p_r: f64,
    /// QoS ceiling (> 0).
    pub q_max: f64,
    /// Side payment per unit demand (any sign).
    pub p_t: f64,
}

impl AdMarket {
    /// Build a market, rejecting invalid parameters.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        d0_0: f64,
        k: f64,
        mb: f64,
        dist: ValuationDistribution,
        alpha: f64,
        beta: f64,
        delta: f64,
        p_r: f64,
        q_max: f64,
        p_t: f64,
    ) -> Result<Self, ModelError> {
        let a = Self {
            d0_0,
            k,
            mb,
            dist,
            alpha,
            beta,
            delta,
            p_r,
            q_max,
            p_t,
        };
        a.validate()?;
        Ok(a)
    }

    /// Re-check every construction invariant.
    pub fn validate(&self) -> Result<(), ModelError> {
        require(self.d0_0.is_finite() && self.d0_0 >= 0.0, "D0_0", "must be >= 0")?;
        require(self.k > 0.0 && self.k.is_finite(), "K", "must be > 0")?;
        require(self.mb > 0.0 && self.mb.is_finite(), "MB", "must be > 0")?;
        require(self.alpha > 0.0 && self.alpha.is_finite(), "alpha", "must be > 0")?;
        require(self.beta > 0.0 && self.beta.is_finite(), "beta", "must be > 0")?;
        require(
            (0.0..=1.0).contains(&self.delta),
            "delta",
            "must be in [0, 1]",
        )?;
        require(self.p_r > 0.0 && self.p_r.is_finite(), "p_r", "must be > 0")?;
        require(self.q_max > 0.0 && self.q_max.is_finite(), "q_max", "must be > 0")?;
        require(self.p_t.is_finite(), "p_t", "must be finite")?;
        require(
            4.0 * self.alpha * self.p_r > self.beta * self.beta,
            "beta",
            "must satisfy 4*alpha*p_r > beta^2",
        )
    }

    /// Copy of the market with a different side-payment price.
    pub fn with_p_t(&self, p_t: f64) -> Self {
        Self { p_t, ..*self }
    }

    /// Potential aggregate demand after investing `c`:
    /// `D0(c) = D0_0 + K ln(1 + c)` — concave and strictly increasing.
    pub fn potential_demand(&self, c: f64) -> f64 {
        self.d0_0 + self.k * c.ln_1p()
    }

    /// User demand at investment `c`, ISP price `p_s` and QoS `q`.
    pub fn demand(&self, c: f64, p_s: f64, q: f64) -> f64 {
        (self.potential_demand(c) - self.alpha * p_s + self.beta * q).max(0.0)
    }

    /// Advertiser attention demand at per-attention price `p_a`, capped by
    /// the user demand flowing through the ISP:
    /// `min{ user_demand, MB (1 - X(p_a)) / p_a }`.
    ///
    /// Strictly decreasing in `p_a` on the advertiser-bound branch.
    pub fn attention_demand(&self, p_a: f64, user_demand: f64) -> Result<f64, ModelError> {
        if !(p_a > 0.0) {
            return Err(ModelError::NonpositiveAdPrice { p_a });
        }
        Ok(user_demand.min(self.mb * self.dist.tail(p_a) / p_a))
    }

    /// CP profit `(p_a - p_t) * attention - c`.
    pub fn cp_utility(&self, p_a: f64, attention: f64, c: f64) -> f64 {
        (p_a - self.p_t) * attention - c
    }

    /// ISP profit at a precomputed demand level (the ISP-side formula is
    /// identical across the two revenue models).
    pub fn isp_utility(&self, p_s: f64, demand: f64, q: f64) -> f64 {
        isp_utility_at_demand(demand, p_s, q, self.p_r, self.delta, self.p_t)
    }
}

/// Which constraints bind at a subscription-game equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubscriptionRegime {
    /// All first-order conditions hold strictly inside the strategy sets.
    Interior,
    /// The QoS ceiling binds; prices solve the fixed-QoS competition.
    QosCapped,
    /// The ISP price floor `p_s = 0` binds.
    IspPriceFloor,
    /// The CP price floor `p_c = 0` binds.
    CpPriceFloor,
    /// The market clears at zero demand.
    ZeroDemand,
}

impl fmt::Display for SubscriptionRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Interior => "interior",
            Self::QosCapped => "qos_capped",
            Self::IspPriceFloor => "isp_price_floor",
            Self::CpPriceFloor => "cp_price_floor",
            Self::ZeroDemand => "zero_demand",
        };
        f.write_str(s)
    }
}

/// Equilibrium of the subscription game: strategies, realized demand,
/// utilities and the binding-constraint regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubscriptionOutcome {
    pub p_s: f64,
    pub p_c: f64,
    pub q: f64,
    pub demand: f64,
    pub u_isp: f64,
    pub u_cp: f64,
    pub regime: SubscriptionRegime,
    /// Solver iterations (zero for the closed forms).
    pub iterations: usize,
}

/// Which constraints bind at an advertisement-model best response.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdRegime {
    /// Interior simultaneous best response.
    Interior,
    /// The ISP price floor `p_s = 0` binds.
    IspPriceFloor,
    /// The investment floor `c = 0` binds.
    ZeroInvestment,
    /// Both floors bind.
    Both,
}

impl fmt::Display for AdRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Interior => "interior",
            Self::IspPriceFloor => "isp_price_floor",
            Self::ZeroInvestment => "zero_investment",
            Self::Both => "both_floors",
        };
        f.write_str(s)
    }
}

/// Simultaneous best response of the advertisement model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdOutcome {
    pub p_s: f64,
    pub q: f64,
    /// CP content investment `c`.
    pub investment: f64,
    pub demand: f64,
    /// Market-clearing per-attention ad price `y(D)`; infinite when the
    /// demand is exactly zero under a normal valuation law (the revenue
    /// limit is zero there).
    pub p_a: f64,
    pub u_isp: f64,
    pub u_cp: f64,
    pub regime: AdRegime,
    /// Fixed-point bisection iterations.
    pub iterations: usize,
}

/// Timing of the side-payment negotiation relative to the strategic play.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BargainTiming {
    /// Negotiate `p_t` first, anticipating the induced equilibrium.
    Pre,
    /// Play first, then negotiate `p_t` at the fixed strategies.
    Post,
}

/// Bargaining-power weight and timing for the side-payment negotiation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BargainSetting {
    /// ISP bargaining power in `[0, 1]`; one means the ISP dictates.
    pub gamma: f64,
    pub timing: BargainTiming,
}

impl BargainSetting {
    pub fn new(gamma: f64, timing: BargainTiming) -> Result<Self, ModelError> {
        require(
            (0.0..=1.0).contains(&gamma),
            "gamma",
            "must be in [0, 1]",
        )?;
        Ok(Self { gamma, timing })
    }
}
