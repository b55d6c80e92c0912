//! Side-payment negotiation: the ISP and the CP pick the transfer price
//! `p_t` that maximizes the weighted Nash product
//! `U_isp^gamma * U_cp^(1-gamma)`, equivalently the log blend
//! `(1-gamma) ln U_cp + gamma ln U_isp`.
//!
//! Two timings are covered for each revenue model. *Pre-bargaining* picks
//! `p_t` first, anticipating the equilibrium it induces; *post-bargaining*
//! derives `p_t` as a function of already-chosen strategies and lets the
//! players compete knowing that rule. The tax rate is fixed at zero
//! throughout this module and `p_t` is unrestricted in sign: a negative
//! value means the ISP pays the CP.
//!
//! For the subscription model the pre-bargain optimum lives on the
//! interior-equilibrium manifold: the blended objective rises with the
//! side payment until a price floor binds, so the optimum is the exact
//! `p_t` at which `p_s*` (for `rho < 1`) or `p_c*` (for `rho > 1`)
//! reaches zero, and the numerical cross-checks maximize over that
//! manifold.

use crate::advertisement::{solve_equilibrium_ad, AdSolveError};
use crate::model::{
    AdMarket, AdOutcome, AdRegime, ModelError, SubscriptionMarket, SubscriptionOutcome,
    SubscriptionRegime, ValuationDistribution,
};
use crate::numerics::{
    bisect_root, golden_max, SolveConfig, SolveError, MAX_BRACKET_EXPANSIONS,
};
use crate::subscription::{solve_ne, GameError};
use thiserror::Error;

/// Errors from the bargaining solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BargainError {
    /// The Nash product is undefined at nonpositive utilities.
    #[error("bargaining requires positive utilities, got u_isp = {u_isp}, u_cp = {u_cp}")]
    NonpositiveUtility { u_isp: f64, u_cp: f64 },
    /// The market cannot support the bargaining construction.
    #[error("infeasible market: {0}")]
    InfeasibleMarket(&'static str),
    /// No scanned side payment produced positive utilities.
    #[error("no positive-utility side payment found in [{lo}, {hi}]")]
    NonpositiveUtilityWindow { lo: f64, hi: f64 },
    /// The post-bargain fixed point has no nonnegative-investment root.
    #[error("no interior fixed-point solution")]
    NoInteriorSolution,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Ad(#[from] AdSolveError),
    #[error(transparent)]
    Numerics(#[from] SolveError),
}

/// Log-space Nash product `(1-gamma) ln(u_cp) + gamma ln(u_isp)`.
///
/// Defined only for positive utilities; the maximizer over `p_t` is the
/// bargained side payment.
pub fn nash_log_objective(u_isp: f64, u_cp: f64, gamma: f64) -> Result<f64, BargainError> {
    if !(u_isp > 0.0 && u_cp > 0.0) {
        return Err(BargainError::NonpositiveUtility { u_isp, u_cp });
    }
    Ok((1.0 - gamma) * u_cp.ln() + gamma * u_isp.ln())
}

fn check_gamma(gamma: f64) -> Result<(), BargainError> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            name: "gamma",
            reason: "must be in [0, 1]",
        }
        .into())
    }
}

fn require_delta_zero_sub(m: &SubscriptionMarket) -> Result<(), BargainError> {
    if m.delta == 0.0 {
        Ok(())
    } else {
        Err(BargainError::InfeasibleMarket("bargaining assumes delta = 0"))
    }
}

/// How a `rho = 1` market leaves the bargained profile underdetermined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Indeterminacy {
    /// Pre-bargaining: the blended objective is flat in `p_t`; the two
    /// sampled values certify the invariance.
    FlatObjective { u_minus: f64, u_plus: f64 },
    /// Post-bargaining: every split of the price sum between `p_s` and
    /// `p_c` is an equilibrium; the canonical `p_c = 0` member is
    /// returned.
    PriceFamily { price_sum: f64 },
}

/// A bargained subscription-market side payment and the profile it
/// induces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubscriptionBargain {
    /// Negotiated side payment (the canonical representative when the
    /// outcome is indeterminate).
    pub p_t: f64,
    /// ISP bargaining power the result was computed for.
    pub gamma: f64,
    pub outcome: SubscriptionOutcome,
    pub indeterminacy: Option<Indeterminacy>,
}

/// Interior-equilibrium tuple `(p_s, p_c, q, demand)` at a given side
/// payment, or `None` when any interior-feasibility constraint fails.
fn interior_ne(m: &SubscriptionMarket, p_t: f64) -> Option<(f64, f64, f64, f64)> {
    let k = m.d0 - m.alpha * m.p_r + m.alpha * p_t * (1.0 - m.rho - m.delta);
    let den = 6.0 * m.alpha * m.p_r - m.beta * m.beta;
    let tau = (1.0 - m.delta) * p_t;
    let q = m.beta * k / den;
    let p_c = 2.0 * m.p_r * k / (m.rho * den) + p_t;
    let p_s = 2.0 * m.p_r * k / den + m.p_r - tau;
    let d = 2.0 * m.p_r * m.alpha * k / den;
    if d > 0.0 && q > 0.0 && q <= m.q_max && p_s >= 0.0 && p_c >= 0.0 {
        Some((p_s, p_c, q, d))
    } else {
        None
    }
}

/// Blended Nash objective along the interior-equilibrium manifold, or
/// `None` outside it. This is the objective the pre-bargain closed forms
/// maximize; tests cross-check them against a golden-section search over
/// this function.
pub fn interior_nash_objective(m: &SubscriptionMarket, gamma: f64, p_t: f64) -> Option<f64> {
    let (p_s, p_c, q, _) = interior_ne(m, p_t)?;
    let mt = m.with_p_t(p_t);
    let u_cp = mt.cp_utility(p_s, p_c, q);
    let u_isp = mt.isp_utility(p_s, p_c, q);
    nash_log_objective(u_isp, u_cp, gamma).ok()
}

/// Pre-bargained side payment for the subscription model.
///
/// The blended objective moves monotonically with `p_t` along the
/// interior manifold, so the optimum sits where the first price floor
/// binds: for `rho < 1` the ISP price reaches zero at
/// `p_t* = p_r (4 alpha p_r + 2 D0 - beta^2) /
/// (4 alpha p_r + 2 rho alpha p_r - beta^2)`; for `rho > 1` the CP price
/// reaches zero at a negative `p_t*`. At `rho = 1` the objective is flat
/// and the result is tagged indeterminate with a sampled certificate.
/// The selection is independent of `gamma` in all three cases.
pub fn pre_bargain_subscription(
    m: &SubscriptionMarket,
    gamma: f64,
) -> Result<SubscriptionBargain, BargainError> {
    m.validate().map_err(GameError::from)?;
    check_gamma(gamma)?;
    require_delta_zero_sub(m)?;
    if m.d0 <= m.alpha * m.p_r {
        return Err(BargainError::InfeasibleMarket(
            "market cannot sustain positive demand",
        ));
    }

    if (m.rho - 1.0).abs() < 1e-12 {
        let probe = |p_t: f64| interior_nash_objective(m, gamma, p_t);
        let (u_minus, u_plus) = match (probe(-1.0), probe(1.0)) {
            (Some(a), Some(b)) => (a, b),
            _ => match (probe(-0.1), probe(0.1)) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(BargainError::InfeasibleMarket(
                        "no interior equilibria around p_t = 0",
                    ))
                }
            },
        };
        let outcome = solve_ne(&m.with_p_t(0.0))?;
        return Ok(SubscriptionBargain {
            p_t: 0.0,
            gamma,
            outcome,
            indeterminacy: Some(Indeterminacy::FlatObjective { u_minus, u_plus }),
        });
    }

    let p_t = if m.rho < 1.0 {
        m.p_r * (4.0 * m.alpha * m.p_r + 2.0 * m.d0 - m.beta * m.beta)
            / (4.0 * m.alpha * m.p_r + 2.0 * m.rho * m.alpha * m.p_r - m.beta * m.beta)
    } else {
        -2.0 * m.p_r * (m.d0 - m.alpha * m.p_r)
            / (2.0 * m.alpha * m.p_r + 4.0 * m.alpha * m.rho * m.p_r
                - m.rho * m.beta * m.beta)
    };
    let outcome = solve_ne(&m.with_p_t(p_t))?;
    if outcome.regime == SubscriptionRegime::QosCapped
        || outcome.regime == SubscriptionRegime::ZeroDemand
    {
        return Err(BargainError::InfeasibleMarket(
            "a boundary other than the intended price floor binds first",
        ));
    }
    Ok(SubscriptionBargain {
        p_t,
        gamma,
        outcome,
        indeterminacy: None,
    })
}

/// Post-bargained side payment for the subscription model.
///
/// Here `p_t` is a function of the strategies (the stationary point of
/// the log blend at fixed strategies), which makes both utilities
/// proportional to the joint profit; the induced competition pushes one
/// price to zero. For `rho > 1` the CP price floors and
/// `p_t* = -(1-gamma)(D0 - alpha p_r)/(2 alpha)`; for `rho < 1` the ISP
/// price floors (mirrored derivation); at `rho = 1` only the price sum is
/// determined and the `p_c = 0` representative is returned.
pub fn post_bargain_subscription(
    m: &SubscriptionMarket,
    gamma: f64,
) -> Result<SubscriptionBargain, BargainError> {
    m.validate().map_err(GameError::from)?;
    check_gamma(gamma)?;
    require_delta_zero_sub(m)?;
    if m.d0 <= m.alpha * m.p_r {
        return Err(BargainError::InfeasibleMarket(
            "market cannot sustain positive demand",
        ));
    }

    if m.rho >= 1.0 {
        let den = 4.0 * m.alpha * m.p_r - m.beta * m.beta;
        let slack = m.d0 - m.alpha * m.p_r;
        let q = m.beta * slack / den;
        if q > m.q_max {
            return Err(BargainError::InfeasibleMarket("QoS ceiling binds"));
        }
        let p_s = 2.0 * m.p_r * slack / den + m.p_r;
        let p_t = -(1.0 - gamma) * slack / (2.0 * m.alpha);
        let mt = m.with_p_t(p_t);
        let demand = mt.demand(p_s, 0.0, q);
        let outcome = SubscriptionOutcome {
            p_s,
            p_c: 0.0,
            q,
            demand,
            u_isp: mt.isp_utility(p_s, 0.0, q),
            u_cp: mt.cp_utility(p_s, 0.0, q),
            regime: SubscriptionRegime::CpPriceFloor,
            iterations: 0,
        };
        let indeterminacy = if (m.rho - 1.0).abs() < 1e-12 {
            Some(Indeterminacy::PriceFamily { price_sum: p_s })
        } else {
            None
        };
        return Ok(SubscriptionBargain {
            p_t,
            gamma,
            outcome,
            indeterminacy,
        });
    }

    // rho < 1: the ISP price floors instead. The CP stationarity
    // condition D = alpha rho (p_c - p_r) and the QoS condition
    // q = beta (p_c - p_r) / (2 p_r) pin the profile linearly.
    let den = 4.0 * m.alpha * m.rho * m.p_r - m.beta * m.beta;
    if den <= 0.0 {
        return Err(BargainError::InfeasibleMarket(
            "requires 4 alpha rho p_r > beta^2",
        ));
    }
    if m.d0 <= m.alpha * m.rho * m.p_r {
        return Err(BargainError::InfeasibleMarket(
            "market cannot sustain positive demand",
        ));
    }
    let p_c = (2.0 * m.p_r * (m.d0 + m.alpha * m.rho * m.p_r) - m.beta * m.beta * m.p_r) / den;
    let q = m.beta * (p_c - m.p_r) / (2.0 * m.p_r);
    if q > m.q_max {
        return Err(BargainError::InfeasibleMarket("QoS ceiling binds"));
    }
    let demand = m.alpha * m.rho * (p_c - m.p_r);
    let p_t = gamma * p_c + (1.0 - gamma) * (m.p_r + m.p_r * q * q / demand);
    let mt = m.with_p_t(p_t);
    let outcome = SubscriptionOutcome {
        p_s: 0.0,
        p_c,
        q,
        demand,
        u_isp: mt.isp_utility(0.0, p_c, q),
        u_cp: mt.cp_utility(0.0, p_c, q),
        regime: SubscriptionRegime::IspPriceFloor,
        iterations: 0,
    };
    Ok(SubscriptionBargain {
        p_t,
        gamma,
        outcome,
        indeterminacy: None,
    })
}

/// Both roots of a post-bargain fixed point whose uniqueness condition
/// failed, as `(investment, demand)` pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualRoot {
    /// The root with the higher joint profit, which the result uses.
    pub kept: (f64, f64),
    pub discarded: (f64, f64),
}

/// A bargained advertisement-market side payment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdBargain {
    pub p_t: f64,
    pub gamma: f64,
    pub outcome: AdOutcome,
    /// Present when the post-bargain fixed point had two roots.
    pub dual_root: Option<DualRoot>,
}

fn uniform_v_max(a: &AdMarket) -> Result<f64, BargainError> {
    match a.dist {
        ValuationDistribution::Uniform { v_max } => Ok(v_max),
        ValuationDistribution::Normal { .. } => Err(BargainError::InfeasibleMarket(
            "ad-model bargaining assumes uniform valuations",
        )),
    }
}

fn require_delta_zero_ad(a: &AdMarket) -> Result<(), BargainError> {
    if a.delta == 0.0 {
        Ok(())
    } else {
        Err(BargainError::InfeasibleMarket("bargaining assumes delta = 0"))
    }
}

/// Pre-bargained side payment for the advertisement model.
///
/// The blended objective has no closed form here: every candidate `p_t`
/// re-solves the full equilibrium (boundary regimes included, through
/// their own utility expressions) and the 1-D search combines a coarse
/// scan with golden-section refinement. The initial window spans
/// `[-v_max, v_max]` and expands geometrically while the best sample sits
/// on an edge.
pub fn pre_bargain_ad(
    a: &AdMarket,
    gamma: f64,
    cfg: &SolveConfig,
) -> Result<AdBargain, BargainError> {
    a.validate().map_err(AdSolveError::from)?;
    check_gamma(gamma)?;
    require_delta_zero_ad(a)?;
    let v_max = uniform_v_max(a)?;

    let objective = |p_t: f64| -> Option<f64> {
        let out = solve_equilibrium_ad(&a.with_p_t(p_t), cfg).ok()?;
        nash_log_objective(out.u_isp, out.u_cp, gamma).ok()
    };

    const SCAN: usize = 65;
    let (mut lo, mut hi) = (-v_max, v_max);
    let mut best_bracket = None;
    for _ in 0..=MAX_BRACKET_EXPANSIONS {
        let step = (hi - lo) / (SCAN - 1) as f64;
        let values: Vec<Option<f64>> =
            (0..SCAN).map(|i| objective(lo + step * i as f64)).collect();
        let best = values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|u| (i, u)))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap());
        let Some((idx, _)) = best else {
            return Err(BargainError::NonpositiveUtilityWindow { lo, hi });
        };
        if idx == 0 {
            lo -= (hi - lo) * (cfg.bracket_expand - 1.0);
        } else if idx == SCAN - 1 {
            hi += (hi - lo) * (cfg.bracket_expand - 1.0);
        } else {
            best_bracket = Some((lo + step * (idx - 1) as f64, lo + step * (idx + 1) as f64));
            break;
        }
    }
    let Some((b_lo, b_hi)) = best_bracket else {
        return Err(BargainError::NonpositiveUtilityWindow { lo, hi });
    };

    let max = golden_max(
        |p_t| objective(p_t).unwrap_or(-1e300),
        b_lo,
        b_hi,
        cfg,
    )?;
    let p_t = max.argmax;
    let outcome = solve_equilibrium_ad(&a.with_p_t(p_t), cfg)?;
    if !(outcome.u_isp > 0.0 && outcome.u_cp > 0.0) {
        return Err(BargainError::NonpositiveUtility {
            u_isp: outcome.u_isp,
            u_cp: outcome.u_cp,
        });
    }
    Ok(AdBargain {
        p_t,
        gamma,
        outcome,
        dual_root: None,
    })
}

/// Post-bargained side payment for the advertisement model.
///
/// With `p_t` tied to the strategies, both utilities become shares
/// `gamma` and `1 - gamma` of the joint profit
/// `T = (y(D) + p_s - p_r) D - c - p_r q^2`, and the stationarity system
/// reduces to `D = alpha (1 + c) / K` against a second demand relation.
/// The investment root is bisected; when the uniqueness condition fails
/// at `c = 0`, both roots are found and the one with the higher joint
/// profit is kept, flagged through [`DualRoot`].
pub fn post_bargain_ad(
    a: &AdMarket,
    gamma: f64,
    cfg: &SolveConfig,
) -> Result<AdBargain, BargainError> {
    a.validate().map_err(AdSolveError::from)?;
    check_gamma(gamma)?;
    require_delta_zero_ad(a)?;
    let v = uniform_v_max(a)?;

    let demand_of = |c: f64| a.alpha * (1.0 + c) / a.k;
    let residual = |c: f64| {
        let d = demand_of(c);
        let den = a.mb + v * d;
        (4.0 * a.alpha * a.p_r - a.beta * a.beta) * d / (2.0 * a.alpha * a.p_r)
            - a.mb * a.mb * v * a.alpha / (den * den)
            - (a.d0_0 - a.alpha * a.p_r + a.k * (1.0 + c).ln())
    };

    let expand_hi = |from: f64| -> Result<f64, BargainError> {
        let mut hi = from.max(1.0);
        for _ in 0..=MAX_BRACKET_EXPANSIONS {
            if residual(hi) > 0.0 {
                return Ok(hi);
            }
            hi *= cfg.bracket_expand;
        }
        Err(SolveError::NoBracket { lo: 0.0, hi }.into())
    };

    let unique = residual(0.0) < 0.0;
    let (c_star, iterations, dual_root) = if unique {
        let hi = expand_hi(1.0)?;
        let sol = bisect_root(&residual, 0.0, hi, cfg)?;
        (sol.root, sol.iterations, None)
    } else {
        // The residual starts nonnegative; it may dip below zero and come
        // back, giving two stationary investments.
        let hi = 2.0 * expand_hi(1.0)?;
        const SCAN: usize = 512;
        let step = hi / SCAN as f64;
        let mut roots = Vec::new();
        let mut prev = residual(0.0);
        let mut total_iters = 0;
        for i in 1..=SCAN {
            let c = step * i as f64;
            let value = residual(c);
            if prev.signum() != value.signum() {
                let sol = bisect_root(&residual, c - step, c, cfg)?;
                total_iters += sol.iterations;
                roots.push(sol.root);
            }
            prev = value;
        }
        match roots.len() {
            0 => return Err(BargainError::NoInteriorSolution),
            1 => (roots[0], total_iters, None),
            _ => {
                let joint = |c: f64| {
                    let d = demand_of(c);
                    let f_prime = a.mb * a.mb * v / ((a.mb + v * d) * (a.mb + v * d));
                    let p_s = d / a.alpha - f_prime + a.p_r;
                    let q = a.beta * d / (2.0 * a.alpha * a.p_r);
                    let p_a = a.mb * v / (a.mb + v * d);
                    (p_a + p_s - a.p_r) * d - c - a.p_r * q * q
                };
                let (first, second) = (roots[0], roots[1]);
                let (kept, discarded) = if joint(first) >= joint(second) {
                    (first, second)
                } else {
                    (second, first)
                };
                (
                    kept,
                    total_iters,
                    Some(DualRoot {
                        kept: (kept, demand_of(kept)),
                        discarded: (discarded, demand_of(discarded)),
                    }),
                )
            }
        }
    };

    let demand = demand_of(c_star);
    let den = a.mb + v * demand;
    let f_prime = a.mb * a.mb * v / (den * den);
    let p_s = demand / a.alpha - f_prime + a.p_r;
    let q = a.beta * demand / (2.0 * a.alpha * a.p_r);
    let p_a = a.mb * v / (a.mb + v * demand);
    let p_t = gamma * p_a - gamma * c_star / demand - (1.0 - gamma) * (p_s - a.p_r)
        + (1.0 - gamma) * a.p_r * q * q / demand;
    let joint = (p_a + p_s - a.p_r) * demand - c_star - a.p_r * q * q;
    let outcome = AdOutcome {
        p_s,
        q,
        investment: c_star,
        demand,
        p_a,
        u_isp: gamma * joint,
        u_cp: (1.0 - gamma) * joint,
        regime: AdRegime::Interior,
        iterations,
    };
    Ok(AdBargain {
        p_t,
        gamma,
        outcome,
        dual_root,
    })
}
