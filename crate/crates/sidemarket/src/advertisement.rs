//! Solver for the advertisement model: the ISP sets `(p_s, q)` while the
//! CP chooses a content investment `c` that raises the potential demand
//! `D0(c) = D0_0 + K ln(1 + c)` and sells the resulting user attention to
//! advertisers at the market-clearing price `y(D)`.
//!
//! The two best-response maps reduce to a pair of monotone curves in the
//! `(D, c)` plane — the CP's willingness to invest falls with demand while
//! the ISP's induced demand rises with investment — so the simultaneous
//! best response is the unique crossing, bisected numerically. Boundary
//! regimes (`p_s = 0`, `c = 0`, or both) re-solve the remaining optimality
//! conditions with the bound variable pinned.
//!
//! The ISP-side closed forms are derived from the first-order conditions
//! directly, which keeps price, QoS and demand mutually consistent:
//! with margin `s = p_s + (1 - delta) p_t - p_r` they satisfy `D = alpha s`
//! and `q = beta s / (2 p_r)`, hence
//! `p_s = D / alpha + p_r - (1 - delta) p_t`.

use crate::model::{AdMarket, AdOutcome, AdRegime, ModelError, ValuationDistribution};
use crate::numerics::{
    fixed_point_monotone, FixedPoint, SolveConfig, SolveError, MAX_BRACKET_EXPANSIONS,
};
use thiserror::Error;

/// Errors from the advertisement-model solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdSolveError {
    /// The market parameters violate a construction invariant.
    #[error(transparent)]
    InvalidMarket(#[from] ModelError),
    /// Under a normal valuation law the clearing price diverges as demand
    /// goes to zero; the advertising revenue limit there is zero.
    #[error("no finite ad-price crossing at zero demand")]
    NoFiniteCrossing,
    /// A numerical kernel failed.
    #[error(transparent)]
    Numerics(#[from] SolveError),
}

/// Demand floor used inside residuals so the normal-law price map is never
/// evaluated at exactly zero.
const DEMAND_FLOOR: f64 = 1e-12;

/// Tolerance on the sign of second differences in [`check_ad_concavity`].
pub const CONCAVITY_TOL: f64 = 1e-8;

/// Market-clearing ad price for a normal valuation law: the unique root
/// of `D - MB (1 - X(p)) / p` in `p`, bisected on an auto-expanded
/// bracket. Infallible for `demand > 0`.
fn clearing_price_normal(mb: f64, mu: f64, sigma: f64, demand: f64) -> f64 {
    debug_assert!(demand > 0.0);
    let dist = ValuationDistribution::Normal { mu, sigma };
    let excess = |p: f64| demand - mb * dist.tail(p) / p;

    let mut lo = 0.5 * mu;
    while excess(lo) >= 0.0 {
        lo *= 0.5;
        if lo < f64::MIN_POSITIVE {
            return lo;
        }
    }
    let mut hi = mu + sigma;
    let mut step = sigma;
    while excess(hi) <= 0.0 {
        step *= 2.0;
        hi = mu + step;
    }
    let mut width = hi - lo;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        width = hi - lo;
        if width <= 1e-13 * (1.0 + hi.abs()) {
            break;
        }
    }
    debug_assert!(width <= 1e-10 * (1.0 + hi.abs()));
    0.5 * (lo + hi)
}

/// Market-clearing per-attention price `y(D)`: the price at which the
/// advertisers' aggregate attention demand equals the user demand `D`.
///
/// Uniform law: `y(D) = MB v_max / (MB + D v_max)`, with `y(0) = v_max`.
/// Normal law: solved by bracketed bisection; `D = 0` has no finite
/// crossing and is reported as an error (the revenue limit there is
/// zero). Nonincreasing in `D` for both laws.
pub fn optimal_ad_price(a: &AdMarket, demand: f64) -> Result<f64, AdSolveError> {
    debug_assert!(demand >= 0.0);
    match a.dist {
        ValuationDistribution::Uniform { v_max } => {
            Ok(a.mb * v_max / (a.mb + demand * v_max))
        }
        ValuationDistribution::Normal { mu, sigma } => {
            if demand <= 0.0 {
                return Err(AdSolveError::NoFiniteCrossing);
            }
            Ok(clearing_price_normal(a.mb, mu, sigma, demand))
        }
    }
}

/// Derivative of the CP's advertising revenue `F(D) = y(D) D`.
///
/// Uniform law: `MB^2 v_max / (MB + D v_max)^2`. Normal law: evaluated at
/// the clearing price `p = y(D)` as
/// `e^{-(p-mu)^2/2sigma^2} p^2 / (e^{-(p-mu)^2/2sigma^2} p + ∫_p^∞ ...)`,
/// with the tail integral from
/// [`gaussian_upper_integral`](crate::numerics::gaussian_upper_integral).
pub fn cp_marginal_revenue(a: &AdMarket, demand: f64) -> Result<f64, AdSolveError> {
    match a.dist {
        ValuationDistribution::Uniform { v_max } => {
            let den = a.mb + demand * v_max;
            Ok(a.mb * a.mb * v_max / (den * den))
        }
        ValuationDistribution::Normal { mu, sigma } => {
            let p = optimal_ad_price(a, demand)?;
            let z = (p - mu) / sigma;
            let gauss = (-0.5 * z * z).exp();
            if gauss == 0.0 {
                // Far tail: the integral term vanishes relative to the
                // point mass and F'(D) -> p.
                return Ok(p);
            }
            let tail = crate::numerics::gaussian_upper_integral(mu, sigma, p);
            Ok(gauss * p * p / (gauss * p + tail))
        }
    }
}

/// Best response of the ISP to a CP investment `c`: the maximizer of ISP
/// profit over `(p_s, q)`, returned together with the induced demand.
///
/// Interior solution: margin `s = 2 p_r (D0(c) + alpha (1-delta) p_t -
/// alpha p_r) / (4 alpha p_r - beta^2)`, then `p_s = s + p_r -
/// (1-delta) p_t`, `q = beta s / (2 p_r)`, `D = alpha s`. Clamps `p_s` at
/// zero and `q` at the ceiling, re-solving the remaining condition after
/// each clamp. Both `p_s` and `q` are nondecreasing in `c`.
pub fn isp_best_response_ad(a: &AdMarket, c: f64) -> (f64, f64, f64) {
    let tau = (1.0 - a.delta) * a.p_t;
    let det = 4.0 * a.alpha * a.p_r - a.beta * a.beta;
    let d0c = a.potential_demand(c);
    let s = 2.0 * a.p_r * (d0c + a.alpha * tau - a.alpha * a.p_r) / det;

    if s <= 0.0 {
        // Nonpositive margin at the stationary point: the ISP prices the
        // market down to zero demand and spends nothing on QoS.
        let p_s = (d0c / a.alpha).max(0.0);
        return (p_s, 0.0, 0.0);
    }

    let mut p_s = s + a.p_r - tau;
    let mut q = a.beta * s / (2.0 * a.p_r);
    let mut demand = a.alpha * s;
    if q > a.q_max {
        q = a.q_max;
        p_s = (d0c + a.beta * a.q_max + a.alpha * a.p_r - a.alpha * tau) / (2.0 * a.alpha);
        demand = a.alpha * (p_s + tau - a.p_r);
    }
    if p_s < 0.0 {
        p_s = 0.0;
        q = (a.beta * (tau - a.p_r) / (2.0 * a.p_r)).clamp(0.0, a.q_max);
        demand = (d0c + a.beta * q).max(0.0);
    }
    (p_s, q, demand)
}

/// Profit-maximizing CP investment against a fixed demand level:
/// `c = K (F'(D) - p_t) - 1`, clamped at zero.
pub fn cp_best_investment(a: &AdMarket, demand: f64) -> Result<f64, AdSolveError> {
    let marginal = cp_marginal_revenue(a, demand)?;
    Ok((a.k * (marginal - a.p_t) - 1.0).max(0.0))
}

/// The two monotone curves whose crossing is the simultaneous best
/// response, both expressed as investment levels over demand.
struct Curves<'a> {
    a: &'a AdMarket,
    tau: f64,
    det: f64,
}

impl Curves<'_> {
    /// CP curve (nonincreasing in demand): the unclamped stationary
    /// investment `K (F'(D) - p_t) - 1`.
    fn cp(&self, d: f64) -> f64 {
        let d = d.max(DEMAND_FLOOR);
        let marginal = match self.a.dist {
            ValuationDistribution::Uniform { v_max } => {
                let den = self.a.mb + d * v_max;
                self.a.mb * self.a.mb * v_max / (den * den)
            }
            ValuationDistribution::Normal { mu, sigma } => {
                let p = clearing_price_normal(self.a.mb, mu, sigma, d);
                let z = (p - mu) / sigma;
                let gauss = (-0.5 * z * z).exp();
                if gauss == 0.0 {
                    p
                } else {
                    let tail = crate::numerics::gaussian_upper_integral(mu, sigma, p);
                    gauss * p * p / (gauss * p + tail)
                }
            }
        };
        self.a.k * (marginal - self.a.p_t) - 1.0
    }

    /// ISP curve (increasing in demand): the investment that makes the
    /// ISP's interior best response generate demand `d`.
    fn isp(&self, d: f64) -> f64 {
        let exponent = (d * self.det / (2.0 * self.a.p_r * self.a.alpha) - self.a.d0_0
            + self.a.alpha * self.a.p_r
            - self.tau * self.a.alpha)
            / self.a.k;
        exponent.exp() - 1.0
    }

    /// ISP curve with the QoS pinned at a fixed level instead of its
    /// stationary value.
    fn isp_q_fixed(&self, d: f64, q: f64) -> f64 {
        let exponent = (2.0 * d - self.a.beta * q - self.a.alpha * self.tau
            + self.a.alpha * self.a.p_r
            - self.a.d0_0)
            / self.a.k;
        exponent.exp() - 1.0
    }
}

fn assemble_outcome(
    a: &AdMarket,
    p_s: f64,
    q: f64,
    c: f64,
    demand: f64,
    regime: AdRegime,
    iterations: usize,
) -> AdOutcome {
    let (p_a, u_cp) = if demand <= DEMAND_FLOOR {
        // Zero demand: the normal-law price diverges and revenue tends to
        // zero; only the sunk investment remains.
        let p_a = match a.dist {
            ValuationDistribution::Uniform { v_max } => v_max,
            ValuationDistribution::Normal { .. } => f64::INFINITY,
        };
        (p_a, -c)
    } else {
        let p_a = match a.dist {
            ValuationDistribution::Uniform { v_max } => a.mb * v_max / (a.mb + demand * v_max),
            ValuationDistribution::Normal { mu, sigma } => {
                clearing_price_normal(a.mb, mu, sigma, demand)
            }
        };
        (p_a, a.cp_utility(p_a, demand, c))
    };
    AdOutcome {
        p_s,
        q,
        investment: c,
        demand,
        p_a,
        u_isp: a.isp_utility(p_s, demand, q),
        u_cp,
        regime,
        iterations,
    }
}

/// Unique simultaneous best response `(p_s*, q*, c*, D*, p_a*)` of the
/// advertisement model.
///
/// Bisects the crossing of the CP and ISP curves in demand; when no
/// crossing with nonnegative investment or price exists, the dominant
/// boundary regime is selected: `ZeroInvestment` pins `c = 0` and
/// re-solves the ISP optimum, `IspPriceFloor` pins `p_s = 0` and
/// re-solves the CP fixed point at the floor QoS level, and `Both` pins
/// the two together.
pub fn solve_equilibrium_ad(a: &AdMarket, cfg: &SolveConfig) -> Result<AdOutcome, AdSolveError> {
    a.validate()?;
    let tau = (1.0 - a.delta) * a.p_t;
    let det = 4.0 * a.alpha * a.p_r - a.beta * a.beta;
    let curves = Curves { a, tau, det };

    // Demand cannot exceed the investment-saturated potential plus the
    // QoS ceiling contribution.
    let c_cap = cp_best_investment(a, DEMAND_FLOOR)?;
    let mut d_hi = (a.potential_demand(c_cap) + a.beta * a.q_max).max(1.0);
    let mut expansions = 0;
    while curves.cp(d_hi) > curves.isp(d_hi) {
        d_hi *= cfg.bracket_expand;
        expansions += 1;
        if expansions > MAX_BRACKET_EXPANSIONS {
            return Err(SolveError::NoBracket {
                lo: DEMAND_FLOOR,
                hi: d_hi,
            }
            .into());
        }
    }

    let fp = fixed_point_monotone(
        |d| curves.isp(d),
        |d| curves.cp(d),
        DEMAND_FLOOR,
        d_hi,
        cfg,
    )?;
    let (demand, iterations) = match fp {
        FixedPoint::Crossing { x, iterations } => (x, iterations),
        FixedPoint::IncreasingDominates => {
            // The ISP's required investment exceeds the CP's willingness
            // everywhere: advertising revenue cannot pay for content.
            return Ok(zero_investment_outcome(a, 0));
        }
        FixedPoint::DecreasingDominates => {
            return Err(SolveError::NoBracket {
                lo: DEMAND_FLOOR,
                hi: d_hi,
            }
            .into());
        }
    };

    let c = curves.cp(demand);
    if c < 0.0 {
        return Ok(zero_investment_outcome(a, iterations));
    }
    // Participation check: when the total advertiser budget is too small
    // to repay the investment, the crossing leaves the CP with negative
    // profit and it withdraws to c = 0.
    let p_a = optimal_ad_price(a, demand)?;
    if a.cp_utility(p_a, demand, c) < 0.0 {
        return Ok(zero_investment_outcome(a, iterations));
    }

    let s = demand / a.alpha;
    let p_s = s + a.p_r - tau;
    let q = a.beta * s / (2.0 * a.p_r);

    if q > a.q_max {
        // QoS ceiling saturates: re-solve the crossing against the
        // capped ISP curve (still an interior price/investment pair).
        let fp = fixed_point_monotone(
            |d| curves.isp_q_fixed(d, a.q_max),
            |d| curves.cp(d),
            DEMAND_FLOOR,
            d_hi,
            cfg,
        )?;
        if let FixedPoint::Crossing { x, iterations } = fp {
            let c = curves.cp(x).max(0.0);
            let p_s = x / a.alpha + a.p_r - tau;
            if p_s < 0.0 {
                return isp_floor_outcome(a, &curves, a.q_max, cfg);
            }
            return Ok(assemble_outcome(a, p_s, a.q_max, c, x, AdRegime::Interior, iterations));
        }
        return Ok(zero_investment_outcome(a, iterations));
    }
    if p_s < 0.0 {
        let q_floor = (a.beta * (tau - a.p_r) / (2.0 * a.p_r)).clamp(0.0, a.q_max);
        return isp_floor_outcome(a, &curves, q_floor, cfg);
    }
    Ok(assemble_outcome(a, p_s, q, c, demand, AdRegime::Interior, iterations))
}

fn zero_investment_outcome(a: &AdMarket, iterations: usize) -> AdOutcome {
    let (p_s, q, demand) = isp_best_response_ad(a, 0.0);
    let tau = (1.0 - a.delta) * a.p_t;
    let det = 4.0 * a.alpha * a.p_r - a.beta * a.beta;
    let interior_ps =
        2.0 * a.p_r * (a.d0_0 + a.alpha * tau - a.alpha * a.p_r) / det + a.p_r - tau;
    let regime = if interior_ps < 0.0 {
        AdRegime::Both
    } else {
        AdRegime::ZeroInvestment
    };
    assemble_outcome(a, p_s, q, 0.0, demand, regime, iterations)
}

/// ISP price floor: `p_s = 0`, QoS pinned at the floor stationary level,
/// and the CP fixed point re-solved in investment space.
fn isp_floor_outcome(
    a: &AdMarket,
    curves: &Curves<'_>,
    q: f64,
    cfg: &SolveConfig,
) -> Result<AdOutcome, AdSolveError> {
    let demand_at = |c: f64| (a.potential_demand(c) + a.beta * q).max(DEMAND_FLOOR);
    // Fixed point c = K (F'(D(c)) - p_t) - 1; the right side decreases in
    // c while the identity increases.
    let target = |c: f64| curves.cp(demand_at(c));
    let mut c_hi = target(0.0).max(1.0);
    let mut expansions = 0;
    while target(c_hi) > c_hi {
        c_hi *= cfg.bracket_expand;
        expansions += 1;
        if expansions > MAX_BRACKET_EXPANSIONS {
            return Err(SolveError::NoBracket { lo: 0.0, hi: c_hi }.into());
        }
    }
    let fp = fixed_point_monotone(|c| c, target, 0.0, c_hi, cfg)?;
    match fp {
        FixedPoint::Crossing { x: c, iterations } => Ok(assemble_outcome(
            a,
            0.0,
            q,
            c,
            demand_at(c),
            AdRegime::IspPriceFloor,
            iterations,
        )),
        // Identity above the reinvestment map already at c = 0.
        FixedPoint::IncreasingDominates => Ok(assemble_outcome(
            a,
            0.0,
            q,
            0.0,
            demand_at(0.0),
            AdRegime::Both,
            0,
        )),
        FixedPoint::DecreasingDominates => {
            Err(SolveError::NoBracket { lo: 0.0, hi: c_hi }.into())
        }
    }
}

/// Optimal investment along a grid of side-payment prices.
///
/// The investment is nonincreasing in `p_t`, and the clamp at zero is
/// absorbing.
pub fn investment_monotonicity(
    a: &AdMarket,
    p_t_grid: &[f64],
    cfg: &SolveConfig,
) -> Result<Vec<(f64, f64)>, AdSolveError> {
    p_t_grid
        .iter()
        .map(|&p_t| {
            let out = solve_equilibrium_ad(&a.with_p_t(p_t), cfg)?;
            Ok((p_t, out.investment))
        })
        .collect()
}

/// Concavity scan of the advertising revenue `F(D) = y(D) D`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcavityReport {
    /// Grid points whose centered second difference exceeds
    /// [`CONCAVITY_TOL`], with the offending value.
    pub violations: Vec<(f64, f64)>,
    /// Largest second difference observed.
    pub max_second_difference: f64,
}

impl ConcavityReport {
    /// No violations were observed.
    pub fn is_concave(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Scan the second differences of the revenue `F(D)` over a demand grid.
///
/// Concave revenue is what makes the simultaneous best response unique,
/// analytically for the uniform law and numerically checkable for the
/// normal one. Grid points should be positive and uniformly spaced.
pub fn check_ad_concavity(a: &AdMarket, d_grid: &[f64]) -> Result<ConcavityReport, AdSolveError> {
    let revenue = |d: f64| -> Result<f64, AdSolveError> {
        Ok(optimal_ad_price(a, d)? * d)
    };
    let values: Vec<f64> = d_grid
        .iter()
        .map(|&d| revenue(d))
        .collect::<Result<_, _>>()?;
    let mut violations = Vec::new();
    let mut max_d2 = f64::NEG_INFINITY;
    for i in 1..values.len().saturating_sub(1) {
        let d2 = values[i + 1] - 2.0 * values[i] + values[i - 1];
        max_d2 = max_d2.max(d2);
        if d2 > CONCAVITY_TOL {
            violations.push((d_grid[i], d2));
        }
    }
    Ok(ConcavityReport {
        violations,
        max_second_difference: max_d2,
    })
}

/// Residuals of the interior fixed-point system at a candidate outcome:
/// the gap between the two curve values and the two ISP stationarity
/// conditions, all of which vanish at an interior solution.
pub fn fixed_point_residuals(a: &AdMarket, out: &AdOutcome) -> (f64, f64, f64) {
    let tau = (1.0 - a.delta) * a.p_t;
    let det = 4.0 * a.alpha * a.p_r - a.beta * a.beta;
    let curves = Curves { a, tau, det };
    let curve_gap = curves.cp(out.demand) - curves.isp(out.demand);
    let g_ps = out.demand - a.alpha * (out.p_s + tau - a.p_r);
    let g_q = a.beta * (out.p_s + tau - a.p_r) - 2.0 * a.p_r * out.q;
    (curve_gap, g_ps, g_q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ValuationDistribution as Dist;
    use crate::numerics::bisect_root;

    /// Advertisement scenario used throughout the suites: D0_0 = 0,
    /// alpha = 10, beta = 0.5, p_r = 1, delta = 0, MB = 1000, uniform
    /// valuations on [0, 10].
    fn a1(k: f64, p_t: f64) -> AdMarket {
        AdMarket::new(
            0.0,
            k,
            1000.0,
            Dist::uniform(10.0).unwrap(),
            10.0,
            0.5,
            0.0,
            1.0,
            10.0,
            p_t,
        )
        .unwrap()
    }

    fn a1_normal(k: f64, p_t: f64) -> AdMarket {
        AdMarket::new(
            0.0,
            k,
            1000.0,
            Dist::normal(5.0, 2.0).unwrap(),
            10.0,
            0.5,
            0.0,
            1.0,
            10.0,
            p_t,
        )
        .unwrap()
    }

    #[test]
    fn ad_price_uniform() {
        let a = a1(10.0, 0.0);
        assert!((optimal_ad_price(&a, 100.0).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(optimal_ad_price(&a, 0.0).unwrap(), 10.0);
        // The crossing condition holds: MB (1 - X(y(D))) / y(D) = D.
        for d in [0.5, 16.6, 100.0, 400.0] {
            let p = optimal_ad_price(&a, d).unwrap();
            let implied = a.mb * a.dist.tail(p) / p;
            assert!((implied - d).abs() < 1e-10 * (1.0 + d), "d = {d}");
        }
    }

    #[test]
    fn ad_price_normal() {
        let a = a1_normal(10.0, 0.0);
        // X(5) = 0.5 makes MB (1 - X(5)) / 5 = 100.
        assert!((optimal_ad_price(&a, 100.0).unwrap() - 5.0).abs() < 1e-9);
        assert!(matches!(
            optimal_ad_price(&a, 0.0),
            Err(AdSolveError::NoFiniteCrossing)
        ));
        // y is nonincreasing in demand.
        let mut prev = f64::INFINITY;
        for d in [0.1, 1.0, 10.0, 100.0, 500.0] {
            let p = optimal_ad_price(&a, d).unwrap();
            assert!(p <= prev);
            prev = p;
        }
    }

    #[test]
    fn marginal_revenue_uniform() {
        let a = a1(10.0, 0.0);
        // MB^2 v_max / (MB + D v_max)^2 at D = 16.6.
        let expected = 1e7 / (1166.0_f64 * 1166.0);
        assert!((cp_marginal_revenue(&a, 16.6).unwrap() - expected).abs() < 1e-12);
        // F'(0) = y(0) = v_max.
        assert_eq!(cp_marginal_revenue(&a, 0.0).unwrap(), 10.0);
        // Central finite difference of F(D) = y(D) D.
        let f = |d: f64| optimal_ad_price(&a, d).unwrap() * d;
        let h = 1e-5;
        let fd = (f(16.6 + h) - f(16.6 - h)) / (2.0 * h);
        assert!((cp_marginal_revenue(&a, 16.6).unwrap() - fd).abs() < 1e-6);
    }

    #[test]
    fn marginal_revenue_normal_matches_finite_difference() {
        let a = a1_normal(10.0, 0.0);
        let f = |d: f64| optimal_ad_price(&a, d).unwrap() * d;
        for d in [5.0, 16.6, 30.0, 100.0] {
            let h = 1e-5;
            let fd = (f(d + h) - f(d - h)) / (2.0 * h);
            let got = cp_marginal_revenue(&a, d).unwrap();
            assert!((got - fd).abs() < 1e-6, "d = {d}: {got} vs {fd}");
        }
        // Frozen from the quadrature oracle.
        assert!((cp_marginal_revenue(&a, 30.0).unwrap() - 5.502499860565089).abs() < 1e-8);
    }

    #[test]
    fn isp_best_response_values() {
        let a = a1(10.0, 0.0);
        let (p_s, q, d) = isp_best_response_ad(&a, 72.56);
        assert!((p_s - 2.6594220879175445).abs() < 1e-9);
        assert!((q - 0.4148555219793862).abs() < 1e-9);
        assert!((d - 16.59422087917545).abs() < 1e-8);
    }

    #[test]
    fn isp_best_response_zero_margin() {
        // D0(c) = alpha p_r collapses the margin and the demand.
        let a = AdMarket::new(
            10.0,
            10.0,
            1000.0,
            Dist::uniform(10.0).unwrap(),
            10.0,
            0.5,
            0.0,
            1.0,
            10.0,
            0.0,
        )
        .unwrap();
        let (p_s, q, d) = isp_best_response_ad(&a, 0.0);
        assert_eq!(d, 0.0);
        assert_eq!(q, 0.0);
        assert!((p_s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn isp_best_response_monotone_in_investment() {
        let a = a1(10.0, 0.0);
        let mut prev = (0.0, 0.0);
        for i in 0..40 {
            let c = i as f64 * 5.0;
            let (p_s, q, _) = isp_best_response_ad(&a, c);
            assert!(p_s >= prev.0 - 1e-12);
            assert!(q >= prev.1 - 1e-12);
            prev = (p_s, q);
        }
    }

    #[test]
    fn best_investment_values() {
        let a = a1(10.0, 0.0);
        let c = cp_best_investment(&a, 16.6).unwrap();
        assert!((c - (10.0 * 1e7 / (1166.0_f64 * 1166.0) - 1.0)).abs() < 1e-9);
        // Marginal revenue at or below p_t + 1/K clamps to zero.
        let far = cp_best_investment(&a, 1e6).unwrap();
        assert_eq!(far, 0.0);
        let a = a1(10.0, 1.0);
        let c = cp_best_investment(&a, 20.5).unwrap();
        let expected = 10.0 * (1e7 / (1205.0_f64 * 1205.0) - 1.0) - 1.0;
        assert!((c - expected).abs() < 1e-9);
        assert!((c - 57.87).abs() < 0.01);
    }

    #[test]
    fn equilibrium_study_point() {
        let a = a1(10.0, 0.0);
        let out = solve_equilibrium_ad(&a, &SolveConfig::default()).unwrap();
        assert_eq!(out.regime, AdRegime::Interior);
        assert!((out.investment - 72.56065956296275).abs() < 1e-6);
        assert!((out.demand - 16.594265992564658).abs() < 1e-7);
        assert!((out.p_s - 2.659426599256465).abs() < 1e-7);
        assert!((out.q - 0.4148566498141163).abs() < 1e-7);
        assert!((out.p_a - 8.576751107672576).abs() < 1e-7);
        assert!((out.u_cp - 69.76422966977954).abs() < 1e-5);
        assert!((out.u_isp - 27.36486034330379).abs() < 1e-5);
        // Residuals of the fixed-point system vanish.
        let (gap, g_ps, g_q) = fixed_point_residuals(&a, &out);
        assert!(gap.abs() < 1e-8);
        assert!(g_ps.abs() < 1e-8);
        assert!(g_q.abs() < 1e-8);
        // The reported ad price clears the attention market at the
        // equilibrium demand.
        let implied = a.mb * a.dist.tail(out.p_a) / out.p_a;
        assert!((implied - out.demand).abs() < 1e-8 * (1.0 + out.demand));
    }

    #[test]
    fn equilibrium_side_payment_lowers_investment() {
        let a = a1(10.0, 1.0);
        let out = solve_equilibrium_ad(&a, &SolveConfig::default()).unwrap();
        assert!((out.investment - 57.8643847471587).abs() < 1e-6);
        assert!((out.demand - 20.504333255576583).abs() < 1e-7);
        assert!(out.investment < 72.56065956296275);
    }

    #[test]
    fn equilibrium_normal_distribution() {
        let a = a1_normal(10.0, 0.0);
        let out = solve_equilibrium_ad(&a, &SolveConfig::default()).unwrap();
        assert_eq!(out.regime, AdRegime::Interior);
        assert!((out.investment - 62.54455025010524).abs() < 1e-5);
        assert!((out.demand - 15.857817552951666).abs() < 1e-6);
        assert!((out.p_s - 2.5857817552951667).abs() < 1e-6);
        assert!((out.q - 0.39644543882379163).abs() < 1e-6);
        assert!((out.p_a - 7.379934301450276).abs() < 1e-6);
    }

    #[test]
    fn equilibrium_no_ad_money_means_no_investment() {
        let mut a = a1(10.0, 0.0);
        a.mb = 1e-6;
        let out = solve_equilibrium_ad(&a, &SolveConfig::default()).unwrap();
        assert_eq!(out.investment, 0.0);
        assert!(matches!(out.regime, AdRegime::ZeroInvestment | AdRegime::Both));
    }

    #[test]
    fn investment_monotone_in_side_payment() {
        let cfg = SolveConfig::default();
        let grid: Vec<f64> = (0..7).map(|i| i as f64 * 0.5).collect();
        for k in [10.0, 20.0, 30.0] {
            let rows = investment_monotonicity(&a1(k, 0.0), &grid, &cfg).unwrap();
            let mut reached_zero = false;
            for w in rows.windows(2) {
                assert!(w[1].1 <= w[0].1 + 1e-9, "K = {k}: {:?}", rows);
                if w[0].1 == 0.0 {
                    reached_zero = true;
                }
                if reached_zero {
                    assert_eq!(w[1].1, 0.0);
                }
            }
        }
    }

    #[test]
    fn concavity_uniform_and_calibration() {
        let a = a1(10.0, 0.0);
        let grid: Vec<f64> = (0..200).map(|i| 0.5 + i as f64).collect();
        let report = check_ad_concavity(&a, &grid).unwrap();
        assert!(report.is_concave());
        assert!(report.max_second_difference < 0.0);

        // Nearly constant y makes F nearly linear: second differences sit
        // at numerical zero, inside the tolerance.
        let flat = AdMarket::new(
            0.0,
            10.0,
            1e9,
            Dist::uniform(0.001).unwrap(),
            10.0,
            0.5,
            0.0,
            1.0,
            10.0,
            0.0,
        )
        .unwrap();
        let grid: Vec<f64> = (0..100).map(|i| 1.0 + i as f64).collect();
        let report = check_ad_concavity(&flat, &grid).unwrap();
        assert!(report.is_concave());
        assert!(report.max_second_difference.abs() < CONCAVITY_TOL);
    }

    #[test]
    fn concavity_normal_scan() {
        let a = a1_normal(10.0, 0.0);
        let grid: Vec<f64> = (0..500)
            .map(|i| 0.1 + i as f64 * (500.0 - 0.1) / 499.0)
            .collect();
        let report = check_ad_concavity(&a, &grid).unwrap();
        assert!(report.is_concave(), "max d2 = {}", report.max_second_difference);
    }

    #[test]
    fn fixed_point_kernel_on_investment_curves() {
        // The same study-point crossing expressed in investment space:
        // increasing ISP-induced demand versus decreasing CP demand.
        let cfg = SolveConfig::default();
        let isp_demand = |c: f64| 20.0 * (10.0 * (1.0 + c).ln() - 10.0) / 39.75;
        let cp_demand = |c: f64| 1000.0 / (1.0 + c).sqrt() - 100.0;
        let fp = fixed_point_monotone(isp_demand, cp_demand, 1.0, 500.0, &cfg).unwrap();
        match fp {
            FixedPoint::Crossing { x, .. } => assert!((x - 72.56065956296275).abs() < 1e-6),
            other => panic!("expected crossing, got {other:?}"),
        }
    }

    #[test]
    fn bisection_on_demand_residual() {
        // Residual between the two curves in demand space roots at the
        // equilibrium demand.
        let cfg = SolveConfig::default();
        let residual = |d: f64| {
            let cp = 10.0 * (1e7 / ((1000.0 + 10.0 * d) * (1000.0 + 10.0 * d))) - 1.0;
            let isp = ((d * 39.75 / 20.0 - 0.0 + 10.0 - 0.0) / 10.0_f64).exp() - 1.0;
            cp - isp
        };
        let sol = bisect_root(residual, 1e-9, 200.0, &cfg).unwrap();
        assert!((sol.root - 16.594265992564658).abs() < 1e-6);
    }

    #[test]
    fn uniqueness_across_brackets() {
        use rand::{Rng, SeedableRng};
        let a = a1(10.0, 0.0);
        let tau = 0.0;
        let det = 39.75;
        let curves = Curves { a: &a, tau, det };
        let cfg = SolveConfig::default();
        let d_star = 16.594265992564658;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let lo = rng.gen_range(1e-9..d_star * 0.9);
            let hi = rng.gen_range(d_star * 1.1..d_star * 10.0);
            let fp =
                fixed_point_monotone(|d| curves.isp(d), |d| curves.cp(d), lo, hi, &cfg).unwrap();
            match fp {
                FixedPoint::Crossing { x, .. } => {
                    assert!((x - d_star).abs() < 1e-6);
                    assert!((curves.cp(x) - 72.56065956296275).abs() < 1e-5);
                }
                other => panic!("expected crossing, got {other:?}"),
            }
        }
    }
}
