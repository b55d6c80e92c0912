//! Solver for the subscription-model price competition: the ISP sets the
//! pair `(p_s, q)`, the CP sets `p_c`, and both maximize profit given the
//! other's strategy.
//!
//! The equilibrium is unique under the concavity condition enforced at
//! market construction. [`solve_ne`] finds it in closed form by
//! enumerating the active constraint sets in a fixed order (interior
//! first, then the QoS cap, then the ISP price floor, then the CP price
//! floor, then zero demand) and verifying the stationarity and sign
//! conditions of every player before returning. [`solve_ne_iterative`]
//! reaches the same point by alternating best responses from a fixed
//! starting profile and serves as an independent cross-check.

use crate::model::{
    ModelError, SubscriptionMarket, SubscriptionOutcome, SubscriptionRegime,
};
use crate::numerics::SolveConfig;
use thiserror::Error;

/// Errors from the subscription-game solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    /// The market parameters violate a construction invariant.
    #[error(transparent)]
    InvalidMarket(#[from] ModelError),
    /// Best-response iteration did not settle within the sweep cap.
    #[error("best-response iteration did not converge after {iterations} sweeps")]
    NoConvergence { iterations: usize },
    /// A comparison that requires interior equilibria met a boundary one.
    #[error("equilibrium regime {regime} is outside the interior comparison")]
    RegimeMismatch { regime: SubscriptionRegime },
}

/// Demand below this level is reported as the zero-demand regime.
const ZERO_DEMAND_TOL: f64 = 1e-9;

/// Best response of the ISP to a CP price: the maximizer of the ISP
/// profit over `(p_s, q)`, clamping `p_s` at zero and `q` at the ceiling
/// and re-solving the remaining first-order condition after each clamp.
pub fn best_response_isp(m: &SubscriptionMarket, p_c: f64) -> (f64, f64) {
    let tau = (1.0 - m.delta) * m.p_t;
    let det = 4.0 * m.alpha * m.p_r - m.beta * m.beta;
    // Margin s = p_s + tau - p_r at the interior stationary point; the
    // implied demand there is alpha * s.
    let s = 2.0 * m.p_r * (m.d0 - m.alpha * m.rho * p_c + m.alpha * tau - m.alpha * m.p_r) / det;

    // Pricing demand down to zero with no QoS spending guarantees zero
    // profit; it is the ISP's outside option throughout.
    let choke = (((m.d0 - m.alpha * m.rho * p_c) / m.alpha).max(0.0), 0.0);
    if s <= 0.0 {
        return choke;
    }

    let mut p_s = s + m.p_r - tau;
    let mut q = m.beta * s / (2.0 * m.p_r);
    if q > m.q_max {
        q = m.q_max;
        p_s = (m.d0 - m.alpha * m.rho * p_c + m.beta * m.q_max + m.alpha * m.p_r
            - m.alpha * tau)
            / (2.0 * m.alpha);
    }
    if p_s < 0.0 {
        p_s = 0.0;
        q = (m.beta * (tau - m.p_r) / (2.0 * m.p_r)).clamp(0.0, m.q_max);
    }
    // The clamped-demand profit surface is concave only on the served
    // branch; a stationary point there can still lose to withdrawal.
    if m.isp_utility(p_s, p_c, q) < 0.0 {
        return choke;
    }
    (p_s, q)
}

/// Best response of the CP to an ISP strategy: the maximizer of the CP
/// revenue over `p_c`, clamped at zero.
pub fn best_response_cp(m: &SubscriptionMarket, p_s: f64, q: f64) -> f64 {
    let p_c = (m.d0 - m.alpha * p_s + m.beta * q + m.alpha * m.rho * m.p_t)
        / (2.0 * m.alpha * m.rho);
    p_c.max(0.0)
}

/// Which variables are pinned to a bound in an equilibrium candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ActiveSet {
    ps_floor: bool,
    pc_floor: bool,
    /// `None`: q free; `Some(true)`: q = q_max; `Some(false)`: q -> 0.
    q_bound: Option<bool>,
}

impl ActiveSet {
    const fn new(ps_floor: bool, pc_floor: bool, q_bound: Option<bool>) -> Self {
        Self {
            ps_floor,
            pc_floor,
            q_bound,
        }
    }
}

/// Candidate orderings follow the documented enumeration: interior, QoS
/// cap, ISP floor, CP floor, then the degenerate zero-QoS sets.
const CANDIDATES: [ActiveSet; 12] = [
    ActiveSet::new(false, false, None),
    ActiveSet::new(false, false, Some(true)),
    ActiveSet::new(true, false, None),
    ActiveSet::new(true, false, Some(true)),
    ActiveSet::new(false, true, None),
    ActiveSet::new(false, true, Some(true)),
    ActiveSet::new(true, true, None),
    ActiveSet::new(true, true, Some(true)),
    ActiveSet::new(false, false, Some(false)),
    ActiveSet::new(true, false, Some(false)),
    ActiveSet::new(false, true, Some(false)),
    ActiveSet::new(true, true, Some(false)),
];

/// Solve the 3x3 linear system of the candidate's stationarity equations.
/// Returns `(p_s, p_c, q)` or `None` when the system is singular.
fn solve_active_set(m: &SubscriptionMarket, set: ActiveSet) -> Option<(f64, f64, f64)> {
    let tau = (1.0 - m.delta) * m.p_t;
    // Rows over unknowns x = (p_s, p_c, q).
    let mut a = [[0.0f64; 3]; 3];
    let mut b = [0.0f64; 3];

    if set.ps_floor {
        a[0] = [1.0, 0.0, 0.0];
        b[0] = 0.0;
    } else {
        // demand = alpha * (p_s + tau - p_r)
        a[0] = [-2.0 * m.alpha, -m.alpha * m.rho, m.beta];
        b[0] = m.alpha * (tau - m.p_r) - m.d0;
    }
    match set.q_bound {
        None => {
            // beta * (p_s + tau - p_r) = 2 p_r q
            a[1] = [m.beta, 0.0, -2.0 * m.p_r];
            b[1] = m.beta * (m.p_r - tau);
        }
        Some(at_max) => {
            a[1] = [0.0, 0.0, 1.0];
            b[1] = if at_max { m.q_max } else { 0.0 };
        }
    }
    if set.pc_floor {
        a[2] = [0.0, 1.0, 0.0];
        b[2] = 0.0;
    } else {
        // demand = alpha * rho * (p_c - p_t)
        a[2] = [-m.alpha, -2.0 * m.alpha * m.rho, m.beta];
        b[2] = -m.d0 - m.alpha * m.rho * m.p_t;
    }
    solve3(a, b)
}

/// Gaussian elimination with partial pivoting for a 3x3 system.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<(f64, f64, f64)> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
        })?;
        if a[pivot][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let x2 = b[2] / a[2][2];
    let x1 = (b[1] - a[1][2] * x2) / a[1][1];
    let x0 = (b[0] - a[0][1] * x1 - a[0][2] * x2) / a[0][0];
    Some((x0, x1, x2))
}

/// Stationarity/sign verification of an equilibrium candidate: each
/// player's first-order condition must vanish on free coordinates and
/// point into the feasible set on bound ones.
fn verify_ne(m: &SubscriptionMarket, p_s: f64, p_c: f64, q: f64) -> bool {
    let tau = (1.0 - m.delta) * m.p_t;
    let scale = 1.0 + m.d0 + m.alpha * (1.0 + m.p_t.abs() + m.p_r);
    let tol = 1e-8 * scale;
    let edge = 1e-9 * (1.0 + m.q_max);

    if !(p_s >= -tol && p_c >= -tol && q >= -edge && q <= m.q_max + edge) {
        return false;
    }
    let demand = m.demand_unclamped(p_s, p_c, q);
    if demand < -tol {
        return false;
    }

    let g_ps = demand - m.alpha * (p_s + tau - m.p_r);
    let ok_ps = if p_s > tol { g_ps.abs() <= tol } else { g_ps <= tol };

    let g_q = m.beta * (p_s + tau - m.p_r) - 2.0 * m.p_r * q;
    let ok_q = if q <= edge {
        g_q <= tol
    } else if q >= m.q_max - edge {
        g_q >= -tol
    } else {
        g_q.abs() <= tol
    };

    let g_pc = demand - m.alpha * m.rho * (p_c - m.p_t);
    let ok_pc = if p_c > tol { g_pc.abs() <= tol } else { g_pc <= tol };

    // Participation: withdrawal (choking demand at zero QoS) guarantees
    // each player zero profit, so no stationary point with a negative
    // payoff survives as an equilibrium.
    let participation = m.isp_utility(p_s.max(0.0), p_c.max(0.0), q.clamp(0.0, m.q_max)) >= -tol
        && m.cp_utility(p_s.max(0.0), p_c.max(0.0), q.clamp(0.0, m.q_max)) >= -tol;

    ok_ps && ok_q && ok_pc && participation
}

fn classify(m: &SubscriptionMarket, p_s: f64, p_c: f64, q: f64, demand: f64) -> SubscriptionRegime {
    let tol = 1e-9 * (1.0 + m.d0);
    if demand <= ZERO_DEMAND_TOL * (1.0 + m.d0) {
        SubscriptionRegime::ZeroDemand
    } else if p_s <= tol {
        SubscriptionRegime::IspPriceFloor
    } else if p_c <= tol {
        SubscriptionRegime::CpPriceFloor
    } else if q >= m.q_max - tol {
        SubscriptionRegime::QosCapped
    } else {
        SubscriptionRegime::Interior
    }
}

fn outcome_at(
    m: &SubscriptionMarket,
    p_s: f64,
    p_c: f64,
    q: f64,
    iterations: usize,
) -> SubscriptionOutcome {
    let p_s = p_s.max(0.0);
    let p_c = p_c.max(0.0);
    let q = q.clamp(0.0, m.q_max);
    let demand = m.demand(p_s, p_c, q);
    SubscriptionOutcome {
        p_s,
        p_c,
        q,
        demand,
        u_isp: m.isp_utility(p_s, p_c, q),
        u_cp: m.cp_utility(p_s, p_c, q),
        regime: classify(m, p_s, p_c, q, demand),
        iterations,
    }
}

/// Unique Nash equilibrium of the price competition, found in closed form.
///
/// The interior solution is
/// `q* = beta k / (6 alpha p_r - beta^2)` with
/// `k = D0 - alpha p_r + alpha p_t (1 - rho - delta)`, and the matching
/// prices and demand; boundary cases re-solve the remaining stationarity
/// conditions with the binding variables pinned. Every returned tuple has
/// been verified against all three players' optimality conditions.
pub fn solve_ne(m: &SubscriptionMarket) -> Result<SubscriptionOutcome, GameError> {
    m.validate()?;
    for set in CANDIDATES {
        let Some((p_s, p_c, q)) = solve_active_set(m, set) else {
            continue;
        };
        if verify_ne(m, p_s, p_c, q) {
            return Ok(outcome_at(m, p_s, p_c, q, 0));
        }
    }
    // No candidate sustains positive demand: the market is degenerate and
    // zero-demand profiles form a continuum of mutual best responses.
    // Report a canonical one: the CP sits at max{0, p_t}, the ISP prices
    // demand down to the clearing boundary with no QoS spending.
    let p_c = m.p_t.max(0.0);
    let p_s = ((m.d0 - m.alpha * m.rho * p_c) / m.alpha).max(0.0);
    let mut out = outcome_at(m, p_s, p_c, 0.0, 0);
    out.regime = SubscriptionRegime::ZeroDemand;
    Ok(out)
}

/// Independent equilibrium oracle: alternate best responses from the
/// fixed starting profile `(p_s, p_c, q) = (p_r, p_r, q_max / 2)` until
/// successive strategies move less than `cfg.abs_tol`.
///
/// Uniqueness of the equilibrium makes the starting point immaterial; it
/// is fixed for determinism. Agrees with [`solve_ne`] wherever the
/// best-response dynamics contract.
pub fn solve_ne_iterative(
    m: &SubscriptionMarket,
    cfg: &SolveConfig,
) -> Result<SubscriptionOutcome, GameError> {
    m.validate()?;
    let mut p_c = m.p_r;
    let (mut p_s, mut q) = (m.p_r, m.q_max / 2.0);
    for sweep in 1..=cfg.max_iter {
        let (next_ps, next_q) = best_response_isp(m, p_c);
        let next_pc = best_response_cp(m, next_ps, next_q);
        let step = (next_ps - p_s)
            .abs()
            .max((next_q - q).abs())
            .max((next_pc - p_c).abs());
        p_s = next_ps;
        q = next_q;
        p_c = next_pc;
        if step < cfg.abs_tol {
            return Ok(outcome_at(m, p_s, p_c, q, sweep));
        }
    }
    Err(GameError::NoConvergence {
        iterations: cfg.max_iter,
    })
}

/// Direction in which a positive side payment moves the equilibrium QoS.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QosShift {
    Improved,
    Degraded,
    Unaffected,
}

/// Sign law for the side payment's effect on QoS: the shift of `q*`
/// relative to the `p_t = 0` equilibrium has the sign of
/// `1 - rho - delta`.
///
/// The sign is read off the parameters; both equilibria (at `m.p_t` and
/// at zero) are solved and must be interior, otherwise
/// [`GameError::RegimeMismatch`] is returned.
pub fn qos_shift_sign(m: &SubscriptionMarket) -> Result<QosShift, GameError> {
    let at_pt = solve_ne(m)?;
    if at_pt.regime != SubscriptionRegime::Interior {
        return Err(GameError::RegimeMismatch { regime: at_pt.regime });
    }
    let at_zero = solve_ne(&m.with_p_t(0.0))?;
    if at_zero.regime != SubscriptionRegime::Interior {
        return Err(GameError::RegimeMismatch {
            regime: at_zero.regime,
        });
    }
    let sign = 1.0 - m.rho - m.delta;
    let shift = if sign > 1e-12 {
        QosShift::Improved
    } else if sign < -1e-12 {
        QosShift::Degraded
    } else {
        QosShift::Unaffected
    };
    debug_assert!({
        let dq = at_pt.q - at_zero.q;
        match shift {
            QosShift::Improved => m.p_t <= 0.0 || dq > 0.0,
            QosShift::Degraded => m.p_t <= 0.0 || dq < 0.0,
            QosShift::Unaffected => dq.abs() < 1e-9 * (1.0 + at_zero.q),
        }
    });
    Ok(shift)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s1(rho: f64, p_t: f64) -> SubscriptionMarket {
        SubscriptionMarket::new(200.0, 10.0, 0.5, rho, 0.0, 1.0, 10.0, p_t).unwrap()
    }

    #[test]
    fn ne_closed_form_study_point() {
        let out = solve_ne(&s1(0.5, 0.0)).unwrap();
        assert_eq!(out.regime, SubscriptionRegime::Interior);
        assert!((out.p_s - 7.359832635983263).abs() < 1e-9);
        assert!((out.p_c - 12.719665271966527).abs() < 1e-9);
        assert!((out.q - 1.5899581589958158).abs() < 1e-9);
        assert!((out.demand - 63.59832635983263).abs() < 1e-9);
        assert!((out.u_cp - 808.9494231543564).abs() < 1e-6);
        assert!((out.u_isp - 401.94674462982084).abs() < 1e-6);
    }

    #[test]
    fn interior_ne_zeroes_all_stationarity_conditions() {
        for (rho, p_t) in [(0.5, 0.0), (0.5, 2.0), (1.5, 1.0), (1.0, -0.5)] {
            let m = s1(rho, p_t);
            let out = solve_ne(&m).unwrap();
            assert_eq!(out.regime, SubscriptionRegime::Interior);
            let g_ps = out.demand - m.alpha * (out.p_s + m.p_t - m.p_r);
            let g_q = m.beta * (out.p_s + m.p_t - m.p_r) - 2.0 * m.p_r * out.q;
            let g_pc = out.demand - m.alpha * m.rho * (out.p_c - m.p_t);
            assert!(g_ps.abs() < 1e-8, "rho={rho} p_t={p_t}: g_ps={g_ps:e}");
            assert!(g_q.abs() < 1e-8, "rho={rho} p_t={p_t}: g_q={g_q:e}");
            assert!(g_pc.abs() < 1e-8, "rho={rho} p_t={p_t}: g_pc={g_pc:e}");
        }
    }

    #[test]
    fn ne_side_payment_improves_qos_when_rho_low() {
        let out = solve_ne(&s1(0.5, 2.0)).unwrap();
        assert!((out.p_s - 5.694560669456067).abs() < 1e-9);
        assert!((out.p_c - 15.389121338912133).abs() < 1e-9);
        assert!((out.q - 1.6736401673640167).abs() < 1e-9);
        assert!((out.demand - 66.94560669456067).abs() < 1e-9);
        // q rose versus p_t = 0.
        assert!(out.q > 1.5899581589958158);
    }

    #[test]
    fn ne_qos_invariant_at_unit_rho() {
        for p_t in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            let out = solve_ne(&s1(1.0, p_t)).unwrap();
            assert!((out.q - 1.5899581589958158).abs() < 1e-9);
        }
    }

    #[test]
    fn iterative_matches_closed_form() {
        let cfg = SolveConfig::default();
        for rho in [0.5, 1.0, 1.5] {
            for p_t in [0.0, 2.0, -1.0] {
                let m = s1(rho, p_t);
                let a = solve_ne(&m).unwrap();
                let b = solve_ne_iterative(&m, &cfg).unwrap();
                assert!((a.p_s - b.p_s).abs() < 1e-8, "p_s rho={rho} p_t={p_t}");
                assert!((a.p_c - b.p_c).abs() < 1e-8, "p_c rho={rho} p_t={p_t}");
                assert!((a.q - b.q).abs() < 1e-8, "q rho={rho} p_t={p_t}");
                assert!(b.iterations > 0);
            }
        }
    }

    #[test]
    fn iterative_rho_high_matches_and_utilities_differ() {
        let cfg = SolveConfig::default();
        let lo = solve_ne_iterative(&s1(0.5, 0.0), &cfg).unwrap();
        let hi = solve_ne_iterative(&s1(1.5, 0.0), &cfg).unwrap();
        // Same QoS at p_t = 0 regardless of rho, different CP utility.
        assert!((hi.q - 1.5899581589958158).abs() < 1e-8);
        assert!((lo.q - hi.q).abs() < 1e-8);
        assert!((hi.u_cp - lo.u_cp).abs() > 100.0);
    }

    #[test]
    fn degenerate_market_reports_zero_demand() {
        // D0 = alpha * p_r makes the interior demand vanish at p_t = 0.
        let m = SubscriptionMarket::new(10.0, 10.0, 0.5, 0.5, 0.0, 1.0, 10.0, 0.0).unwrap();
        let out = solve_ne(&m).unwrap();
        assert_eq!(out.regime, SubscriptionRegime::ZeroDemand);
        assert!(out.demand <= 1e-9);
        let it = solve_ne_iterative(&m, &SolveConfig::default()).unwrap();
        assert_eq!(it.regime, SubscriptionRegime::ZeroDemand);
    }

    #[test]
    fn isp_best_response_consistency_at_ne() {
        let m = s1(0.5, 0.0);
        let (p_s, q) = best_response_isp(&m, 12.719665271966527);
        assert!((p_s - 7.359832635983263).abs() < 1e-9);
        assert!((q - 1.5899581589958158).abs() < 1e-9);
    }

    #[test]
    fn isp_best_response_no_market() {
        let m = SubscriptionMarket::new(0.0, 10.0, 0.5, 0.5, 0.0, 1.0, 10.0, 0.0).unwrap();
        let (p_s, q) = best_response_isp(&m, 3.0);
        assert_eq!(q, 0.0);
        // The returned price clears demand at zero.
        assert!(m.demand(p_s, 3.0, q) <= 0.0 + 1e-12);
    }

    #[test]
    fn isp_best_response_price_floor_under_huge_side_payment() {
        let m = s1(0.5, 60.0);
        let (p_s, q) = best_response_isp(&m, 40.0);
        assert_eq!(p_s, 0.0);
        let q_expected = (m.beta * (m.p_t - m.p_r) / (2.0 * m.p_r)).clamp(0.0, m.q_max);
        assert!((q - q_expected).abs() < 1e-12);
        // Grid search confirms no profitable deviation for the ISP.
        let u_star = m.isp_utility(p_s, 40.0, q);
        let mut best = f64::NEG_INFINITY;
        for i in 0..=200 {
            for j in 0..=200 {
                let cand_ps = i as f64 * 0.05;
                let cand_q = j as f64 * (m.q_max / 200.0);
                best = best.max(m.isp_utility(cand_ps, 40.0, cand_q));
            }
        }
        assert!(best <= u_star + 1e-6 * (1.0 + u_star.abs()));
    }

    #[test]
    fn cp_best_response_examples() {
        let m = s1(0.5, 0.0);
        let p_c = best_response_cp(&m, 7.359832635983263, 1.5899581589958158);
        assert!((p_c - 12.719665271966527).abs() < 1e-9);
        // Interior responses satisfy demand = alpha rho (p_c - p_t).
        let d = m.demand(7.359832635983263, p_c, 1.5899581589958158);
        assert!((d - m.alpha * m.rho * (p_c - m.p_t)).abs() < 1e-8);
        // Large negative side payment with rho > 1 floors the CP price.
        let m = s1(1.5, -40.0);
        assert_eq!(best_response_cp(&m, 1.0, 1.0), 0.0);
    }

    #[test]
    fn qos_shift_sign_matches_parameters() {
        assert_eq!(qos_shift_sign(&s1(0.5, 2.0)).unwrap(), QosShift::Improved);
        assert_eq!(qos_shift_sign(&s1(1.5, 2.0)).unwrap(), QosShift::Degraded);
        let m = SubscriptionMarket::new(200.0, 10.0, 0.5, 0.5, 0.5, 1.0, 10.0, 2.0).unwrap();
        assert_eq!(qos_shift_sign(&m).unwrap(), QosShift::Unaffected);
    }

    #[test]
    fn qos_shift_sign_rejects_boundary_equilibria() {
        // A huge side payment pushes the equilibrium onto the ISP price
        // floor, which the sign law does not cover.
        let err = qos_shift_sign(&s1(0.5, 30.0)).unwrap_err();
        assert!(matches!(err, GameError::RegimeMismatch { .. }));
    }

    #[test]
    fn qmax_cap_branch_solves_fixed_qos_game() {
        // A low ceiling forces the cap; prices then solve the fixed-QoS
        // competition.
        let m = SubscriptionMarket::new(200.0, 10.0, 0.5, 0.5, 0.0, 1.0, 1.0, 0.0).unwrap();
        let out = solve_ne(&m).unwrap();
        assert_eq!(out.regime, SubscriptionRegime::QosCapped);
        assert_eq!(out.q, 1.0);
        let e = m.d0 + m.beta * m.q_max - m.alpha * m.p_r;
        let p_c = e / (3.0 * m.alpha * m.rho);
        let p_s = e / (3.0 * m.alpha) + m.p_r;
        assert!((out.p_c - p_c).abs() < 1e-9);
        assert!((out.p_s - p_s).abs() < 1e-9);
    }

    #[test]
    fn ne_candidates_agree_with_iterative_on_boundaries() {
        let cfg = SolveConfig::default();
        // ISP floor (large p_t), CP floor (negative p_t, rho > 1): both
        // keep demand strictly positive.
        for m in [s1(0.5, 30.0), s1(1.5, -6.0)] {
            let a = solve_ne(&m).unwrap();
            let b = solve_ne_iterative(&m, &cfg).unwrap();
            assert_eq!(a.regime, b.regime);
            assert!((a.p_s - b.p_s).abs() < 1e-7);
            assert!((a.p_c - b.p_c).abs() < 1e-7);
            assert!((a.q - b.q).abs() < 1e-7);
        }
    }
}
