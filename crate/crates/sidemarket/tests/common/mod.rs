//! Shared random-market generators for the test suites.

use rand::Rng;
use sidemarket::{solve_ne, SubscriptionMarket, SubscriptionRegime};

/// Log-uniform draw on `[lo, hi]`.
pub fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo * (rng.gen::<f64>() * (hi / lo).ln()).exp()
}

/// Random valid subscription market in sensible ranges.
///
/// The QoS sensitivity is drawn as a fraction of `sqrt(alpha p_r)` capped
/// at 1.7, which keeps a margin inside the concavity bound
/// `beta^2 < 4 alpha p_r` and, because plain best-response iteration
/// contracts only while `beta^2 < (10/3) alpha p_r`, also keeps the
/// iterative oracle convergent.
pub fn draw_market<R: Rng>(rng: &mut R) -> SubscriptionMarket {
    let alpha = log_uniform(rng, 1.0, 30.0);
    let p_r = log_uniform(rng, 0.2, 5.0);
    let beta = log_uniform(rng, 0.05, 1.7) * (alpha * p_r).sqrt();
    let rho = log_uniform(rng, 0.2, 3.0);
    let delta = if rng.gen_bool(0.5) {
        0.0
    } else {
        rng.gen_range(0.0..0.8)
    };
    let d0 = log_uniform(rng, 20.0, 1000.0);
    let q_max = rng.gen_range(1.0..20.0);
    let p_t = rng.gen_range(-1.0..3.0);
    SubscriptionMarket::new(d0, alpha, beta, rho, delta, p_r, q_max, p_t).unwrap()
}

/// Random market whose equilibrium sustains positive demand.
pub fn draw_active_market<R: Rng>(rng: &mut R) -> SubscriptionMarket {
    loop {
        let m = draw_market(rng);
        if let Ok(out) = solve_ne(&m) {
            if out.regime != SubscriptionRegime::ZeroDemand && out.demand > 1e-6 {
                return m;
            }
        }
    }
}
