//! One-dimensional numerical kernels shared by every solver in this crate:
//! bracketed bisection, golden-section maximization, Gaussian tail
//! integration, and monotone fixed-point solving.
//!
//! Every routine is a pure function of its arguments and is deterministic,
//! so solvers built on top of them can be evaluated concurrently without
//! coordination.

use thiserror::Error;

/// Golden-section ratio constant: 1/phi = (sqrt(5) - 1) / 2.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Errors reported by the scalar kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    /// The supplied interval does not bracket a sign change.
    #[error("no sign change bracketed on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
    /// The iteration cap was reached before the tolerance was met.
    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },
    /// A sampled monotonicity precondition failed.
    #[error("monotonicity violated near x = {at}")]
    MonotonicityViolation { at: f64 },
}

/// Tolerances and iteration limits shared by the kernels.
///
/// The defaults (absolute tolerance `1e-10`, 200 iterations) are tight
/// enough that solver error never aliases with the looser comparison
/// tolerances used in tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    /// Absolute tolerance on the abscissa.
    pub abs_tol: f64,
    /// Iteration cap.
    pub max_iter: usize,
    /// Geometric expansion factor used by callers that auto-bracket.
    pub bracket_expand: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            max_iter: 200,
            bracket_expand: 2.0,
        }
    }
}

impl SolveConfig {
    /// Config with a custom absolute tolerance, keeping the other defaults.
    pub fn with_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }
}

/// Maximum number of geometric expansions before a caller gives up on
/// finding a bracket.
pub const MAX_BRACKET_EXPANSIONS: usize = 60;

/// A bracketed root together with the number of halvings it took.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bisection {
    pub root: f64,
    pub iterations: usize,
}

/// Bisect a continuous function on `[lo, hi]` down to `cfg.abs_tol`.
///
/// Requires `f(lo)` and `f(hi)` to have opposite signs (or one of them to
/// be exactly zero). The returned root is always inside the initial
/// interval and the interval halves at every step, so the result is
/// deterministic.
pub fn bisect_root<F>(f: F, lo: f64, hi: f64, cfg: &SolveConfig) -> Result<Bisection, SolveError>
where
    F: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = (lo, hi);
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(Bisection {
            root: lo,
            iterations: 0,
        });
    }
    if f_hi == 0.0 {
        return Ok(Bisection {
            root: hi,
            iterations: 0,
        });
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(SolveError::NoBracket { lo, hi });
    }
    for iterations in 1..=cfg.max_iter {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 || hi - lo <= cfg.abs_tol {
            return Ok(Bisection {
                root: mid,
                iterations,
            });
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Err(SolveError::NoConvergence {
        iterations: cfg.max_iter,
    })
}

/// The argmax/max pair located by [`golden_max`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub argmax: f64,
    pub max: f64,
    pub iterations: usize,
}

/// Golden-section search for the maximum of a unimodal function on
/// `[lo, hi]`.
///
/// The interval shrinks by the golden ratio each step; for a unimodal `f`
/// the returned abscissa is within `cfg.abs_tol` of the true maximizer.
/// Near a smooth maximum the bracketing comparisons lose meaning once the
/// interval drops below roughly `sqrt(machine epsilon)` times the
/// argument scale, so tolerances beyond that resolve no further.
pub fn golden_max<F>(f: F, lo: f64, hi: f64, cfg: &SolveConfig) -> Result<Maximum, SolveError>
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for iterations in 1..=cfg.max_iter {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        if b - a <= cfg.abs_tol {
            let argmax = 0.5 * (a + b);
            return Ok(Maximum {
                argmax,
                max: f(argmax),
                iterations,
            });
        }
    }
    Err(SolveError::NoConvergence {
        iterations: cfg.max_iter,
    })
}

/// Unnormalized Gaussian upper tail integral
/// `∫_p^∞ exp(-(t-mu)^2 / (2 sigma^2)) dt`.
///
/// Evaluated through the complementary error function, which keeps the
/// relative error below `1e-12` even deep in the tail where naive
/// quadrature of `1 - CDF` would cancel catastrophically. Equals
/// `sqrt(2 pi sigma^2) * (1 - X(p))` for the normal CDF `X`.
pub fn gaussian_upper_integral(mu: f64, sigma: f64, p: f64) -> f64 {
    debug_assert!(sigma > 0.0);
    let z = (p - mu) / (sigma * core::f64::consts::SQRT_2);
    sigma * (core::f64::consts::PI / 2.0).sqrt() * libm::erfc(z)
}

/// Lower counterpart of [`gaussian_upper_integral`]; the two always sum to
/// the full mass `sqrt(2 pi sigma^2)`.
pub fn gaussian_lower_integral(mu: f64, sigma: f64, p: f64) -> f64 {
    debug_assert!(sigma > 0.0);
    let z = (mu - p) / (sigma * core::f64::consts::SQRT_2);
    sigma * (core::f64::consts::PI / 2.0).sqrt() * libm::erfc(z)
}

/// Outcome of a monotone fixed-point solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FixedPoint {
    /// The two curves cross at `x`.
    Crossing { x: f64, iterations: usize },
    /// The nondecreasing curve lies above the nonincreasing one on the
    /// whole interval; there is no crossing.
    IncreasingDominates,
    /// The nonincreasing curve lies above the nondecreasing one on the
    /// whole interval; there is no crossing.
    DecreasingDominates,
}

/// Locate the unique crossing of a nondecreasing and a nonincreasing curve
/// on `[lo, hi]`.
///
/// When the difference `increasing - decreasing` changes sign on the
/// interval the crossing is bisected to `cfg.abs_tol`; otherwise the
/// dominant side is reported so callers can pick the matching boundary
/// regime. Monotonicity of both curves is checked on a coarse sample
/// before solving.
pub fn fixed_point_monotone<F, G>(
    increasing: F,
    decreasing: G,
    lo: f64,
    hi: f64,
    cfg: &SolveConfig,
) -> Result<FixedPoint, SolveError>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    const SAMPLES: usize = 17;
    let step = (hi - lo) / (SAMPLES - 1) as f64;
    let mut prev_inc = increasing(lo);
    let mut prev_dec = decreasing(lo);
    let mut scale = 1.0 + prev_inc.abs().max(prev_dec.abs());
    for i in 1..SAMPLES {
        let x = lo + step * i as f64;
        let (inc, dec) = (increasing(x), decreasing(x));
        scale = scale.max(inc.abs()).max(dec.abs());
        let slack = 1e-9 * scale;
        if inc < prev_inc - slack || dec > prev_dec + slack {
            return Err(SolveError::MonotonicityViolation { at: x });
        }
        prev_inc = inc;
        prev_dec = dec;
    }

    let diff = |x: f64| increasing(x) - decreasing(x);
    let d_lo = diff(lo);
    let d_hi = diff(hi);
    if d_lo > 0.0 {
        return Ok(FixedPoint::IncreasingDominates);
    }
    if d_hi < 0.0 {
        return Ok(FixedPoint::DecreasingDominates);
    }
    let sol = bisect_root(diff, lo, hi, cfg)?;
    Ok(FixedPoint::Crossing {
        x: sol.root,
        iterations: sol.iterations,
    })
}
