//! Named verification suites: each re-derives a family of model
//! properties at runtime and prints one `[PASS]`/`[FAIL]` line per check.

use sidemarket::{
    check_ad_concavity, golden_max, nash_log_objective, optimal_ad_price, post_bargain_subscription,
    pre_bargain_ad, pre_bargain_subscription, qos_shift_sign, solve_equilibrium_ad, solve_ne,
    solve_ne_iterative, AdMarket, QosShift, SolveConfig, SubscriptionMarket,
    SubscriptionRegime, ValuationDistribution,
};

/// One verification check with its printable detail.
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

/// All suite names, in the order `all` runs them.
pub const SUITES: &[&str] = &[
    "kernels",
    "ne",
    "lemma4",
    "lemma5",
    "lemma6",
    "lemma7",
    "price-trends",
    "bargain-trends",
    "prebargain",
    "postbargain",
    "adeq",
];

fn s1(rho: f64, delta: f64, p_t: f64) -> SubscriptionMarket {
    SubscriptionMarket::new(200.0, 10.0, 0.5, rho, delta, 1.0, 10.0, p_t).unwrap()
}

fn a1(k: f64, p_t: f64) -> AdMarket {
    AdMarket::new(
        0.0,
        k,
        1000.0,
        ValuationDistribution::uniform(10.0).unwrap(),
        10.0,
        0.5,
        0.0,
        1.0,
        10.0,
        p_t,
    )
    .unwrap()
}

/// Small deterministic generator (splitmix64) so the `ne` suite needs no
/// extra dependencies.
struct SplitMix(u64);

impl SplitMix {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    fn log_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo * (self.unit() * (hi / lo).ln()).exp()
    }
}

fn draw_market(rng: &mut SplitMix) -> SubscriptionMarket {
    let alpha = rng.log_range(1.0, 30.0);
    let p_r = rng.log_range(0.2, 5.0);
    let beta = rng.log_range(0.05, 1.7) * (alpha * p_r).sqrt();
    let rho = rng.log_range(0.2, 3.0);
    let delta = if rng.unit() < 0.5 {
        0.0
    } else {
        rng.range(0.0, 0.8)
    };
    let d0 = rng.log_range(20.0, 1000.0);
    let q_max = rng.range(1.0, 20.0);
    let p_t = rng.range(-1.0, 3.0);
    SubscriptionMarket::new(d0, alpha, beta, rho, delta, p_r, q_max, p_t).unwrap()
}

fn suite_kernels(cfg: &SolveConfig) -> Vec<Check> {
    let mut checks = Vec::new();
    let full = (2.0 * std::f64::consts::PI * 4.0).sqrt();
    let upper = sidemarket::gaussian_upper_integral(5.0, 2.0, 5.0);
    checks.push(Check::new(
        "gaussian-half-mass",
        (upper - 0.5 * full).abs() / (0.5 * full) < 1e-10,
        format!("integral {upper:.12} vs {:.12}", 0.5 * full),
    ));
    let r = sidemarket::bisect_root(|x| x * x - 2.0, 0.0, 2.0, cfg);
    let pass = r
        .as_ref()
        .map(|b| (b.root - std::f64::consts::SQRT_2).abs() <= cfg.abs_tol)
        .unwrap_or(false);
    checks.push(Check::new(
        "bisect-sqrt2",
        pass,
        format!("{:?}", r.map(|b| b.root)),
    ));
    let gcfg = SolveConfig::with_tol(cfg.abs_tol.max(1e-7));
    let m = golden_max(|x| -(x - 3.0) * (x - 3.0), 0.0, 10.0, &gcfg);
    let pass = m
        .as_ref()
        .map(|m| (m.argmax - 3.0).abs() <= gcfg.abs_tol)
        .unwrap_or(false);
    checks.push(Check::new(
        "golden-quadratic",
        pass,
        format!("{:?}", m.map(|m| m.argmax)),
    ));
    checks
}

fn suite_ne(cfg: &SolveConfig) -> Vec<Check> {
    let mut rng = SplitMix(0x5eed_cafe);
    let mut worst = 0.0f64;
    let mut failures = 0usize;
    let mut tried = 0usize;
    while tried < 200 {
        let m = draw_market(&mut rng);
        let Ok(closed) = solve_ne(&m) else { continue };
        if closed.regime == SubscriptionRegime::ZeroDemand {
            continue;
        }
        tried += 1;
        match solve_ne_iterative(&m, cfg) {
            Ok(iter) => {
                let diff = (closed.p_s - iter.p_s)
                    .abs()
                    .max((closed.p_c - iter.p_c).abs())
                    .max((closed.q - iter.q).abs());
                worst = worst.max(diff);
                if diff > 1e-6 {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    vec![Check::new(
        "closed-vs-iterative",
        failures == 0,
        format!("200 random markets, worst strategy gap {worst:.3e}, {failures} failures"),
    )]
}

fn suite_lemma4(_cfg: &SolveConfig) -> Vec<Check> {
    let mut checks = Vec::new();
    for rho in [0.5, 1.0, 1.5] {
        for delta in [0.0, 0.25, 0.5] {
            let m = s1(rho, delta, 1.0);
            let expected = 1.0 - rho - delta;
            let (pass, detail) = match qos_shift_sign(&m) {
                Ok(shift) => {
                    let q0 = solve_ne(&m.with_p_t(0.0)).unwrap().q;
                    let q1 = solve_ne(&m).unwrap().q;
                    let ok = match shift {
                        QosShift::Improved => expected > 0.0 && q1 > q0,
                        QosShift::Degraded => expected < 0.0 && q1 < q0,
                        QosShift::Unaffected => {
                            expected.abs() < 1e-9 && (q1 - q0).abs() < 1e-9
                        }
                    };
                    (ok, format!("{shift:?}, dq = {:+.5}", q1 - q0))
                }
                Err(e) => (false, format!("solver error: {e}")),
            };
            checks.push(Check::new(
                format!("sign(rho={rho},delta={delta})"),
                pass,
                detail,
            ));
        }
    }
    checks
}

fn suite_lemma5(_cfg: &SolveConfig) -> Vec<Check> {
    let a = a1(10.0, 0.0);
    let mut prev = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut pass = true;
    for i in 0..50 {
        let c = 4.0 * i as f64;
        let (p_s, q, _) = sidemarket::isp_best_response_ad(&a, c);
        if p_s < prev.0 - 1e-12 || q < prev.1 - 1e-12 {
            pass = false;
        }
        prev = (p_s, q);
    }
    vec![Check::new(
        "isp-response-monotone-in-investment",
        pass,
        "price and QoS nondecreasing over 50 investment levels",
    )]
}

fn suite_lemma6(cfg: &SolveConfig) -> Vec<Check> {
    let mut checks = Vec::new();
    for k in [10.0, 20.0, 30.0] {
        let mut row = Vec::new();
        let mut pass = true;
        let mut prev = f64::INFINITY;
        let mut clamped = false;
        for i in 0..7 {
            let p_t = 0.5 * i as f64;
            match solve_equilibrium_ad(&a1(k, p_t), cfg) {
                Ok(out) => {
                    let c = out.investment;
                    if clamped && c != 0.0 {
                        pass = false;
                    }
                    if c == 0.0 {
                        clamped = true;
                    } else if c >= prev {
                        pass = false;
                    }
                    prev = c;
                    row.push(format!("{c:.4}"));
                }
                Err(e) => {
                    pass = false;
                    row.push(format!("error({e})"));
                }
            }
        }
        checks.push(Check::new(
            format!("investment-nonincreasing(K={k})"),
            pass,
            format!("c* over p_t 0..3: [{}]", row.join(", ")),
        ));
    }
    checks
}

fn suite_lemma7(_cfg: &SolveConfig) -> Vec<Check> {
    let normal = AdMarket::new(
        0.0,
        10.0,
        1000.0,
        ValuationDistribution::normal(5.0, 2.0).unwrap(),
        10.0,
        0.5,
        0.0,
        1.0,
        10.0,
        0.0,
    )
    .unwrap();
    let grid: Vec<f64> = (0..500)
        .map(|i| 0.1 + i as f64 * (500.0 - 0.1) / 499.0)
        .collect();
    let mut checks = Vec::new();
    match check_ad_concavity(&normal, &grid) {
        Ok(report) => checks.push(Check::new(
            "normal-revenue-concave",
            report.is_concave(),
            format!("max second difference {:.3e}", report.max_second_difference),
        )),
        Err(e) => checks.push(Check::new("normal-revenue-concave", false, e.to_string())),
    }
    let uniform = a1(10.0, 0.0);
    let mut worst = 0.0f64;
    for &d in &grid {
        let f = optimal_ad_price(&uniform, d).unwrap() * d;
        let analytic = 1000.0 * 10.0 * d / (1000.0 + 10.0 * d);
        worst = worst.max((f - analytic).abs() / (1.0 + analytic));
    }
    checks.push(Check::new(
        "uniform-revenue-analytic",
        worst <= 1e-10,
        format!("worst relative gap {worst:.3e}"),
    ));
    checks
}

fn suite_price_trends(_cfg: &SolveConfig) -> Vec<Check> {
    let mut checks = Vec::new();
    for rho in [0.5, 1.5] {
        let mut pass = true;
        let mut prev: Option<(f64, f64)> = None;
        for i in 0..11 {
            let p_t = 0.5 * i as f64;
            let out = solve_ne(&s1(rho, 0.0, p_t)).unwrap();
            if out.regime != SubscriptionRegime::Interior {
                pass = false;
            }
            if let Some((p_s, p_c)) = prev {
                if out.p_c <= p_c || out.p_s >= p_s {
                    pass = false;
                }
            }
            prev = Some((out.p_s, out.p_c));
        }
        checks.push(Check::new(
            format!("price-trends(rho={rho})"),
            pass,
            "p_c strictly up, p_s strictly down over p_t in 0..5",
        ));
    }
    checks
}

fn suite_bargain_trends(cfg: &SolveConfig) -> Vec<Check> {
    let mut checks = Vec::new();
    let solve = |k: f64, gamma: f64| pre_bargain_ad(&a1(k, 0.0), gamma, cfg).map(|b| b.p_t);
    for gamma in [0.25, 0.5, 0.75] {
        let (p10, p20, p30) = match (solve(10.0, gamma), solve(20.0, gamma), solve(30.0, gamma)) {
            (Ok(a), Ok(b), Ok(c)) => (a, b, c),
            _ => {
                checks.push(Check::new(
                    format!("transfer-vs-efficiency(gamma={gamma})"),
                    false,
                    "solver error",
                ));
                continue;
            }
        };
        checks.push(Check::new(
            format!("transfer-vs-efficiency(gamma={gamma})"),
            p10 >= p20 && p20 >= p30 && p30 < 0.0,
            format!("p_t* over K 10/20/30: {p10:.4}, {p20:.4}, {p30:.4}"),
        ));
    }
    for k in [10.0, 20.0, 30.0] {
        let (p25, p50, p75) = match (solve(k, 0.25), solve(k, 0.5), solve(k, 0.75)) {
            (Ok(a), Ok(b), Ok(c)) => (a, b, c),
            _ => {
                checks.push(Check::new(
                    format!("transfer-vs-power(K={k})"),
                    false,
                    "solver error",
                ));
                continue;
            }
        };
        checks.push(Check::new(
            format!("transfer-vs-power(K={k})"),
            p25 >= p50 && p50 >= p75,
            format!("p_t* over gamma .25/.5/.75: {p25:.4}, {p50:.4}, {p75:.4}"),
        ));
    }
    checks
}

fn suite_prebargain(_cfg: &SolveConfig) -> Vec<Check> {
    let mut checks = Vec::new();
    match pre_bargain_subscription(&s1(0.5, 0.0, 0.0), 0.5) {
        Ok(b) => {
            checks.push(Check::new(
                "low-rho-transfer",
                (b.p_t - 439.75 / 49.75).abs() < 1e-9 && b.outcome.p_s.abs() < 1e-9,
                format!("p_t* = {:.6}, p_s* = {:.2e}", b.p_t, b.outcome.p_s),
            ));
        }
        Err(e) => checks.push(Check::new("low-rho-transfer", false, e.to_string())),
    }
    match pre_bargain_subscription(&s1(1.5, 0.0, 0.0), 0.5) {
        Ok(b) => checks.push(Check::new(
            "high-rho-transfer",
            (b.p_t + 4.772370486656201).abs() < 1e-9 && b.outcome.p_c.abs() < 1e-9,
            format!("p_t* = {:.6}, p_c* = {:.2e}", b.p_t, b.outcome.p_c),
        )),
        Err(e) => checks.push(Check::new("high-rho-transfer", false, e.to_string())),
    }
    let a = pre_bargain_subscription(&s1(0.5, 0.0, 0.0), 0.1).map(|b| b.p_t);
    let b = pre_bargain_subscription(&s1(0.5, 0.0, 0.0), 0.9).map(|b| b.p_t);
    checks.push(Check::new(
        "gamma-invariance",
        matches!((&a, &b), (Ok(x), Ok(y)) if x == y),
        format!("{a:?} vs {b:?}"),
    ));
    checks
}

fn suite_postbargain(cfg: &SolveConfig) -> Vec<Check> {
    let mut checks = Vec::new();
    match post_bargain_subscription(&s1(1.5, 0.0, 0.0), 0.5) {
        Ok(b) => {
            checks.push(Check::new(
                "high-rho-profile",
                b.p_t == -4.75
                    && (b.outcome.q - 2.389937106918239).abs() < 1e-9
                    && (b.outcome.p_s - 10.559748427672956).abs() < 1e-9,
                format!(
                    "p_t* = {}, q* = {:.6}, p_s* = {:.6}",
                    b.p_t, b.outcome.q, b.outcome.p_s
                ),
            ));
            let o = b.outcome;
            let m = s1(1.5, 0.0, 0.0);
            let objective = |p_t: f64| {
                let mt = m.with_p_t(p_t);
                nash_log_objective(
                    mt.isp_utility(o.p_s, o.p_c, o.q),
                    mt.cp_utility(o.p_s, o.p_c, o.q),
                    0.5,
                )
                .unwrap_or(-1e300)
            };
            match golden_max(objective, -9.4, -0.01, cfg) {
                Ok(max) => checks.push(Check::new(
                    "high-rho-numeric-maximizer",
                    (max.argmax - b.p_t).abs() < 1e-4,
                    format!("golden argmax {:.6} vs {:.6}", max.argmax, b.p_t),
                )),
                Err(e) => {
                    checks.push(Check::new("high-rho-numeric-maximizer", false, e.to_string()))
                }
            }
        }
        Err(e) => checks.push(Check::new("high-rho-profile", false, e.to_string())),
    }
    checks
}

fn suite_adeq(cfg: &SolveConfig) -> Vec<Check> {
    let mut checks = Vec::new();
    match solve_equilibrium_ad(&a1(10.0, 0.0), cfg) {
        Ok(out) => {
            checks.push(Check::new(
                "study-point-values",
                (out.investment - 72.56).abs() <= 0.02
                    && (out.demand - 16.60).abs() <= 0.02
                    && (out.p_s - 2.6595).abs() <= 1e-3
                    && (out.q - 0.4149).abs() <= 1e-3,
                format!(
                    "c* = {:.4}, D* = {:.4}, p_s* = {:.4}, q* = {:.4}",
                    out.investment, out.demand, out.p_s, out.q
                ),
            ));
            let (gap, g_ps, g_q) = sidemarket::fixed_point_residuals(&a1(10.0, 0.0), &out);
            checks.push(Check::new(
                "study-point-residuals",
                gap.abs() < 1e-8 && g_ps.abs() < 1e-8 && g_q.abs() < 1e-8,
                format!("curve {gap:.2e}, price {g_ps:.2e}, qos {g_q:.2e}"),
            ));
        }
        Err(e) => checks.push(Check::new("study-point-values", false, e.to_string())),
    }
    checks
}

/// Run a named suite; `Err` means the name is unknown.
pub fn run_suite(name: &str, cfg: &SolveConfig) -> Result<Vec<Check>, String> {
    match name {
        "kernels" => Ok(suite_kernels(cfg)),
        "ne" => Ok(suite_ne(cfg)),
        "lemma4" => Ok(suite_lemma4(cfg)),
        "lemma5" => Ok(suite_lemma5(cfg)),
        "lemma6" => Ok(suite_lemma6(cfg)),
        "lemma7" => Ok(suite_lemma7(cfg)),
        "price-trends" => Ok(suite_price_trends(cfg)),
        "bargain-trends" => Ok(suite_bargain_trends(cfg)),
        "prebargain" => Ok(suite_prebargain(cfg)),
        "postbargain" => Ok(suite_postbargain(cfg)),
        "adeq" => Ok(suite_adeq(cfg)),
        "all" => {
            let mut checks = Vec::new();
            for suite in SUITES {
                let mut batch = run_suite(suite, cfg)?;
                for check in &mut batch {
                    check.name = format!("{suite}/{}", check.name);
                }
                checks.append(&mut batch);
            }
            Ok(checks)
        }
        other => Err(format!(
            "unknown suite `{other}`; expected one of {SUITES:?} or `all`"
        )),
    }
}
