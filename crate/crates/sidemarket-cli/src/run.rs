//! Scenario execution and CSV emission.
//!
//! A scenario is a single solve or a sweep over one parameter; every
//! sweep point becomes one [`SweepRow`]. Solver errors are recorded in
//! the affected row and the run continues. Points are evaluated across a
//! worker pool and assembled back in sweep order, so output bytes do not
//! depend on the worker count.

use crate::config::{MarketSpec, ScenarioConfig, SweepSpec};
use sidemarket::{
    post_bargain_ad, post_bargain_subscription, pre_bargain_ad, pre_bargain_subscription,
    solve_equilibrium_ad, solve_ne, AdMarket, AdOutcome, BargainSetting, BargainTiming,
    SolveConfig, SubscriptionMarket, SubscriptionOutcome,
};
use std::io::{self, Write};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Numeric payload of one solved point.
#[derive(Debug, Clone, PartialEq)]
pub struct RowData {
    pub p_s: f64,
    /// CP price (subscription) or CP investment (advertisement).
    pub p_c_or_c: f64,
    pub q: f64,
    pub demand: f64,
    /// Per-attention ad price; absent in the subscription model.
    pub p_a: Option<f64>,
    pub u_isp: f64,
    pub u_cp: f64,
    /// Effective side payment: the market's, or the bargained one.
    pub p_t: f64,
    pub regime: String,
    pub iterations: usize,
}

/// One sweep point: the swept coordinate plus the outcome or the error
/// that stopped it.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Swept variable name; empty for single-point runs.
    pub swept_var: String,
    pub swept_value: Option<f64>,
    pub result: Result<RowData, String>,
}

impl RowData {
    fn from_subscription(out: &SubscriptionOutcome, p_t: f64) -> Self {
        Self {
            p_s: out.p_s,
            p_c_or_c: out.p_c,
            q: out.q,
            demand: out.demand,
            p_a: None,
            u_isp: out.u_isp,
            u_cp: out.u_cp,
            p_t,
            regime: out.regime.to_string(),
            iterations: out.iterations,
        }
    }

    fn from_ad(out: &AdOutcome, p_t: f64) -> Self {
        Self {
            p_s: out.p_s,
            p_c_or_c: out.investment,
            q: out.q,
            demand: out.demand,
            p_a: Some(out.p_a),
            u_isp: out.u_isp,
            u_cp: out.u_cp,
            p_t,
            regime: out.regime.to_string(),
            iterations: out.iterations,
        }
    }
}

fn apply_subscription_var(
    m: &SubscriptionMarket,
    var: &str,
    value: f64,
) -> Option<SubscriptionMarket> {
    let mut m = *m;
    match var {
        "D0" => m.d0 = value,
        "alpha" => m.alpha = value,
        "beta" => m.beta = value,
        "rho" => m.rho = value,
        "delta" => m.delta = value,
        "p_r" => m.p_r = value,
        "q_max" => m.q_max = value,
        "p_t" => m.p_t = value,
        _ => return None,
    }
    Some(m)
}

fn apply_ad_var(a: &AdMarket, var: &str, value: f64) -> Option<AdMarket> {
    use sidemarket::ValuationDistribution as Dist;
    let mut a = *a;
    match var {
        "D0_0" => a.d0_0 = value,
        "K" => a.k = value,
        "MB" => a.mb = value,
        "alpha" => a.alpha = value,
        "beta" => a.beta = value,
        "delta" => a.delta = value,
        "p_r" => a.p_r = value,
        "q_max" => a.q_max = value,
        "p_t" => a.p_t = value,
        "v_max" => match a.dist {
            Dist::Uniform { .. } => a.dist = Dist::Uniform { v_max: value },
            _ => return None,
        },
        "mu" => match a.dist {
            Dist::Normal { sigma, .. } => a.dist = Dist::Normal { mu: value, sigma },
            _ => return None,
        },
        "sigma" => match a.dist {
            Dist::Normal { mu, .. } => a.dist = Dist::Normal { mu, sigma: value },
            _ => return None,
        },
        _ => return None,
    }
    Some(a)
}

/// Solve one point of a scenario.
fn solve_point(
    cfg: &ScenarioConfig,
    swept: Option<(&str, f64)>,
    solver: &SolveConfig,
) -> Result<RowData, String> {
    let mut bargain = cfg.bargain;
    let mut market = cfg.market.clone();
    if let Some((var, value)) = swept {
        if var == "gamma" {
            let setting = bargain.as_mut().expect("gamma sweep requires bargaining");
            *setting = BargainSetting::new(value, setting.timing).map_err(|e| e.to_string())?;
        } else {
            market = match &market {
                MarketSpec::Subscription(m) => MarketSpec::Subscription(
                    apply_subscription_var(m, var, value)
                        .ok_or_else(|| format!("cannot sweep `{var}`"))?,
                ),
                MarketSpec::Advertisement(a) => MarketSpec::Advertisement(
                    apply_ad_var(a, var, value).ok_or_else(|| format!("cannot sweep `{var}`"))?,
                ),
            };
        }
    }

    match (&market, bargain) {
        (MarketSpec::Subscription(m), None) => {
            m.validate().map_err(|e| e.to_string())?;
            let out = solve_ne(m).map_err(|e| e.to_string())?;
            Ok(RowData::from_subscription(&out, m.p_t))
        }
        (MarketSpec::Advertisement(a), None) => {
            a.validate().map_err(|e| e.to_string())?;
            let out = solve_equilibrium_ad(a, solver).map_err(|e| e.to_string())?;
            Ok(RowData::from_ad(&out, a.p_t))
        }
        (MarketSpec::Subscription(m), Some(setting)) => {
            m.validate().map_err(|e| e.to_string())?;
            let bargained = match setting.timing {
                BargainTiming::Pre => pre_bargain_subscription(m, setting.gamma),
                BargainTiming::Post => post_bargain_subscription(m, setting.gamma),
            }
            .map_err(|e| e.to_string())?;
            Ok(RowData::from_subscription(&bargained.outcome, bargained.p_t))
        }
        (MarketSpec::Advertisement(a), Some(setting)) => {
            a.validate().map_err(|e| e.to_string())?;
            let bargained = match setting.timing {
                BargainTiming::Pre => pre_bargain_ad(a, setting.gamma, solver),
                BargainTiming::Post => post_bargain_ad(a, setting.gamma, solver),
            }
            .map_err(|e| e.to_string())?;
            Ok(RowData::from_ad(&bargained.outcome, bargained.p_t))
        }
    }
}

/// Run a scenario: every sweep point (or the single configured point)
/// becomes one row, in sweep order.
pub fn run_scenario(cfg: &ScenarioConfig, workers: usize, solver: &SolveConfig) -> Vec<SweepRow> {
    let points: Vec<(String, Option<f64>)> = match &cfg.sweep {
        None => vec![(String::new(), None)],
        Some(SweepSpec { var, .. }) => cfg
            .sweep
            .as_ref()
            .unwrap()
            .values()
            .into_iter()
            .map(|v| (var.clone(), Some(v)))
            .collect(),
    };

    let slots: Vec<Mutex<Option<SweepRow>>> = points.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = workers.max(1).min(points.len());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= points.len() {
                    break;
                }
                let (var, value) = &points[idx];
                let swept = value.map(|v| (var.as_str(), v));
                let result = solve_point(cfg, swept, solver);
                *slots[idx].lock().unwrap() = Some(SweepRow {
                    swept_var: var.clone(),
                    swept_value: *value,
                    result,
                });
            });
        }
    });

    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("every point solved"))
        .collect()
}

/// Render a number with 12 significant digits.
fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Fixed CSV schema, one row per sweep point, newline-terminated.
pub const CSV_HEADER: &str = "swept_var,swept_value,p_s,p_c_or_c,q,D,p_a,u_isp,u_cp,p_t,regime";

/// Write rows as CSV to `dest`.
pub fn emit_csv<W: Write>(rows: &[SweepRow], dest: &mut W) -> io::Result<()> {
    writeln!(dest, "{CSV_HEADER}")?;
    for row in rows {
        let swept_value = row.swept_value.map(sig12).unwrap_or_default();
        match &row.result {
            Ok(data) => {
                let p_a = data.p_a.map(sig12).unwrap_or_default();
                writeln!(
                    dest,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    row.swept_var,
                    swept_value,
                    sig12(data.p_s),
                    sig12(data.p_c_or_c),
                    sig12(data.q),
                    sig12(data.demand),
                    p_a,
                    sig12(data.u_isp),
                    sig12(data.u_cp),
                    sig12(data.p_t),
                    data.regime,
                )?;
            }
            Err(message) => {
                let sanitized = message.replace(',', ";").replace('\n', " ");
                writeln!(
                    dest,
                    "{},{},,,,,,,,,error({sanitized})",
                    row.swept_var, swept_value,
                )?;
            }
        }
    }
    Ok(())
}
