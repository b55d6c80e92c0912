//! Flat `key=value` scenario configs.
//!
//! One key per line, `#` starts a comment, UTF-8. Keys name the market
//! parameters directly (`D0`, `alpha`, ..., `p_t`), plus optional sweep
//! (`sweep_var`, `sweep_start`, `sweep_stop`, `sweep_steps`), bargaining
//! (`bargain_gamma`, `bargain_timing`) and `out` groups. Unknown keys are
//! rejected with their line number.

use sidemarket::{
    AdMarket, BargainSetting, BargainTiming, ModelError, SubscriptionMarket,
    ValuationDistribution,
};
use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    /// Structural problem on a specific line.
    Parse { line: usize, reason: String },
    /// A key is missing, malformed or out of range.
    Validation { key: String, reason: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Parse { line, reason } => write!(f, "line {line}: {reason}"),
            Self::Validation { key, reason } => write!(f, "{key}: {reason}"),
        }
    }
}

impl std::error::Error for ConfigError {}

impl From<ModelError> for ConfigError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::InvalidParameter { name, reason } => Self::Validation {
                key: name.to_string(),
                reason: reason.to_string(),
            },
            ModelError::NonpositiveAdPrice { p_a } => Self::Validation {
                key: "p_a".to_string(),
                reason: format!("must be positive, got {p_a}"),
            },
        }
    }
}

fn validation(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        key: key.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Subscription,
    Advertisement,
}

/// The market a scenario runs on.
#[derive(Debug, Clone, PartialEq)]
pub enum MarketSpec {
    Subscription(SubscriptionMarket),
    Advertisement(AdMarket),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub var: String,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl SweepSpec {
    /// The swept values, evenly spaced and ordered from start to stop.
    pub fn values(&self) -> Vec<f64> {
        let step = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.start + step * i as f64).collect()
    }
}

/// A parsed and validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub model: ModelKind,
    pub market: MarketSpec,
    pub sweep: Option<SweepSpec>,
    pub bargain: Option<BargainSetting>,
    pub out: Option<PathBuf>,
}

/// Every key any model understands, used to reject unknown keys early.
const KNOWN_KEYS: &[&str] = &[
    "model", "D0", "alpha", "beta", "rho", "delta", "p_r", "q_max", "p_t", "D0_0", "K", "MB",
    "dist", "v_max", "mu", "sigma", "sweep_var", "sweep_start", "sweep_stop", "sweep_steps",
    "bargain_gamma", "bargain_timing", "out",
];

const SUBSCRIPTION_KEYS: &[&str] = &[
    "model", "D0", "alpha", "beta", "rho", "delta", "p_r", "q_max", "p_t",
];
const ADVERTISEMENT_KEYS: &[&str] = &[
    "model", "D0_0", "K", "MB", "dist", "v_max", "mu", "sigma", "alpha", "beta", "delta", "p_r",
    "q_max", "p_t",
];
const GROUP_KEYS: &[&str] = &[
    "sweep_var", "sweep_start", "sweep_stop", "sweep_steps", "bargain_gamma", "bargain_timing",
    "out",
];

/// Variables a sweep may range over, per model.
pub fn sweepable_vars(model: ModelKind, bargaining: bool) -> Vec<&'static str> {
    let mut vars: Vec<&'static str> = match model {
        ModelKind::Subscription => {
            vec!["D0", "alpha", "beta", "rho", "delta", "p_r", "q_max", "p_t"]
        }
        ModelKind::Advertisement => vec![
            "D0_0", "K", "MB", "v_max", "mu", "sigma", "alpha", "beta", "delta", "p_r", "q_max",
            "p_t",
        ],
    };
    if bargaining {
        vars.push("gamma");
    }
    vars
}

struct Raw {
    entries: HashMap<String, (String, usize)>,
}

impl Raw {
    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    fn req_f64(&self, key: &str) -> Result<f64, ConfigError> {
        let value = self.get(key).ok_or_else(|| validation(key, "required"))?;
        value
            .parse::<f64>()
            .map_err(|_| validation(key, format!("not a number: `{value}`")))
    }

    fn opt_f64(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(value) => value
                .parse::<f64>()
                .map_err(|_| validation(key, format!("not a number: `{value}`"))),
        }
    }
}

/// Parse a scenario config document.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut entries: HashMap<String, (String, usize)> = HashMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Parse {
                line: line_no,
                reason: format!("expected key=value, got `{line}`"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(ConfigError::Parse {
                line: line_no,
                reason: format!("unknown key `{key}`"),
            });
        }
        if entries.insert(key.to_string(), (value.to_string(), line_no)).is_some() {
            return Err(ConfigError::Parse {
                line: line_no,
                reason: format!("duplicate key `{key}`"),
            });
        }
    }
    let raw = Raw { entries };

    let model = match raw.get("model") {
        None => return Err(validation("model", "required")),
        Some("subscription") => ModelKind::Subscription,
        Some("advertisement") => ModelKind::Advertisement,
        Some(other) => {
            return Err(validation(
                "model",
                format!("must be `subscription` or `advertisement`, got `{other}`"),
            ))
        }
    };

    // Keys must belong to the declared model (or a group).
    let allowed: &[&str] = match model {
        ModelKind::Subscription => SUBSCRIPTION_KEYS,
        ModelKind::Advertisement => ADVERTISEMENT_KEYS,
    };
    for (key, (_, line_no)) in &raw.entries {
        if !allowed.contains(&key.as_str()) && !GROUP_KEYS.contains(&key.as_str()) {
            return Err(ConfigError::Parse {
                line: *line_no,
                reason: format!("key `{key}` does not apply to this model"),
            });
        }
    }

    let market = match model {
        ModelKind::Subscription => MarketSpec::Subscription(SubscriptionMarket::new(
            raw.req_f64("D0")?,
            raw.req_f64("alpha")?,
            raw.req_f64("beta")?,
            raw.req_f64("rho")?,
            raw.opt_f64("delta", 0.0)?,
            raw.req_f64("p_r")?,
            raw.opt_f64("q_max", 10.0)?,
            raw.opt_f64("p_t", 0.0)?,
        )?),
        ModelKind::Advertisement => {
            let dist = match raw.get("dist") {
                None => return Err(validation("dist", "required")),
                Some("uniform") => ValuationDistribution::uniform(raw.req_f64("v_max")?)?,
                Some("normal") => {
                    ValuationDistribution::normal(raw.req_f64("mu")?, raw.req_f64("sigma")?)?
                }
                Some(other) => {
                    return Err(validation(
                        "dist",
                        format!("must be `uniform` or `normal`, got `{other}`"),
                    ))
                }
            };
            MarketSpec::Advertisement(AdMarket::new(
                raw.req_f64("D0_0")?,
                raw.req_f64("K")?,
                raw.req_f64("MB")?,
                dist,
                raw.req_f64("alpha")?,
                raw.req_f64("beta")?,
                raw.opt_f64("delta", 0.0)?,
                raw.req_f64("p_r")?,
                raw.opt_f64("q_max", 10.0)?,
                raw.opt_f64("p_t", 0.0)?,
            )?)
        }
    };

    let bargain = match (raw.get("bargain_gamma"), raw.get("bargain_timing")) {
        (None, None) => None,
        (Some(_), None) => return Err(validation("bargain_timing", "required")),
        (None, Some(_)) => return Err(validation("bargain_gamma", "required")),
        (Some(_), Some(timing)) => {
            let gamma = raw.req_f64("bargain_gamma")?;
            let timing = match timing {
                "pre" => BargainTiming::Pre,
                "post" => BargainTiming::Post,
                other => {
                    return Err(validation(
                        "bargain_timing",
                        format!("must be `pre` or `post`, got `{other}`"),
                    ))
                }
            };
            Some(BargainSetting::new(gamma, timing)?)
        }
    };

    let sweep_keys = ["sweep_var", "sweep_start", "sweep_stop", "sweep_steps"];
    let present = sweep_keys.iter().filter(|k| raw.get(k).is_some()).count();
    let sweep = match present {
        0 => None,
        4 => {
            let var = raw.get("sweep_var").unwrap().to_string();
            let vars = sweepable_vars(model, bargain.is_some());
            if !vars.contains(&var.as_str()) {
                return Err(validation(
                    "sweep_var",
                    format!("`{var}` is not a sweepable parameter here (one of {vars:?})"),
                ));
            }
            let steps_raw = raw.get("sweep_steps").unwrap();
            let steps: usize = steps_raw
                .parse()
                .map_err(|_| validation("sweep_steps", format!("not an integer: `{steps_raw}`")))?;
            if steps < 2 {
                return Err(validation("sweep_steps", "must be >= 2"));
            }
            Some(SweepSpec {
                var,
                start: raw.req_f64("sweep_start")?,
                stop: raw.req_f64("sweep_stop")?,
                steps,
            })
        }
        _ => {
            let missing = sweep_keys
                .iter()
                .find(|k| raw.get(k).is_none())
                .unwrap();
            return Err(validation(missing, "required (sweep keys come as a group)"));
        }
    };

    let out = raw.get("out").map(PathBuf::from);

    Ok(ScenarioConfig {
        model,
        market,
        sweep,
        bargain,
        out,
    })
}
