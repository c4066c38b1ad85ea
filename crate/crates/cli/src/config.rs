//! Run configuration.
//!
//! A config is a flat JSON object; every field is optional and falls back to
//! [`ExperimentConfig::default`]. The same object is embedded verbatim in
//! each run's `run.json`, so a manifest can be fed back through `--config`.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use ramsey_core::{
    combination_plan, geometric_ladder, PriorWindow, SchemeParams, SchemePlan, DEFAULT_GRID_POINTS,
    DEFAULT_N_E_MAX, MIN_GRID_POINTS,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid config field `{field}`: {reason}")]
    Field { field: String, reason: String },
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
}

pub(crate) fn field_err(field: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    CrbSweep,
    Posterior,
    SchemeOpt,
    MonteCarlo,
    OracleCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::CrbSweep => "crb-sweep",
            Self::Posterior => "posterior",
            Self::SchemeOpt => "scheme-opt",
            Self::MonteCarlo => "monte-carlo",
            Self::OracleCheck => "oracle-check",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Probe allocation used by `posterior` and `monte-carlo`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SchemeSpec {
    /// GHZ blocks of 1, 2, 4, … 2^(p_levels−1) atoms.
    Ladder { p_levels: u32 },
    /// `n_u` single atoms and `p` GHZ copies of `n_e` atoms.
    Combination { n_u: u32, n_e: u32, p: u32 },
    /// `n` single atoms.
    Uncorrelated { n: u32 },
}

impl SchemeSpec {
    pub fn build(&self, params: SchemeParams) -> ramsey_core::Result<SchemePlan> {
        match *self {
            Self::Ladder { p_levels } => geometric_ladder(p_levels, params),
            Self::Combination { n_u, n_e, p } => combination_plan(n_u, n_e, p, params),
            Self::Uncorrelated { n } => combination_plan(n, 1, 0, params),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional in a file; must agree with the subcommand when present.
    pub kind: Option<ExperimentKind>,
    pub seed: u64,
    pub grid_points: usize,
    /// Interrogation time t.
    pub interrogation_time: f64,
    /// Prior half-period L; the default prior window is [0, π/L].
    pub prior_half_period: f64,
    /// Total time T; ν = T/t repetitions per block.
    pub total_time: f64,
    /// Dephasing rate for posterior, scheme-opt and monte-carlo.
    pub gamma: f64,
    /// Dephasing rates swept by crb-sweep.
    pub gammas: Vec<f64>,
    /// Atom counts swept by crb-sweep.
    pub n_min: u32,
    pub n_max: u32,
    pub scheme: SchemeSpec,
    /// Defaults to the design frequency π/(2L).
    pub omega_true: Option<f64>,
    /// Defaults to [0, π/L].
    pub window: Option<[f64; 2]>,
    /// Posterior from binomial draws instead of expected counts.
    pub sampled: bool,
    pub budget_min: u32,
    pub budget_max: u32,
    pub n_e_max: u32,
    pub trials: u32,
    /// Random (Δ, γ, t) points for oracle-check.
    pub points: u32,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: None,
            seed: 0,
            grid_points: DEFAULT_GRID_POINTS,
            interrogation_time: 1.0,
            prior_half_period: 1.0,
            total_time: 100.0,
            gamma: 0.0,
            gammas: vec![0.0, 0.1],
            n_min: 1,
            n_max: 100,
            scheme: SchemeSpec::Ladder { p_levels: 3 },
            omega_true: None,
            window: None,
            sampled: false,
            budget_min: 1,
            budget_max: 60,
            n_e_max: DEFAULT_N_E_MAX,
            trials: 200,
            points: 100,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub grid_points: Option<usize>,
    /// `key=value` pairs; the value is parsed as JSON, falling back to a string.
    pub set: Vec<String>,
}

impl ExperimentConfig {
    /// Reads a config file or a previous run's `run.json`.
    pub fn load_value(path: &Path) -> Result<Value, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let value: Value = serde_json::from_str(&text)?;
        match value {
            Value::Object(mut map)
                if map.contains_key("artifact") && map.contains_key("config") =>
            {
                Ok(map.remove("config").expect("checked"))
            }
            Value::Object(_) => Ok(value),
            _ => Err(field_err("<root>", "config must be a JSON object")),
        }
    }

    /// Merges file contents and overrides, then checks the result against
    /// `kind`.
    pub fn resolve(
        file: Option<Value>,
        kind: ExperimentKind,
        overrides: &Overrides,
    ) -> Result<Self, ConfigError> {
        let mut map = match file {
            Some(Value::Object(map)) => map,
            Some(_) => return Err(field_err("<root>", "config must be a JSON object")),
            None => Default::default(),
        };
        for pair in &overrides.set {
            let (key, raw) = pair
                .split_once('=')
                .ok_or_else(|| field_err(pair.as_str(), "expected key=value"))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.into()));
            map.insert(key.trim().to_owned(), value);
        }
        if let Some(seed) = overrides.seed {
            map.insert("seed".into(), seed.into());
        }
        if let Some(n) = overrides.grid_points {
            map.insert("grid_points".into(), n.into());
        }
        let mut cfg: Self = serde_json::from_value(Value::Object(map)).map_err(|e| {
            let msg = e.to_string();
            match msg.split('`').nth(1) {
                Some(field) if msg.starts_with("unknown field") => field_err(field, msg.clone()),
                _ => ConfigError::Parse(e),
            }
        })?;
        match cfg.kind {
            Some(k) if k != kind => {
                return Err(field_err(
                    "kind",
                    format!("config is for `{k}` but the subcommand is `{kind}`"),
                ))
            }
            _ => cfg.kind = Some(kind),
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn kind(&self) -> ExperimentKind {
        self.kind.expect("resolved configs carry a kind")
    }

    pub fn params(&self, gamma: f64) -> SchemeParams {
        SchemeParams {
            interrogation_time: self.interrogation_time,
            prior_half_period: self.prior_half_period,
            total_time: self.total_time,
            gamma,
        }
    }

    pub fn prior_window(&self) -> Result<PriorWindow, ConfigError> {
        let [lo, hi] = self.window.unwrap_or([0.0, PI / self.prior_half_period]);
        PriorWindow::new(lo, hi, self.grid_points).map_err(|e| core_field(e, "window"))
    }

    pub fn omega_true(&self) -> f64 {
        self.omega_true
            .unwrap_or_else(|| self.params(self.gamma).design_frequency())
    }

    /// Checks everything the chosen experiment will touch.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.grid_points < MIN_GRID_POINTS {
            return Err(field_err(
                "grid_points",
                format!(
                    "must be at least {MIN_GRID_POINTS}, got {}",
                    self.grid_points
                ),
            ));
        }
        let kind = self.kind();
        match kind {
            ExperimentKind::CrbSweep => {
                if self.gammas.is_empty() {
                    return Err(field_err("gammas", "need at least one value"));
                }
                if let Some(g) = self.gammas.iter().find(|g| !(**g >= 0.0) || !g.is_finite()) {
                    return Err(field_err(
                        "gammas",
                        format!("must be non-negative, got {g}"),
                    ));
                }
                if self.n_min < 1 || self.n_min > self.n_max {
                    return Err(field_err(
                        "n_min",
                        format!(
                            "need 1 <= n_min <= n_max, got {}..{}",
                            self.n_min, self.n_max
                        ),
                    ));
                }
                positive("interrogation_time", self.interrogation_time)?;
                positive("total_time", self.total_time)?;
                if self.interrogation_time > self.total_time {
                    return Err(field_err("total_time", "shorter than one interrogation"));
                }
            }
            ExperimentKind::Posterior | ExperimentKind::MonteCarlo => {
                let plan = self
                    .scheme
                    .build(self.params(self.gamma))
                    .map_err(|e| core_field(e, "scheme"))?;
                let window = self.prior_window()?;
                let omega = self.omega_true();
                if !window.contains(omega) {
                    return Err(field_err(
                        "omega_true",
                        format!(
                            "{omega} lies outside the window [{}, {}]",
                            window.lower, window.upper
                        ),
                    ));
                }
                let sampled = self.sampled || kind == ExperimentKind::MonteCarlo;
                if sampled && plan.blocks.iter().any(|b| b.repetitions.fract() != 0.0) {
                    return Err(field_err(
                        "total_time",
                        "sampling needs a whole number of repetitions T/t",
                    ));
                }
                if kind == ExperimentKind::MonteCarlo && self.trials < 1 {
                    return Err(field_err("trials", "need at least one trial"));
                }
            }
            ExperimentKind::SchemeOpt => {
                self.params(self.gamma)
                    .validate()
                    .map_err(|e| core_field(e, "params"))?;
                if self.budget_min < 1 || self.budget_min > self.budget_max {
                    return Err(field_err(
                        "budget_min",
                        format!(
                            "need 1 <= budget_min <= budget_max, got {}..{}",
                            self.budget_min, self.budget_max
                        ),
                    ));
                }
                if self.n_e_max < 1 {
                    return Err(field_err("n_e_max", "must be at least 1"));
                }
            }
            ExperimentKind::OracleCheck => {
                if self.points < 1 {
                    return Err(field_err("points", "need at least one point"));
                }
            }
        }
        Ok(())
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field_err(
            field,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

/// Core domain errors already name a field; keep it.
fn core_field(e: ramsey_core::Error, fallback: &str) -> ConfigError {
    match e {
        ramsey_core::Error::Domain { field, reason } => field_err(field, reason),
        other => field_err(fallback, other.to_string()),
    }
}
