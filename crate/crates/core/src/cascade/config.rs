use serde::{Deserialize, Serialize};

use super::{validate_stages, BoundaryConfig, CascadeError};
use crate::vector::{median, quantile};

pub const CASCADE_CONFIG_VERSION: u32 = 1;

/// How unset stage thresholds are filled from the run's own score columns.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// `tau_low` / `tau_high` at `low_quantile` / `high_quantile`.
    #[default]
    Quantile,
    /// Both thresholds at the median (single-threshold variant).
    Median,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    pub name: String,
    /// Signal column feeding this stage; defaults to `name`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal: Option<String>,
    pub cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_low: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_high: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

impl StageSpec {
    pub fn signal(&self) -> &str {
        self.signal.as_deref().unwrap_or(&self.name)
    }
}

fn default_low() -> f64 {
    0.25
}

fn default_high() -> f64 {
    0.75
}

fn default_version() -> u32 {
    CASCADE_CONFIG_VERSION
}

/// Cascade definition as read from TOML:
///
/// ```toml
/// version = 1
/// threshold_mode = "quantile"
///
/// [[stage]]
/// name = "b1"
/// signal = "b1_mean_entropy"
/// cost = 0.0
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CascadeConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_global: Option<f64>,
    #[serde(default)]
    pub threshold_mode: ThresholdMode,
    #[serde(default = "default_low")]
    pub low_quantile: f64,
    #[serde(default = "default_high")]
    pub high_quantile: f64,
    #[serde(rename = "stage")]
    pub stages: Vec<StageSpec>,
}

impl CascadeConfig {
    pub fn from_toml(text: &str) -> Result<Self, CascadeError> {
        let cfg: CascadeConfig = toml::from_str(text).map_err(|e| CascadeError::Config(e.to_string()))?;
        if cfg.version != CASCADE_CONFIG_VERSION {
            return Err(CascadeError::Config(format!("unsupported cascade config version {}", cfg.version)));
        }
        if cfg.stages.is_empty() {
            return Err(CascadeError::Config("no [[stage]] entries".into()));
        }
        if !(0.0..=1.0).contains(&cfg.low_quantile) || !(cfg.low_quantile..=1.0).contains(&cfg.high_quantile) {
            return Err(CascadeError::Config("need 0 <= low_quantile <= high_quantile <= 1".into()));
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Fills unset thresholds, weights and `tau_global` from per-stage score
    /// columns (finite scores only). Weights default to `1/k` and
    /// `tau_global` to the weighted sum of column medians.
    pub fn resolve(&self, columns: &[Vec<f64>]) -> Result<(Vec<BoundaryConfig>, f64), CascadeError> {
        if columns.len() != self.stages.len() {
            return Err(CascadeError::Config(format!("{} score columns for {} stages", columns.len(), self.stages.len())));
        }
        let k = self.stages.len() as f64;
        let mut stages = Vec::with_capacity(self.stages.len());
        let mut tau_global = 0.0;
        for (spec, col) in self.stages.iter().zip(columns) {
            let finite: Vec<f64> = col.iter().copied().filter(|v| v.is_finite()).collect();
            let (lo_q, hi_q) = match self.threshold_mode {
                ThresholdMode::Quantile => (self.low_quantile, self.high_quantile),
                ThresholdMode::Median => (0.5, 0.5),
            };
            let lo = spec.tau_low.or_else(|| quantile(&finite, lo_q)).unwrap_or(f64::NEG_INFINITY);
            let hi = spec.tau_high.or_else(|| quantile(&finite, hi_q)).unwrap_or(f64::INFINITY);
            let weight = spec.weight.unwrap_or(1.0 / k);
            tau_global += weight * median(&finite).unwrap_or(0.0);
            stages.push(BoundaryConfig::new(spec.name.clone(), spec.cost, lo, hi, weight));
        }
        validate_stages(&stages)?;
        Ok((stages, self.tau_global.unwrap_or(tau_global)))
    }
}
