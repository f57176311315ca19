use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// A named statistic with optional interval and p-value, plus method and
/// seed provenance. `details` carries secondary numbers (bootstrap p,
/// discarded resamples, per-tail p-values, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub name: String,
    pub point_estimate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_low: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_high: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    pub n: usize,
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
}

impl StatReport {
    pub fn new(name: impl Into<String>, point_estimate: f64, n: usize, method: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            point_estimate,
            ci_low: None,
            ci_high: None,
            p_value: None,
            n,
            method: method.into(),
            seed: None,
            details: BTreeMap::new(),
        }
    }

    pub fn with_ci(mut self, low: f64, high: f64) -> Self {
        self.ci_low = Some(low);
        self.ci_high = Some(high);
        self
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p_value = Some(p);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_detail(mut self, key: impl Into<String>, value: f64) -> Self {
        self.details.insert(key.into(), value);
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn detail(&self, key: &str) -> Option<f64> {
        self.details.get(key).copied()
    }
}
