//! Tool-wide configuration (TOML).
//!
//! ```toml
//! [gateway]
//! chat_url = "http://localhost:11434/v1/chat/completions"
//! chat_model = "qwen3:14b"
//!
//! [clustering]
//! jaccard_threshold = 0.4
//!
//! [signals]
//! density_k = 10
//!
//! [report]
//! scr_advisory = 0.05
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::boundary::{DEFAULT_DENSITY_K, DEFAULT_LAMBDA, DEFAULT_TEMPORAL_LEXICON};
use crate::clustering::{
    ClusterMethod, EntailmentAggregation, DEFAULT_EMBEDDING_THRESHOLD, DEFAULT_ENTAILMENT_THRESHOLD,
    DEFAULT_JACCARD_THRESHOLD,
};
use crate::gateway::GatewayConfig;
use crate::signals::SINDEX_SIMILARITY;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringConfig {
    pub jaccard_threshold: f64,
    pub embedding_threshold: f64,
    pub entailment_threshold: f64,
    pub entailment_aggregation: EntailmentAggregation,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        Self {
            jaccard_threshold: DEFAULT_JACCARD_THRESHOLD,
            embedding_threshold: DEFAULT_EMBEDDING_THRESHOLD,
            entailment_threshold: DEFAULT_ENTAILMENT_THRESHOLD,
            entailment_aggregation: EntailmentAggregation::Min,
        }
    }
}

impl ClusteringConfig {
    pub fn threshold(&self, method: ClusterMethod) -> f64 {
        match method {
            ClusterMethod::Jaccard => self.jaccard_threshold,
            ClusterMethod::Embedding => self.embedding_threshold,
            ClusterMethod::Entailment => self.entailment_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalConfig {
    /// Neighbours for B2.
    pub density_k: usize,
    /// JSONL file of `{id, vector}` rows used as the B2 pool instead of the
    /// run's own question embeddings.
    pub density_pool: Option<PathBuf>,
    /// Freshness decay per day.
    pub lambda: f64,
    /// Per-category overrides of `lambda`.
    pub lambda_by_category: BTreeMap<String, f64>,
    pub temporal_lexicon: Vec<String>,
    /// Model knowledge cutoff; B3 is unavailable without it.
    pub knowledge_cutoff: Option<NaiveDate>,
    /// Query date for questions without `timestamp_query`.
    pub reference_date: Option<NaiveDate>,
    pub sindex_similarity: f64,
    /// Sampled responses compared against the greedy one by SelfCheck.
    pub selfcheck_k: usize,
    /// Alternatives requested per token for B1.
    pub top_k: u32,
    pub greedy_max_tokens: u32,
    pub probe_max_tokens: u32,
}

impl Default for SignalConfig {
    fn default() -> Self {
        Self {
            density_k: DEFAULT_DENSITY_K,
            density_pool: None,
            lambda: DEFAULT_LAMBDA,
            lambda_by_category: BTreeMap::new(),
            temporal_lexicon: DEFAULT_TEMPORAL_LEXICON.iter().map(|s| s.to_string()).collect(),
            knowledge_cutoff: None,
            reference_date: None,
            sindex_similarity: SINDEX_SIMILARITY,
            selfcheck_k: 5,
            top_k: 10,
            greedy_max_tokens: 128,
            probe_max_tokens: 4,
        }
    }
}

impl SignalConfig {
    pub fn lambda_for(&self, category: Option<&str>) -> f64 {
        category
            .and_then(|c| self.lambda_by_category.get(c))
            .copied()
            .unwrap_or(self.lambda)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// SCR above which sampling-based uncertainty is flagged as unreliable.
    pub scr_advisory: f64,
    pub bootstrap_resamples: usize,
    /// Permutations for dcor and HSIC.
    pub permutations: usize,
    /// Permutations for mutual information.
    pub mi_permutations: usize,
    pub folds: usize,
    pub tost_margin: f64,
    pub alpha: f64,
    /// L2 penalty of the pointer model (standardized features).
    pub pointer_l2: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            scr_advisory: 0.05,
            bootstrap_resamples: crate::stats::DEFAULT_RESAMPLES,
            permutations: 500,
            mi_permutations: 1000,
            folds: 5,
            tost_margin: 0.05,
            alpha: 0.05,
            pointer_l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolConfig {
    pub gateway: GatewayConfig,
    pub clustering: ClusteringConfig,
    pub signals: SignalConfig,
    pub report: ReportConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(String),
}

impl ToolConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Hash of the settings that affect computed numbers (clustering,
    /// signals, report). Gateway settings are excluded: they change how
    /// data is fetched, not what is computed from it.
    pub fn config_hash(&self) -> String {
        let v = serde_json::json!({
            "clustering": self.clustering,
            "signals": self.signals,
            "report": self.report,
        });
        let digest = Sha256::digest(v.to_string().as_bytes());
        hex::encode(&digest[..8])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = ToolConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(ToolConfig::from_toml(&text).unwrap(), cfg);
        assert_eq!(ToolConfig::from_toml("").unwrap(), cfg);
    }

    #[test]
    fn hash_ignores_gateway_and_tracks_analysis() {
        let a = ToolConfig::default();
        let mut b = a.clone();
        b.gateway.cache_dir = Some("/tmp/elsewhere".into());
        assert_eq!(a.config_hash(), b.config_hash());
        b.clustering.jaccard_threshold = 0.5;
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 16);
    }

    #[test]
    fn partial_sections_and_unknown_keys() {
        let cfg = ToolConfig::from_toml("[signals]\ndensity_k = 3\nknowledge_cutoff = \"2024-06-30\"\n").unwrap();
        assert_eq!(cfg.signals.density_k, 3);
        assert_eq!(cfg.signals.knowledge_cutoff, Some(NaiveDate::from_ymd_opt(2024, 6, 30).unwrap()));
        assert!(ToolConfig::from_toml("[signals]\nbogus = 1\n").is_err());
    }

    #[test]
    fn category_lambda_override() {
        let mut s = SignalConfig::default();
        s.lambda_by_category.insert("news".into(), 0.1);
        assert_eq!(s.lambda_for(Some("news")), 0.1);
        assert_eq!(s.lambda_for(Some("math")), DEFAULT_LAMBDA);
        assert_eq!(s.lambda_for(None), DEFAULT_LAMBDA);
    }
}
