//! HTTP access to chat, embedding and entailment endpoints.
//!
//! Every request goes through [`transport::Transport`], which owns the disk
//! cache, bounded concurrency and retry policy. Cache keys hash the endpoint,
//! model and canonical request body, so a rerun of an identical command is
//! served entirely from disk.

mod cache;
mod chat;
mod embed;
mod entail;
mod sampler;
pub mod stub;
mod transport;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{cache_key, DiskCache};
pub use chat::{parse_chat_response, ChatApi, ChatReply, ChatRequest};
pub use embed::EmbeddingBatch;
pub use entail::parse_entailment;
pub use sampler::{derive_seed, probe_prompt};
pub use transport::{CallInfo, Transport, TransportStats};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GatewayError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("unexpected response schema: {0}")]
    Schema(String),
    #[error("signal unavailable: {0}")]
    Unavailable(String),
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("configuration error: {0}")]
    Config(String),
}

impl GatewayError {
    fn retryable(&self) -> bool {
        match self {
            GatewayError::Transport(_) => true,
            GatewayError::Http { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

fn default_timeout() -> f64 {
    60.0
}

fn default_retries() -> u32 {
    3
}

fn default_in_flight() -> usize {
    4
}

fn default_backoff() -> u64 {
    200
}

fn default_top_k() -> u32 {
    10
}

fn default_batch() -> usize {
    32
}

fn default_key_env() -> String {
    "HOMOGEN_API_KEY".into()
}

/// Endpoints and client policy. URLs are complete endpoint URLs (for
/// example `http://localhost:11434/v1/chat/completions`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatewayConfig {
    #[serde(default)]
    pub chat_url: Option<String>,
    #[serde(default)]
    pub chat_model: String,
    #[serde(default)]
    pub chat_api: ChatApi,
    #[serde(default)]
    pub embed_url: Option<String>,
    #[serde(default)]
    pub embed_model: String,
    #[serde(default)]
    pub entail_url: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// Maximum requests in flight at once (P).
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    /// Base delay of the exponential backoff.
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    /// Alternatives requested per generated token.
    #[serde(default = "default_top_k")]
    pub top_k: u32,
    #[serde(default = "default_batch")]
    pub embed_batch: usize,
    /// Prepended to every chat prompt (for model-specific switches).
    #[serde(default)]
    pub prompt_prefix: Option<String>,
    /// Environment variable holding a bearer token, if any.
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            chat_url: None,
            chat_model: String::new(),
            chat_api: ChatApi::default(),
            embed_url: None,
            embed_model: String::new(),
            entail_url: None,
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            max_in_flight: default_in_flight(),
            backoff_ms: default_backoff(),
            cache_dir: None,
            top_k: default_top_k(),
            embed_batch: default_batch(),
            prompt_prefix: None,
            api_key_env: default_key_env(),
        }
    }
}

impl GatewayConfig {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.max_in_flight == 0 {
            return Err(GatewayError::Config("max_in_flight must be at least 1".into()));
        }
        if !(self.timeout_secs > 0.0) {
            return Err(GatewayError::Config("timeout_secs must be positive".into()));
        }
        if self.embed_batch == 0 {
            return Err(GatewayError::Config("embed_batch must be at least 1".into()));
        }
        Ok(())
    }
}

/// Shared, thread-safe handle to all endpoints.
pub struct Gateway {
    pub config: GatewayConfig,
    transport: Transport,
}

impl Gateway {
    pub fn new(config: GatewayConfig) -> Result<Self, GatewayError> {
        config.validate()?;
        let transport = Transport::new(&config)?;
        Ok(Self { config, transport })
    }

    pub fn stats(&self) -> TransportStats {
        self.transport.stats()
    }

    pub fn transport(&self) -> &Transport {
        &self.transport
    }

    fn chat_url(&self) -> Result<&str, GatewayError> {
        self.config
            .chat_url
            .as_deref()
            .ok_or_else(|| GatewayError::Config("no chat_url configured".into()))
    }
}

impl crate::boundary::EntailmentScorer for Gateway {
    fn entailment(&self, premise: &str, hypothesis: &str) -> Result<f64, GatewayError> {
        self.entailment_score(premise, hypothesis)
    }
}

#[cfg(test)]
mod tests;
