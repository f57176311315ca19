//! Diagnostics for response homogenization in sampled LLM outputs.
//!
//! The crate is organised around a line-delimited run file ([`store`]) that
//! holds questions, sampled responses with token logprobs, embeddings,
//! entailment scores and correctness labels. On top of that:
//!
//! * [`clustering`] partitions each question's responses (character-bigram
//!   Jaccard, average-linkage cosine, bidirectional entailment) and computes
//!   the single-cluster rate.
//! * [`signals`] turns samples into uncertainty scores: token entropy
//!   features, semantic entropy, SINdex, alignment tax, SelfCheck, P(True).
//! * [`boundary`] holds the density, freshness, rupture and grounding
//!   detectors.
//! * [`cascade`] runs detectors cheapest-first with dual thresholds and
//!   accounts for cost; it also trains the logistic pointer model.
//! * [`stats`] is the evaluation battery (AUROC, bootstrap, DeLong, Holm,
//!   Wilcoxon, TOST, independence measures, calibration, selective
//!   prediction).
//! * [`gateway`] talks to chat, embedding and entailment endpoints with a
//!   disk cache, retries and bounded concurrency.

pub mod analysis;
pub mod boundary;
pub mod cascade;
pub mod clustering;
pub mod config;
pub mod gateway;
pub mod signals;
pub mod stats;
pub mod store;
pub mod vector;

pub use clustering::{ClusterAssignment, ClusterMethod, HomogenizationStats, Partition};
pub use config::ToolConfig;
pub use stats::{ScoredSample, StatReport};
pub use store::{
    LabelRecord, QuestionRecord, ResponseSample, RunManifest, RunStore, SampleRole, TokenLogprob,
};

/// Crate version, embedded in report provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
