//! Single-model uncertainty signals.
//!
//! Everything is in nats. Token entropy is computed over the top-k
//! alternatives an endpoint returns, renormalized, so it is a lower bound on
//! the full-vocabulary entropy.

mod entropy;
mod features;
mod probes;
mod semantic;

use thiserror::Error;

use crate::vector::ShapeError;

pub use entropy::{
    entropy_features, entropy_of_logprobs, features_from_entropies, response_entropies,
    token_entropy, EntropyFeatures, TokenEntropy, ENTROPY_FEATURE_NAMES,
};
pub use features::{text_features, HEDGING_PHRASES, TEXT_FEATURE_NAMES};
pub use probes::{
    ptrue_from_text, ptrue_score, selfcheck_score, PTrue, SelfCheckScore, PTRUE_TEMPLATE,
    PTRUE_TEMPLATE_VERSION,
};
pub use semantic::{
    alignment_tax, greedy_single_pass, semantic_entropy, sindex, sindex_score, AlignmentTax,
    SemanticEntropyScore, SINDEX_SIMILARITY,
};

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("signal unavailable: {0}")]
    Unavailable(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("ambiguous P(True) probe response: {0:?}")]
    AmbiguousProbe(String),
    #[error(transparent)]
    Shape(#[from] ShapeError),
}
