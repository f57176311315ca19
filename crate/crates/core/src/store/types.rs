use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use unicode_normalization::UnicodeNormalization;

use crate::clustering::ClusterAssignment;
use crate::stats::StatReport;

/// Current run-file schema version, written into every manifest record.
pub const FORMAT_VERSION: u32 = 1;

/// Maximum number of alternatives kept per generated token.
pub const MAX_ALTERNATIVES: usize = 20;

pub(crate) fn nfc(s: &str) -> String {
    s.nfc().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub question_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_answers: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp_query: Option<NaiveDate>,
}

impl QuestionRecord {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            question_id: id.into(),
            text: text.into(),
            category: None,
            gold_answers: None,
            timestamp_query: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodingMode {
    Greedy,
    Temperature,
    Nucleus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decoding {
    pub mode: DecodingMode,
    /// Ignored when `mode` is greedy.
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    pub seed: u64,
}

impl Decoding {
    pub fn greedy(max_tokens: u32) -> Self {
        Self {
            mode: DecodingMode::Greedy,
            temperature: 0.0,
            top_p: 1.0,
            max_tokens,
            seed: 0,
        }
    }

    pub fn sampling(temperature: f64, top_p: f64, max_tokens: u32) -> Self {
        let mode = if top_p < 1.0 {
            DecodingMode::Nucleus
        } else {
            DecodingMode::Temperature
        };
        Self {
            mode,
            temperature,
            top_p,
            max_tokens,
            seed: 0,
        }
    }

    /// Temperature actually sent to an endpoint.
    pub fn effective_temperature(&self) -> f64 {
        match self.mode {
            DecodingMode::Greedy => 0.0,
            _ => self.temperature,
        }
    }
}

/// Why a response was generated. Sampled responses feed clustering, the
/// greedy response feeds token entropy and the probe feeds P(True).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[derive(Default)]
pub enum SampleRole {
    #[default]
    Sampled,
    Greedy,
    Probe,
}


/// Serializes non-finite logprobs (the `-inf` sentinel for a zero-probability
/// alternative) as JSON `null`.
mod logprob_serde {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let v: Option<f64> = Option::deserialize(d)?;
        Ok(v.unwrap_or(f64::NEG_INFINITY))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alternative {
    pub token: String,
    #[serde(with = "logprob_serde")]
    pub logprob: f64,
}

impl Alternative {
    pub fn new(token: impl Into<String>, logprob: f64) -> Self {
        Self {
            token: token.into(),
            logprob,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenLogprob {
    pub token_text: String,
    #[serde(with = "logprob_serde")]
    pub chosen_logprob: f64,
    #[serde(default)]
    pub top_alternatives: Vec<Alternative>,
}

impl TokenLogprob {
    /// Builds a token record, appending the chosen token to the alternatives
    /// when the endpoint did not list it.
    pub fn new(token: impl Into<String>, logprob: f64, mut alternatives: Vec<Alternative>) -> Self {
        let token = token.into();
        if !alternatives.iter().any(|a| a.token == token) {
            alternatives.push(Alternative::new(token.clone(), logprob));
        }
        Self {
            token_text: token,
            chosen_logprob: logprob,
            top_alternatives: alternatives,
        }
    }

    pub fn chosen_listed(&self) -> bool {
        self.top_alternatives.iter().any(|a| a.token == self.token_text)
    }

    /// Logprobs of the distribution entropy is computed over.
    pub fn distribution(&self) -> Vec<f64> {
        let mut lps: Vec<f64> = self.top_alternatives.iter().map(|a| a.logprob).collect();
        if !self.chosen_listed() {
            lps.push(self.chosen_logprob);
        }
        lps
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseSample {
    pub question_id: String,
    #[serde(default)]
    pub role: SampleRole,
    pub sample_index: usize,
    pub text: String,
    pub decoding: Decoding,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_logprobs: Option<Vec<TokenLogprob>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Correct,
    Incorrect,
    Ambiguous,
}

impl Label {
    /// Binary target with positive = incorrect; ambiguous labels map to `None`.
    pub fn is_incorrect(self) -> Option<bool> {
        match self {
            Label::Correct => Some(false),
            Label::Incorrect => Some(true),
            Label::Ambiguous => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Judge {
    WordOverlap,
    LlmJudge,
    GoldTemplate,
    Human,
}

impl FromStr for Judge {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "word-overlap" => Ok(Judge::WordOverlap),
            "llm-judge" => Ok(Judge::LlmJudge),
            "gold-template" => Ok(Judge::GoldTemplate),
            "human" => Ok(Judge::Human),
            other => Err(format!(
                "unknown judge `{other}` (expected word-overlap, llm-judge, gold-template or human)"
            )),
        }
    }
}

impl fmt::Display for Judge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Judge::WordOverlap => "word-overlap",
            Judge::LlmJudge => "llm-judge",
            Judge::GoldTemplate => "gold-template",
            Judge::Human => "human",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub question_id: String,
    pub label: Label,
    pub judge: Judge,
    #[serde(default)]
    pub judge_detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub run_id: String,
    pub model_name: String,
    pub endpoint_url: String,
    pub decoding: Decoding,
    /// Samples per question.
    pub n_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<String>,
    pub dataset_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_dim: Option<usize>,
    #[serde(default)]
    pub run_seed: u64,
}

/// Names the piece of text an embedding or entailment score belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TextRef {
    Question,
    Sample(usize),
    Greedy,
    EntityA,
    EntityB,
    Reference(usize),
}

impl fmt::Display for TextRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TextRef::Question => f.write_str("question"),
            TextRef::Sample(i) => write!(f, "sample:{i}"),
            TextRef::Greedy => f.write_str("greedy"),
            TextRef::EntityA => f.write_str("entity_a"),
            TextRef::EntityB => f.write_str("entity_b"),
            TextRef::Reference(i) => write!(f, "reference:{i}"),
        }
    }
}

impl FromStr for TextRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let indexed = |rest: &str| {
            rest.parse::<usize>()
                .map_err(|_| format!("bad index in text reference `{s}`"))
        };
        match s {
            "question" => Ok(TextRef::Question),
            "greedy" => Ok(TextRef::Greedy),
            "entity_a" => Ok(TextRef::EntityA),
            "entity_b" => Ok(TextRef::EntityB),
            _ => {
                if let Some(rest) = s.strip_prefix("sample:") {
                    indexed(rest).map(TextRef::Sample)
                } else if let Some(rest) = s.strip_prefix("reference:") {
                    indexed(rest).map(TextRef::Reference)
                } else {
                    Err(format!("unknown text reference `{s}`"))
                }
            }
        }
    }
}

impl Serialize for TextRef {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TextRef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub question_id: String,
    pub target: TextRef,
    pub vector: Vec<f64>,
}

/// One direction of an entailment judgement: P(premise entails hypothesis).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntailmentRecord {
    pub question_id: String,
    pub premise: TextRef,
    pub hypothesis: TextRef,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalRecord {
    pub question_id: String,
    pub signal: String,
    pub value: f64,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FailureRecord {
    pub question_id: String,
    pub stage: String,
    pub error: String,
    pub attempts: u32,
}

/// One line of a run file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Record {
    Manifest(RunManifest),
    Question(QuestionRecord),
    Sample(ResponseSample),
    Label(LabelRecord),
    Embedding(EmbeddingRecord),
    Entailment(EntailmentRecord),
    Cluster(ClusterAssignment),
    Signal(SignalRecord),
    Failure(FailureRecord),
    Stat(StatReport),
}

impl Record {
    /// Applies NFC to every free-text field.
    pub(crate) fn normalize(&mut self) {
        match self {
            Record::Question(q) => {
                q.text = nfc(&q.text);
                if let Some(golds) = q.gold_answers.as_mut() {
                    for g in golds {
                        *g = nfc(g);
                    }
                }
            }
            Record::Sample(s) => {
                s.text = nfc(&s.text);
            }
            _ => {}
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("run records always serialize")
    }
}
