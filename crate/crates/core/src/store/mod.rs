//! Append-only run files: one JSON record per line with a `kind`
//! discriminator (`manifest`, `question`, `sample`, `label`, `embedding`,
//! `entailment`, `cluster`, `signal`, `failure`, `stat`).
//!
//! Ingest is order independent: records are indexed by key, and
//! [`RunStore::write_to`] emits them in a canonical order, so permuting the
//! lines of a file yields an identical store and identical output.

mod types;

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::clustering::{ClusterAssignment, ClusterMethod};
use crate::stats::StatReport;

pub use types::*;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("reference error: unknown question_id `{0}`")]
    Reference(String),
    #[error("unsupported format_version {0} (this build reads version {FORMAT_VERSION})")]
    UnsupportedVersion(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunCounts {
    pub questions: usize,
    pub samples: usize,
    pub greedy: usize,
    pub probes: usize,
    pub labels: usize,
    pub labeled_questions: usize,
    pub embeddings: usize,
    pub entailments: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelMergeCounts {
    /// Label records read from the label file.
    pub written: usize,
    /// Distinct questions carrying at least one label afterwards.
    pub labeled_questions: usize,
}

/// An invariant violation found by [`RunStore::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub locator: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.locator, self.message)
    }
}

type SampleKey = (String, SampleRole, usize);

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunStore {
    manifest: Option<RunManifest>,
    questions: BTreeMap<String, QuestionRecord>,
    samples: BTreeMap<SampleKey, ResponseSample>,
    labels: BTreeMap<(String, Judge), LabelRecord>,
    embeddings: BTreeMap<(String, TextRef), EmbeddingRecord>,
    entailments: BTreeMap<(String, TextRef, TextRef), EntailmentRecord>,
    clusters: BTreeMap<(String, ClusterMethod, u64), ClusterAssignment>,
    signals: BTreeMap<(String, String, String), SignalRecord>,
    failures: BTreeSet<FailureRecord>,
    stats: BTreeMap<(String, String, u64), StatReport>,
}

impl RunStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn ingest_path(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let file = File::open(path)?;
        Self::ingest_reader(BufReader::new(file))
    }

    pub fn ingest_str(text: &str) -> Result<Self, StoreError> {
        Self::ingest_reader(text.as_bytes())
    }

    /// Reads records line by line. Blank lines are skipped.
    pub fn ingest_reader(reader: impl BufRead) -> Result<Self, StoreError> {
        let mut store = Self::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: Record = serde_json::from_str(&line).map_err(|e| StoreError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            store.insert(record).map_err(|e| match e {
                StoreError::Integrity(msg) => StoreError::Integrity(format!("line {}: {msg}", i + 1)),
                other => other,
            })?;
        }
        Ok(store)
    }

    /// Adds a record, rejecting duplicates of an existing key.
    pub fn insert(&mut self, record: Record) -> Result<(), StoreError> {
        self.put(record, false)
    }

    /// Adds a record, replacing any existing record with the same key.
    pub fn upsert(&mut self, record: Record) -> Result<(), StoreError> {
        self.put(record, true)
    }

    fn put(&mut self, mut record: Record, overwrite: bool) -> Result<(), StoreError> {
        record.normalize();
        fn place<K: Ord, V>(
            map: &mut BTreeMap<K, V>,
            key: K,
            value: V,
            overwrite: bool,
            describe: impl FnOnce() -> String,
        ) -> Result<(), StoreError> {
            if !overwrite && map.contains_key(&key) {
                return Err(StoreError::Integrity(describe()));
            }
            map.insert(key, value);
            Ok(())
        }
        match record {
            Record::Manifest(m) => {
                if m.format_version != FORMAT_VERSION {
                    return Err(StoreError::UnsupportedVersion(m.format_version));
                }
                if self.manifest.is_some() && !overwrite {
                    return Err(StoreError::Integrity("more than one manifest record".into()));
                }
                self.manifest = Some(m);
                Ok(())
            }
            Record::Question(q) => {
                let id = q.question_id.clone();
                place(&mut self.questions, id.clone(), q, overwrite, || {
                    format!("duplicate question_id `{id}`")
                })
            }
            Record::Sample(s) => {
                let key = (s.question_id.clone(), s.role, s.sample_index);
                let (qid, role, idx) = key.clone();
                place(&mut self.samples, key, s, overwrite, || {
                    format!("duplicate sample_index {idx} for question `{qid}` ({role:?})")
                })
            }
            Record::Label(l) => {
                let key = (l.question_id.clone(), l.judge);
                let (qid, judge) = key.clone();
                place(&mut self.labels, key, l, overwrite, || {
                    format!("duplicate {judge} label for question `{qid}`")
                })
            }
            Record::Embedding(e) => {
                let key = (e.question_id.clone(), e.target);
                let (qid, target) = key.clone();
                place(&mut self.embeddings, key, e, overwrite, || {
                    format!("duplicate embedding {target} for question `{qid}`")
                })
            }
            Record::Entailment(e) => {
                let key = (e.question_id.clone(), e.premise, e.hypothesis);
                let (qid, p, h) = key.clone();
                place(&mut self.entailments, key, e, overwrite, || {
                    format!("duplicate entailment {p} => {h} for question `{qid}`")
                })
            }
            Record::Cluster(c) => {
                let key = (c.question_id.clone(), c.method, c.threshold.to_bits());
                let qid = key.0.clone();
                place(&mut self.clusters, key, c, overwrite, || {
                    format!("duplicate cluster assignment for question `{qid}`")
                })
            }
            Record::Signal(s) => {
                let key = (s.question_id.clone(), s.signal.clone(), s.config_hash.clone());
                let (qid, name, _) = key.clone();
                place(&mut self.signals, key, s, overwrite, || {
                    format!("duplicate signal `{name}` for question `{qid}`")
                })
            }
            Record::Failure(f) => {
                self.failures.insert(f);
                Ok(())
            }
            Record::Stat(s) => {
                let key = (s.name.clone(), s.method.clone(), s.seed.unwrap_or(0));
                let name = key.0.clone();
                place(&mut self.stats, key, s, overwrite, || format!("duplicate stat `{name}`"))
            }
        }
    }

    /// All records in canonical order.
    pub fn records(&self) -> impl Iterator<Item = Record> + '_ {
        self.manifest
            .iter()
            .cloned()
            .map(Record::Manifest)
            .chain(self.data_records())
    }

    /// Canonical records excluding the manifest.
    fn data_records(&self) -> impl Iterator<Item = Record> + '_ {
        self.questions
            .values()
            .cloned()
            .map(Record::Question)
            .chain(self.samples.values().cloned().map(Record::Sample))
            .chain(self.embeddings.values().cloned().map(Record::Embedding))
            .chain(self.entailments.values().cloned().map(Record::Entailment))
            .chain(self.labels.values().cloned().map(Record::Label))
            .chain(self.clusters.values().cloned().map(Record::Cluster))
            .chain(self.signals.values().cloned().map(Record::Signal))
            .chain(self.failures.iter().cloned().map(Record::Failure))
            .chain(self.stats.values().cloned().map(Record::Stat))
    }

    pub fn write_to(&self, mut w: impl Write) -> io::Result<()> {
        for r in self.records() {
            writeln!(w, "{}", r.to_line())?;
        }
        Ok(())
    }

    /// Writes the canonical file through a temporary sibling and renames it
    /// into place.
    pub fn write_path(&self, path: impl AsRef<Path>) -> io::Result<()> {
        let path = path.as_ref();
        let tmp = path.with_extension("tmp-write");
        {
            let mut f = io::BufWriter::new(File::create(&tmp)?);
            self.write_to(&mut f)?;
            f.flush()?;
        }
        std::fs::rename(tmp, path)
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("records are UTF-8")
    }

    /// SHA-256 over the canonical data records. The manifest is excluded so
    /// timestamps and endpoint addresses do not change the hash.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for r in self.data_records() {
            h.update(r.to_line().as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }

    pub fn manifest(&self) -> Option<&RunManifest> {
        self.manifest.as_ref()
    }

    pub fn set_manifest(&mut self, manifest: RunManifest) {
        self.manifest = Some(manifest);
    }

    /// Samples per question: the manifest value, else the largest observed
    /// sampled index plus one.
    pub fn samples_per_question(&self) -> usize {
        if let Some(m) = &self.manifest {
            return m.n_samples;
        }
        self.samples
            .keys()
            .filter(|(_, role, _)| *role == SampleRole::Sampled)
            .map(|(_, _, i)| i + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn counts(&self) -> RunCounts {
        let by_role = |r: SampleRole| self.samples.keys().filter(|k| k.1 == r).count();
        let labeled: BTreeSet<&String> = self.labels.keys().map(|(q, _)| q).collect();
        RunCounts {
            questions: self.questions.len(),
            samples: by_role(SampleRole::Sampled),
            greedy: by_role(SampleRole::Greedy),
            probes: by_role(SampleRole::Probe),
            labels: self.labels.len(),
            labeled_questions: labeled.len(),
            embeddings: self.embeddings.len(),
            entailments: self.entailments.len(),
        }
    }

    pub fn questions(&self) -> impl Iterator<Item = &QuestionRecord> {
        self.questions.values()
    }

    pub fn question(&self, id: &str) -> Option<&QuestionRecord> {
        self.questions.get(id)
    }

    pub fn question_ids(&self) -> Vec<String> {
        self.questions.keys().cloned().collect()
    }

    fn role_range<'a>(
        &'a self,
        question_id: &str,
        role: SampleRole,
    ) -> impl Iterator<Item = &'a ResponseSample> + 'a {
        let lo = (question_id.to_string(), role, 0usize);
        let hi = (question_id.to_string(), role, usize::MAX);
        self.samples.range(lo..=hi).map(|(_, s)| s)
    }

    /// Sampled responses of a question ordered by sample index.
    pub fn samples_for(&self, question_id: &str) -> Vec<&ResponseSample> {
        self.role_range(question_id, SampleRole::Sampled).collect()
    }

    pub fn greedy(&self, question_id: &str) -> Option<&ResponseSample> {
        self.role_range(question_id, SampleRole::Greedy).next()
    }

    pub fn probe(&self, question_id: &str) -> Option<&ResponseSample> {
        self.role_range(question_id, SampleRole::Probe).next()
    }

    pub fn all_samples(&self) -> impl Iterator<Item = &ResponseSample> {
        self.samples.values()
    }

    pub fn label(&self, question_id: &str, judge: Judge) -> Option<&LabelRecord> {
        self.labels.get(&(question_id.to_string(), judge))
    }

    /// The label used for evaluation: the requested judge, or when none is
    /// requested the highest-priority judge present (human, llm-judge,
    /// gold-template, word-overlap).
    pub fn resolved_label(&self, question_id: &str, judge: Option<Judge>) -> Option<Label> {
        if let Some(j) = judge {
            return self.label(question_id, j).map(|l| l.label);
        }
        [Judge::Human, Judge::LlmJudge, Judge::GoldTemplate, Judge::WordOverlap]
            .into_iter()
            .find_map(|j| self.label(question_id, j).map(|l| l.label))
    }

    pub fn has_labels(&self) -> bool {
        !self.labels.is_empty()
    }

    pub fn embedding(&self, question_id: &str, target: TextRef) -> Option<&[f64]> {
        self.embeddings
            .get(&(question_id.to_string(), target))
            .map(|e| e.vector.as_slice())
    }

    pub fn has_embeddings(&self) -> bool {
        !self.embeddings.is_empty()
    }

    pub fn entailment(&self, question_id: &str, premise: TextRef, hypothesis: TextRef) -> Option<f64> {
        self.entailments
            .get(&(question_id.to_string(), premise, hypothesis))
            .map(|e| e.probability)
    }

    pub fn has_entailments(&self) -> bool {
        !self.entailments.is_empty()
    }

    pub fn clusters(&self) -> impl Iterator<Item = &ClusterAssignment> {
        self.clusters.values()
    }

    pub fn signals(&self) -> impl Iterator<Item = &SignalRecord> {
        self.signals.values()
    }

    pub fn failures(&self) -> impl Iterator<Item = &FailureRecord> {
        self.failures.iter()
    }

    /// Drops failure records of a question stage that has since succeeded.
    pub fn clear_failures(&mut self, question_id: &str, stage: &str) {
        self.failures
            .retain(|f| !(f.question_id == question_id && f.stage == stage));
    }

    pub fn stats(&self) -> impl Iterator<Item = &StatReport> {
        self.stats.values()
    }

    /// Drops every derived record (clusters, signals, stats) so they can be
    /// recomputed.
    pub fn clear_derived(&mut self) {
        self.clusters.clear();
        self.signals.clear();
        self.stats.clear();
    }

    /// Attaches labels from a label file. Every label must reference a known
    /// question; nothing is written if any does not. Re-labelling with the
    /// same judge overwrites.
    pub fn merge_labels(
        &mut self,
        path: impl AsRef<Path>,
        judge: Judge,
    ) -> Result<LabelMergeCounts, StoreError> {
        let reader = BufReader::new(File::open(path)?);
        let mut incoming = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let value: serde_json::Value =
                serde_json::from_str(&line).map_err(|e| StoreError::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            let parsed = parse_label_line(value, judge).map_err(|message| StoreError::Parse {
                line: i + 1,
                message,
            })?;
            incoming.push(parsed);
        }
        self.merge_label_records(incoming)
    }

    pub fn merge_label_records(
        &mut self,
        labels: Vec<LabelRecord>,
    ) -> Result<LabelMergeCounts, StoreError> {
        if let Some(bad) = labels
            .iter()
            .find(|l| !self.questions.contains_key(&l.question_id))
        {
            return Err(StoreError::Reference(bad.question_id.clone()));
        }
        let written = labels.len();
        for l in labels {
            self.upsert(Record::Label(l))?;
        }
        Ok(LabelMergeCounts {
            written,
            labeled_questions: self.counts().labeled_questions,
        })
    }

    /// Every invariant violation with a record locator. Empty iff the run is
    /// consistent.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |locator: String, message: String| out.push(Violation { locator, message });
        let known = |qid: &str| self.questions.contains_key(qid);

        if let Some(m) = &self.manifest {
            if m.n_samples == 0 {
                push("manifest".into(), "N must be at least 1".into());
            }
        }
        for q in self.questions.values() {
            if q.text.trim().is_empty() {
                push(format!("question {}", q.question_id), "empty question text".into());
            }
        }

        let n = self.samples_per_question();
        for q in self.questions.keys() {
            let present: BTreeSet<usize> = self
                .role_range(q, SampleRole::Sampled)
                .map(|s| s.sample_index)
                .collect();
            for idx in 0..n {
                if !present.contains(&idx) {
                    push(
                        format!("question {q}"),
                        format!("missing sample {idx} of {n}"),
                    );
                }
            }
        }

        for s in self.samples.values() {
            let loc = format!("sample {}/{:?}/{}", s.question_id, s.role, s.sample_index);
            if !known(&s.question_id) {
                push(loc.clone(), "references unknown question".into());
            }
            if s.role == SampleRole::Sampled && n > 0 && s.sample_index >= n {
                push(loc.clone(), format!("sample_index outside 0..{n}"));
            }
            if !(s.decoding.top_p > 0.0 && s.decoding.top_p <= 1.0) {
                push(loc.clone(), format!("top_p {} outside (0, 1]", s.decoding.top_p));
            }
            if s.decoding.temperature < 0.0 {
                push(loc.clone(), "negative temperature".into());
            }
            if s.decoding.max_tokens == 0 {
                push(loc.clone(), "max_tokens must be positive".into());
            }
            for (t, tok) in s.token_logprobs.iter().flatten().enumerate() {
                let tloc = format!("{loc} token {t} `{}`", tok.token_text);
                if tok.chosen_logprob > 0.0 || tok.chosen_logprob.is_nan() {
                    push(tloc.clone(), format!("logprob {} is positive", tok.chosen_logprob));
                }
                if let Some(a) = tok
                    .top_alternatives
                    .iter()
                    .filter(|a| a.token != tok.token_text)
                    .find(|a| a.logprob > 0.0 || a.logprob.is_nan())
                {
                    push(
                        tloc.clone(),
                        format!("alternative `{}` has positive logprob {}", a.token, a.logprob),
                    );
                }
                if tok.top_alternatives.len() > MAX_ALTERNATIVES {
                    push(
                        tloc.clone(),
                        format!("{} alternatives exceed {MAX_ALTERNATIVES}", tok.top_alternatives.len()),
                    );
                }
                if !tok.chosen_listed() {
                    push(tloc, "chosen token missing from alternatives".into());
                }
            }
        }

        for (qid, judge) in self.labels.keys() {
            if !known(qid) {
                push(format!("label {qid}/{judge}"), "references unknown question".into());
            }
        }
        let mut dim = None;
        for ((qid, target), e) in &self.embeddings {
            let loc = format!("embedding {qid}/{target}");
            if !known(qid) {
                push(loc.clone(), "references unknown question".into());
            }
            match dim {
                None => dim = Some(e.vector.len()),
                Some(d) if d != e.vector.len() => push(
                    loc.clone(),
                    format!("dimension {} differs from run dimension {d}", e.vector.len()),
                ),
                _ => {}
            }
            if e.vector.iter().any(|x| !x.is_finite()) {
                push(loc, "non-finite component".into());
            }
        }
        if let (Some(m), Some(d)) = (&self.manifest, dim) {
            if m.embedding_dim.is_some_and(|md| md != d) {
                push("manifest".into(), format!("embedding_dim differs from stored vectors ({d})"));
            }
        }
        for ((qid, p, h), e) in &self.entailments {
            let loc = format!("entailment {qid}/{p}=>{h}");
            if !known(qid) {
                push(loc.clone(), "references unknown question".into());
            }
            if !(0.0..=1.0).contains(&e.probability) {
                push(loc, format!("probability {} outside [0, 1]", e.probability));
            }
        }
        for c in self.clusters.values() {
            let loc = format!("cluster {}/{:?}", c.question_id, c.method);
            if !known(&c.question_id) {
                push(loc.clone(), "references unknown question".into());
            }
            if let Err(e) = c.check() {
                push(loc, e);
            }
        }
        for s in self.signals.values() {
            if !known(&s.question_id) {
                push(
                    format!("signal {}/{}", s.question_id, s.signal),
                    "references unknown question".into(),
                );
            }
        }
        out
    }
}

/// Accepts either a full label record or `{question_id, label}` with the judge
/// taken from the caller.
fn parse_label_line(value: serde_json::Value, judge: Judge) -> Result<LabelRecord, String> {
    let obj = value.as_object().ok_or("label line is not a JSON object")?;
    if let Some(kind) = obj.get("kind").and_then(|k| k.as_str()) {
        if kind != "label" {
            return Err(format!("expected kind `label`, found `{kind}`"));
        }
    }
    let question_id = obj
        .get("question_id")
        .and_then(|v| v.as_str())
        .ok_or("missing question_id")?
        .to_string();
    let label: Label = serde_json::from_value(obj.get("label").cloned().ok_or("missing label")?)
        .map_err(|e| format!("bad label: {e}"))?;
    let judge_detail = obj
        .get("judge_detail")
        .and_then(|v| v.as_str())
        .unwrap_or_default()
        .to_string();
    Ok(LabelRecord {
        question_id,
        label,
        judge,
        judge_detail,
    })
}

#[cfg(test)]
mod tests;
