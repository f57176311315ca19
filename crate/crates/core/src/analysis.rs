//! Run-level computations that combine the store with the per-question
//! modules: clustering every question, and assembling the signal table the
//! evaluation commands consume.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use thiserror::Error;

use crate::boundary::{self, BoundaryError, EmbeddingIndex};
use crate::clustering::{
    self, ClusterAssignment, ClusterError, ClusterMethod, EntailmentAggregation, HomogenizationStats,
    SimilarityMatrix, SweepRow,
};
use crate::config::{ClusteringConfig, SignalConfig, ToolConfig};
use crate::signals::{self, SignalError, ENTROPY_FEATURE_NAMES, TEXT_FEATURE_NAMES};
use crate::store::{Judge, Label, RunStore, SignalRecord, TextRef};
use crate::vector::{self, ShapeError};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{what} missing for question `{question_id}`; run `homogen {command}` first")]
    Missing {
        what: String,
        question_id: String,
        command: &'static str,
    },
    #[error("run has no questions with sampled responses")]
    Empty,
    #[error("unknown signal `{0}`")]
    UnknownSignal(String),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
}

fn missing(what: impl Into<String>, qid: &str, command: &'static str) -> AnalysisError {
    AnalysisError::Missing {
        what: what.into(),
        question_id: qid.to_string(),
        command,
    }
}

/// Questions that have at least one sampled response, in id order.
pub fn sampled_question_ids(store: &RunStore) -> Vec<String> {
    store
        .question_ids()
        .into_iter()
        .filter(|q| !store.samples_for(q).is_empty())
        .collect()
}

/// Embeddings of a question's sampled responses, in sample order.
pub fn sample_embeddings(store: &RunStore, qid: &str) -> Result<Vec<Vec<f64>>, AnalysisError> {
    store
        .samples_for(qid)
        .iter()
        .map(|s| {
            store
                .embedding(qid, TextRef::Sample(s.sample_index))
                .map(<[f64]>::to_vec)
                .ok_or_else(|| missing(format!("embedding of sample {}", s.sample_index), qid, "embed"))
        })
        .collect()
}

/// Similarity matrix over a question's sampled responses.
pub fn similarity_matrix(
    store: &RunStore,
    qid: &str,
    method: ClusterMethod,
    aggregation: EntailmentAggregation,
) -> Result<SimilarityMatrix, AnalysisError> {
    let samples = store.samples_for(qid);
    match method {
        ClusterMethod::Jaccard => {
            let texts: Vec<&str> = samples.iter().map(|s| s.text.as_str()).collect();
            Ok(SimilarityMatrix::jaccard(&texts))
        }
        ClusterMethod::Embedding => Ok(SimilarityMatrix::cosine(&sample_embeddings(store, qid)?)?),
        ClusterMethod::Entailment => {
            let n = samples.len();
            let mut scores = vec![vec![1.0; n]; n];
            for (i, a) in samples.iter().enumerate() {
                for (j, b) in samples.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    let (pa, pb) = (TextRef::Sample(a.sample_index), TextRef::Sample(b.sample_index));
                    scores[i][j] = store.entailment(qid, pa, pb).ok_or_else(|| {
                        missing(format!("entailment {pa} => {pb}"), qid, "entail")
                    })?;
                }
            }
            Ok(SimilarityMatrix::entailment(&scores, aggregation)?)
        }
    }
}

/// Clusters every sampled question with one method.
pub fn cluster_run(
    store: &RunStore,
    method: ClusterMethod,
    threshold: f64,
    aggregation: EntailmentAggregation,
) -> Result<Vec<ClusterAssignment>, AnalysisError> {
    sampled_question_ids(store)
        .iter()
        .map(|q| {
            let m = similarity_matrix(store, q, method, aggregation)?;
            Ok(ClusterAssignment::new(q.clone(), method, threshold, m.cluster(method.linkage(), threshold)))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct MethodDiagnosis {
    pub method: ClusterMethod,
    pub threshold: f64,
    pub stats: HomogenizationStats,
    pub mean_se: f64,
    pub assignments: Vec<ClusterAssignment>,
    /// Empty unless a sweep was requested.
    pub sweep: Vec<SweepRow>,
}

/// SCR, mean cluster count and mean SE for one method, with an optional
/// threshold sweep.
pub fn diagnose_method(
    store: &RunStore,
    cfg: &ClusteringConfig,
    method: ClusterMethod,
    sweep: Option<&[f64]>,
) -> Result<MethodDiagnosis, AnalysisError> {
    let ids = sampled_question_ids(store);
    if ids.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let threshold = cfg.threshold(method);
    let matrices = ids
        .iter()
        .map(|q| similarity_matrix(store, q, method, cfg.entailment_aggregation))
        .collect::<Result<Vec<_>, _>>()?;
    let assignments: Vec<ClusterAssignment> = ids
        .iter()
        .zip(&matrices)
        .map(|(q, m)| ClusterAssignment::new(q.clone(), method, threshold, m.cluster(method.linkage(), threshold)))
        .collect();
    let stats = clustering::assignment_stats(&assignments)?;
    let ses: Vec<f64> = assignments
        .iter()
        .map(|a| signals::semantic_entropy(&a.partition()).se)
        .collect();
    let sweep = match sweep {
        Some(ts) => clustering::threshold_sweep(&matrices, method.linkage(), ts)?,
        None => Vec::new(),
    };
    Ok(MethodDiagnosis {
        method,
        threshold,
        stats,
        mean_se: vector::mean(&ses),
        assignments,
        sweep,
    })
}

/// One named per-question score. Higher values mean more uncertain.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalColumn {
    pub name: String,
    pub values: Vec<Option<f64>>,
    /// Why the whole column is empty, when it is.
    pub unavailable: Option<String>,
}

impl SignalColumn {
    fn new(name: impl Into<String>, n: usize) -> Self {
        Self {
            name: name.into(),
            values: vec![None; n],
            unavailable: None,
        }
    }

    pub fn available(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalTable {
    pub question_ids: Vec<String>,
    pub columns: Vec<SignalColumn>,
    /// Positive = incorrect; `None` for unlabeled or ambiguous questions.
    pub incorrect: Vec<Option<bool>>,
}

pub const B1_PREFIX: &str = "b1_";
pub const TEXT_PREFIX: &str = "txt_";

/// Signals derived from one clustering method.
pub fn cluster_signal_names(method: ClusterMethod) -> [String; 3] {
    let m = method.name();
    [format!("se_{m}"), format!("nc_{m}"), format!("at_{m}")]
}

impl SignalTable {
    pub fn len(&self) -> usize {
        self.question_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.question_ids.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<&SignalColumn> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&SignalColumn, AnalysisError> {
        self.column(name)
            .ok_or_else(|| AnalysisError::UnknownSignal(name.to_string()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn has_labels(&self) -> bool {
        self.incorrect.iter().any(Option::is_some)
    }

    /// Rows where every listed column and the label are present.
    pub fn complete_rows(&self, names: &[&str]) -> Result<Vec<usize>, AnalysisError> {
        let cols = names
            .iter()
            .map(|n| self.require(n))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((0..self.len())
            .filter(|&i| self.incorrect[i].is_some() && cols.iter().all(|c| c.values[i].is_some()))
            .collect())
    }

    pub fn to_records(&self, config_hash: &str) -> Vec<SignalRecord> {
        let mut out = Vec::new();
        for col in &self.columns {
            for (qid, v) in self.question_ids.iter().zip(&col.values) {
                if let Some(v) = v {
                    out.push(SignalRecord {
                        question_id: qid.clone(),
                        signal: col.name.clone(),
                        value: *v,
                        config_hash: config_hash.to_string(),
                    });
                }
            }
        }
        out
    }

    /// Rebuilds a table from the signal records stored in a run. With a
    /// `config_hash`, only records computed under that configuration are
    /// used.
    pub fn from_store(store: &RunStore, config_hash: Option<&str>, judge: Option<Judge>) -> Self {
        let question_ids = store.question_ids();
        let index: BTreeMap<&str, usize> = question_ids
            .iter()
            .enumerate()
            .map(|(i, q)| (q.as_str(), i))
            .collect();
        let mut by_name: BTreeMap<String, SignalColumn> = BTreeMap::new();
        for r in store.signals() {
            if config_hash.is_some_and(|h| h != r.config_hash) {
                continue;
            }
            let Some(&row) = index.get(r.question_id.as_str()) else {
                continue;
            };
            by_name
                .entry(r.signal.clone())
                .or_insert_with(|| SignalColumn::new(r.signal.clone(), question_ids.len()))
                .values[row] = Some(r.value);
        }
        let incorrect = labels(store, &question_ids, judge);
        Self {
            question_ids,
            columns: by_name.into_values().collect(),
            incorrect,
        }
    }
}

fn labels(store: &RunStore, ids: &[String], judge: Option<Judge>) -> Vec<Option<bool>> {
    ids.iter()
        .map(|q| store.resolved_label(q, judge).and_then(|l| l.is_incorrect()))
        .collect()
}

/// Median token entropy over every greedy response of the run.
pub fn run_median_entropy(store: &RunStore, ids: &[String]) -> Option<f64> {
    let mut all = Vec::new();
    for q in ids {
        if let Some(Ok(h)) = store.greedy(q).map(signals::response_entropies) {
            all.extend(h);
        }
    }
    vector::median(&all)
}

/// Computes every signal the run's data supports. Columns whose inputs are
/// absent for all questions carry an `unavailable` reason instead of
/// failing the whole table.
pub fn compute_signals(
    store: &RunStore,
    cfg: &ToolConfig,
    pool: Option<&EmbeddingIndex>,
    judge: Option<Judge>,
) -> Result<SignalTable, AnalysisError> {
    let ids = sampled_question_ids(store);
    if ids.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let n = ids.len();
    let mut columns = Vec::new();

    columns.extend(b1_columns(store, &ids));
    columns.extend(text_columns(store, &ids));

    for method in ClusterMethod::ALL {
        let names = cluster_signal_names(method);
        let mut cols: Vec<SignalColumn> = names.iter().map(|nm| SignalColumn::new(nm.clone(), n)).collect();
        match diagnose_method(store, &cfg.clustering, method, None) {
            Ok(d) => {
                for (row, a) in d.assignments.iter().enumerate() {
                    let p = a.partition();
                    cols[0].values[row] = Some(signals::semantic_entropy(&p).se);
                    cols[1].values[row] = Some(p.num_clusters() as f64);
                    cols[2].values[row] = Some(signals::alignment_tax(&p).value);
                }
            }
            Err(AnalysisError::Missing { .. }) => {
                let reason = format!("{} clustering needs `homogen {}`", method.name(), needs(method));
                for c in &mut cols {
                    c.unavailable = Some(reason.clone());
                }
            }
            Err(e) => return Err(e),
        }
        columns.extend(cols);
    }

    columns.push(sindex_column(store, &ids, &cfg.signals)?);
    columns.push(selfcheck_column(store, &ids, &cfg.signals)?);
    columns.push(ptrue_column(store, &ids));
    columns.push(density_column(store, &ids, &cfg.signals, pool)?);
    columns.push(freshness_column(store, &ids, &cfg.signals));
    columns.push(rupture_column(store, &ids)?);
    columns.push(grounding_column(store, &ids)?);

    for c in &mut columns {
        if c.unavailable.is_none() && c.available() == 0 {
            c.unavailable = Some("no question has the required inputs".into());
        }
    }
    let incorrect = labels(store, &ids, judge);
    Ok(SignalTable {
        question_ids: ids,
        columns,
        incorrect,
    })
}

fn needs(method: ClusterMethod) -> &'static str {
    match method {
        ClusterMethod::Jaccard => "sample",
        ClusterMethod::Embedding => "embed",
        ClusterMethod::Entailment => "entail",
    }
}

fn b1_columns(store: &RunStore, ids: &[String]) -> Vec<SignalColumn> {
    let mut cols: Vec<SignalColumn> = ENTROPY_FEATURE_NAMES
        .iter()
        .map(|f| SignalColumn::new(format!("{B1_PREFIX}{f}"), ids.len()))
        .collect();
    let Some(median) = run_median_entropy(store, ids) else {
        for c in &mut cols {
            c.unavailable = Some("no greedy response with token logprobs".into());
        }
        return cols;
    };
    for (row, q) in ids.iter().enumerate() {
        let Some(g) = store.greedy(q) else { continue };
        let Ok(f) = signals::entropy_features(g, median) else {
            continue;
        };
        for (c, v) in cols.iter_mut().zip(f.as_vec()) {
            c.values[row] = Some(v);
        }
    }
    cols
}

fn text_columns(store: &RunStore, ids: &[String]) -> Vec<SignalColumn> {
    let mut cols: Vec<SignalColumn> = TEXT_FEATURE_NAMES
        .iter()
        .map(|f| SignalColumn::new(format!("{TEXT_PREFIX}{f}"), ids.len()))
        .collect();
    for (row, q) in ids.iter().enumerate() {
        let Some(question) = store.question(q) else { continue };
        let answer = store.greedy(q).map(|g| g.text.as_str());
        for (c, v) in cols.iter_mut().zip(signals::text_features(&question.text, answer)) {
            c.values[row] = Some(v);
        }
    }
    cols
}

fn sindex_column(store: &RunStore, ids: &[String], cfg: &SignalConfig) -> Result<SignalColumn, AnalysisError> {
    let mut col = SignalColumn::new("sindex", ids.len());
    for (row, q) in ids.iter().enumerate() {
        let Ok(emb) = sample_embeddings(store, q) else { continue };
        let p = signals::greedy_single_pass(&emb, cfg.sindex_similarity)?;
        col.values[row] = Some(signals::sindex_score(&p, &emb)?);
    }
    if col.available() == 0 {
        col.unavailable = Some("needs sample embeddings (`homogen embed`)".into());
    }
    Ok(col)
}

fn selfcheck_column(store: &RunStore, ids: &[String], cfg: &SignalConfig) -> Result<SignalColumn, AnalysisError> {
    let mut col = SignalColumn::new("selfcheck", ids.len());
    for (row, q) in ids.iter().enumerate() {
        let Some(g) = store.embedding(q, TextRef::Greedy) else { continue };
        let Ok(mut emb) = sample_embeddings(store, q) else { continue };
        emb.truncate(cfg.selfcheck_k.max(1));
        col.values[row] = Some(signals::selfcheck_score(g, &emb)?.score);
    }
    if col.available() == 0 {
        col.unavailable = Some("needs greedy and sample embeddings (`homogen embed`)".into());
    }
    Ok(col)
}

fn ptrue_column(store: &RunStore, ids: &[String]) -> SignalColumn {
    let mut col = SignalColumn::new("ptrue", ids.len());
    for (row, q) in ids.iter().enumerate() {
        if let Some(Ok(p)) = store.probe(q).map(signals::ptrue_score) {
            col.values[row] = Some(p.uncertainty());
        }
    }
    if col.available() == 0 {
        col.unavailable = Some("no P(True) probe responses (`homogen sample --probe`)".into());
    }
    col
}

/// `1 - rho`, so sparse neighbourhoods score high.
fn density_column(
    store: &RunStore,
    ids: &[String],
    cfg: &SignalConfig,
    pool: Option<&EmbeddingIndex>,
) -> Result<SignalColumn, AnalysisError> {
    let mut col = SignalColumn::new("b2_density", ids.len());
    let own;
    let pool = match pool {
        Some(p) => p,
        None => {
            let mut idx = EmbeddingIndex::new();
            for q in store.question_ids() {
                if let Some(e) = store.embedding(&q, TextRef::Question) {
                    idx.push(q, e)?;
                }
            }
            own = idx;
            &own
        }
    };
    if pool.len() <= cfg.density_k {
        col.unavailable = Some(format!(
            "density pool has {} vectors, needs more than k = {}",
            pool.len(),
            cfg.density_k
        ));
        return Ok(col);
    }
    for (row, q) in ids.iter().enumerate() {
        let Some(e) = store.embedding(q, TextRef::Question) else { continue };
        let d = boundary::b2_density(e, Some(q), pool, cfg.density_k)?;
        col.values[row] = Some(1.0 - d.rho);
    }
    if col.available() == 0 {
        col.unavailable = Some("needs question embeddings (`homogen embed`)".into());
    }
    Ok(col)
}

/// Staleness `1 - exp(-lambda * dt)` for time-sensitive questions, 0 for
/// the rest. A query dated before the cutoff counts as `dt = 0`.
fn freshness_column(store: &RunStore, ids: &[String], cfg: &SignalConfig) -> SignalColumn {
    let mut col = SignalColumn::new("b3_freshness", ids.len());
    let Some(cutoff) = cfg.knowledge_cutoff else {
        col.unavailable = Some("`signals.knowledge_cutoff` is not configured".into());
        return col;
    };
    for (row, q) in ids.iter().enumerate() {
        let Some(question) = store.question(q) else { continue };
        let Some(date) = question.timestamp_query.or(cfg.reference_date) else {
            continue;
        };
        col.values[row] = Some(staleness(&question.text, question.category.as_deref(), date, cutoff, cfg));
    }
    if col.available() == 0 {
        col.unavailable = Some("no question has a query date and `signals.reference_date` is unset".into());
    }
    col
}

pub fn staleness(text: &str, category: Option<&str>, query_date: NaiveDate, cutoff: NaiveDate, cfg: &SignalConfig) -> f64 {
    let trigger = boundary::b3_trigger(text, cutoff, &cfg.temporal_lexicon);
    if !trigger.triggered {
        return 0.0;
    }
    let query_date = query_date.max(cutoff);
    boundary::b3_freshness(cutoff, query_date, cfg.lambda_for(category))
        .map(|f| f.uncertainty())
        .unwrap_or(0.0)
}

fn rupture_column(store: &RunStore, ids: &[String]) -> Result<SignalColumn, AnalysisError> {
    let mut col = SignalColumn::new("b4_rupture", ids.len());
    for (row, q) in ids.iter().enumerate() {
        let (Some(a), Some(b)) = (store.embedding(q, TextRef::EntityA), store.embedding(q, TextRef::EntityB))
        else {
            continue;
        };
        col.values[row] = Some(boundary::b4_rupture(a, b)?.score);
    }
    if col.available() == 0 {
        col.unavailable = Some("needs entity-pair embeddings (`homogen embed`)".into());
    }
    Ok(col)
}

/// Oracle mode: references are the gold answers.
fn grounding_column(store: &RunStore, ids: &[String]) -> Result<SignalColumn, AnalysisError> {
    let mut col = SignalColumn::new("b5_grounding", ids.len());
    for (row, q) in ids.iter().enumerate() {
        let Some(golds) = store.question(q).and_then(|x| x.gold_answers.as_ref()) else {
            continue;
        };
        let scores: Option<Vec<f64>> = (0..golds.len())
            .map(|i| store.entailment(q, TextRef::Reference(i), TextRef::Greedy))
            .collect();
        let Some(scores) = scores.filter(|s| !s.is_empty()) else { continue };
        col.values[row] = Some(boundary::grounding_from_scores(&scores)?.uncertainty());
    }
    if col.available() == 0 {
        col.unavailable = Some("needs reference entailments (`homogen entail --references`)".into());
    }
    Ok(col)
}

fn words(text: &str) -> Vec<String> {
    clustering::normalize_text(text)
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

/// Token-level F1 between two texts (bag of lowercase alphanumeric words).
pub fn word_overlap_f1(answer: &str, reference: &str) -> f64 {
    let a = words(answer);
    let r = words(reference);
    if a.is_empty() || r.is_empty() {
        return if a.is_empty() && r.is_empty() { 1.0 } else { 0.0 };
    }
    let mut pool: BTreeMap<&str, usize> = BTreeMap::new();
    for w in &r {
        *pool.entry(w.as_str()).or_insert(0) += 1;
    }
    let mut common = 0usize;
    for w in &a {
        if let Some(c) = pool.get_mut(w.as_str()).filter(|c| **c > 0) {
            *c -= 1;
            common += 1;
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / a.len() as f64;
    let recall = common as f64 / r.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Word-overlap judge: correct when the best F1 against any gold answer
/// reaches `min_f1`. Returns the label and the best F1.
pub fn word_overlap_label(answer: &str, golds: &[String], min_f1: f64) -> Option<(Label, f64)> {
    let best = golds
        .iter()
        .map(|g| word_overlap_f1(answer, g))
        .fold(None, |acc: Option<f64>, f| Some(acc.map_or(f, |a| a.max(f))))?;
    let label = if best >= min_f1 { Label::Correct } else { Label::Incorrect };
    Some((label, best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{Alternative, Decoding, LabelRecord, QuestionRecord, Record, ResponseSample, SampleRole, TokenLogprob};

    fn sample(q: &str, i: usize, text: &str) -> Record {
        Record::Sample(ResponseSample {
            question_id: q.into(),
            role: SampleRole::Sampled,
            sample_index: i,
            text: text.into(),
            decoding: Decoding::sampling(1.0, 1.0, 32),
            token_logprobs: None,
        })
    }

    fn greedy(q: &str, lp: &[f64]) -> Record {
        let toks = lp
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let rest = (1.0 - p.exp()).max(1e-12).ln();
                TokenLogprob::new(format!("t{i}"), p, vec![Alternative::new("x", rest)])
            })
            .collect();
        Record::Sample(ResponseSample {
            question_id: q.into(),
            role: SampleRole::Greedy,
            sample_index: 0,
            text: "answer".into(),
            decoding: Decoding::greedy(32),
            token_logprobs: Some(toks),
        })
    }

    fn store() -> RunStore {
        let mut s = RunStore::new();
        s.insert(Record::Question(QuestionRecord::new("a", "Who won the latest race?"))).unwrap();
        s.insert(Record::Question(QuestionRecord::new("b", "What is two plus two?"))).unwrap();
        for i in 0..4 {
            let text = ["Lewis Hamilton", "Max Verstappen", "nobody knows", "Charles Leclerc"][i];
            s.insert(sample("a", i, text)).unwrap();
            s.insert(sample("b", i, "Four.")).unwrap();
        }
        s.insert(greedy("a", &[-0.7, -0.7])).unwrap();
        s.insert(greedy("b", &[-0.01, -0.01])).unwrap();
        for (q, l) in [("a", Label::Incorrect), ("b", Label::Correct)] {
            s.insert(Record::Label(LabelRecord {
                question_id: q.into(),
                label: l,
                judge: Judge::Human,
                judge_detail: String::new(),
            }))
            .unwrap();
        }
        s
    }

    #[test]
    fn jaccard_diagnosis_counts_single_clusters() {
        let d = diagnose_method(&store(), &ClusteringConfig::default(), ClusterMethod::Jaccard, Some(&[0.3, 0.9]))
            .unwrap();
        assert_eq!(d.stats.questions, 2);
        assert_eq!(d.stats.scr, 0.5);
        assert_eq!(d.sweep.len(), 2);
        assert_eq!(d.assignments[1].num_clusters, 1);
    }

    #[test]
    fn embedding_method_without_embeddings_names_the_command() {
        let err = diagnose_method(&store(), &ClusteringConfig::default(), ClusterMethod::Embedding, None)
            .unwrap_err();
        assert!(err.to_string().contains("homogen embed"), "{err}");
    }

    #[test]
    fn signal_table_marks_missing_inputs() {
        let t = compute_signals(&store(), &ToolConfig::default(), None, None).unwrap();
        assert_eq!(t.question_ids, vec!["a", "b"]);
        assert_eq!(t.incorrect, vec![Some(true), Some(false)]);
        let se = t.column("se_jaccard").unwrap();
        assert_eq!(se.values[1], Some(0.0));
        assert!(se.values[0].unwrap() > 0.0);
        assert!(t.column("se_embedding").unwrap().unavailable.is_some());
        assert!(t.column("sindex").unwrap().unavailable.is_some());
        assert!(t.column("b3_freshness").unwrap().unavailable.is_some());
        let mean = t.column("b1_mean_entropy").unwrap();
        assert!(mean.values[0].unwrap() > mean.values[1].unwrap());
    }

    #[test]
    fn records_round_trip_through_store() {
        let mut s = store();
        let t = compute_signals(&s, &ToolConfig::default(), None, None).unwrap();
        for r in t.to_records("h") {
            s.upsert(Record::Signal(r)).unwrap();
        }
        let back = SignalTable::from_store(&s, Some("h"), None);
        let a = t.column("at_jaccard").unwrap();
        assert_eq!(back.column("at_jaccard").unwrap().values, a.values);
        assert!(SignalTable::from_store(&s, Some("other"), None).columns.is_empty());
    }

    #[test]
    fn staleness_needs_a_trigger() {
        let cfg = SignalConfig::default();
        let cutoff = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap();
        let later = NaiveDate::from_ymd_opt(2025, 1, 1).unwrap();
        assert_eq!(staleness("What is two plus two?", None, later, cutoff, &cfg), 0.0);
        let s = staleness("Who is the current champion?", None, later, cutoff, &cfg);
        // 366 days at a one-year half-life
        assert!((s - (1.0 - (-cfg.lambda * 366.0).exp())).abs() < 1e-12);
        assert_eq!(staleness("Who is the current champion?", None, cutoff.pred_opt().unwrap(), cutoff, &cfg), 0.0);
    }

    #[test]
    fn word_overlap_judge() {
        assert_eq!(word_overlap_f1("Paris", "paris"), 1.0);
        // 1 common word: precision 1/3, recall 1/1
        assert!((word_overlap_f1("It is Paris", "Paris") - 0.5).abs() < 1e-15);
        assert_eq!(word_overlap_f1("Lyon", "Paris"), 0.0);
        let golds = vec!["Paris".to_string(), "the city of Paris".to_string()];
        assert_eq!(word_overlap_label("Paris.", &golds, 0.5).unwrap().0, Label::Correct);
        assert_eq!(word_overlap_label("Berlin", &golds, 0.5).unwrap().0, Label::Incorrect);
        assert!(word_overlap_label("Paris", &[], 0.5).is_none());
    }
}
