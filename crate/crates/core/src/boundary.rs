//! Non-entropy boundary detectors.
//!
//! * B2 density: mean cosine similarity of a query embedding to its k
//!   nearest neighbours in a pool (exact brute-force search).
//! * B3 freshness: exponential decay `exp(-lambda * days)` plus a trigger on
//!   temporal words and years past the model cutoff.
//! * B4 rupture: cosine distance between two entity embeddings, a proxy for
//!   a missing knowledge-graph link. The ideal form scores a triple
//!   `(e1, r, e2)` against a graph; no graph is modelled here, only the proxy.
//! * B5 grounding: best entailment probability of the answer against
//!   reference answers. References are gold answers, so this runs in oracle
//!   mode.

use std::sync::OnceLock;

use chrono::NaiveDate;
use regex::Regex;
use thiserror::Error;

use crate::gateway::GatewayError;
use crate::vector::{self, ShapeError};

pub const DEFAULT_DENSITY_K: usize = 10;

/// One-year half-life, per day.
pub const DEFAULT_LAMBDA: f64 = std::f64::consts::LN_2 / 365.0;

pub const DEFAULT_TEMPORAL_LEXICON: [&str; 6] =
    ["current", "latest", "today", "now", "recent", "this year"];

#[derive(Debug, Error)]
pub enum BoundaryError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

/// Embedding pool searched by [`b2_density`]. Vectors are normalized on
/// insertion.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingIndex {
    ids: Vec<String>,
    vectors: Vec<Vec<f64>>,
}

impl EmbeddingIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, id: impl Into<String>, v: &[f64]) -> Result<(), ShapeError> {
        if let Some(first) = self.vectors.first() {
            if first.len() != v.len() {
                return Err(ShapeError::Dimension {
                    expected: first.len(),
                    got: v.len(),
                });
            }
        }
        self.ids.push(id.into());
        self.vectors.push(vector::normalized(v));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityScore {
    pub rho: f64,
    pub k: usize,
    pub neighbor_ids: Vec<String>,
}

/// Exact k-NN density. A pool entry whose id equals `query_id` is skipped.
pub fn b2_density(
    query: &[f64],
    query_id: Option<&str>,
    pool: &EmbeddingIndex,
    k: usize,
) -> Result<DensityScore, BoundaryError> {
    if k == 0 {
        return Err(BoundaryError::Precondition("k must be positive".into()));
    }
    let q = vector::normalized(query);
    let mut sims: Vec<(f64, usize)> = Vec::with_capacity(pool.len());
    for (i, (id, v)) in pool.ids.iter().zip(&pool.vectors).enumerate() {
        if query_id == Some(id.as_str()) {
            continue;
        }
        if v.len() != q.len() {
            return Err(ShapeError::Dimension {
                expected: q.len(),
                got: v.len(),
            }
            .into());
        }
        sims.push((vector::dot(&q, v).clamp(-1.0, 1.0), i));
    }
    if sims.len() < k {
        return Err(BoundaryError::Precondition(format!(
            "pool has {} candidates, fewer than k = {k}",
            sims.len()
        )));
    }
    sims.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let top = &sims[..k];
    Ok(DensityScore {
        rho: top.iter().map(|s| s.0).sum::<f64>() / k as f64,
        k,
        neighbor_ids: top.iter().map(|s| pool.ids[s.1].clone()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreshnessScore {
    pub freshness: f64,
    pub lambda: f64,
    pub delta_t_days: i64,
    pub triggered: bool,
}

impl FreshnessScore {
    /// Higher = more likely stale.
    pub fn uncertainty(&self) -> f64 {
        1.0 - self.freshness
    }
}

pub fn freshness_decay(lambda: f64, days: f64) -> f64 {
    (-lambda * days).exp()
}

pub fn b3_freshness(
    knowledge_date: NaiveDate,
    query_date: NaiveDate,
    lambda: f64,
) -> Result<FreshnessScore, BoundaryError> {
    if !(lambda >= 0.0) {
        return Err(BoundaryError::Precondition(format!("lambda {lambda} is negative")));
    }
    let days = (query_date - knowledge_date).num_days();
    if days < 0 {
        return Err(BoundaryError::Precondition(format!(
            "query date {query_date} precedes knowledge date {knowledge_date}"
        )));
    }
    Ok(FreshnessScore {
        freshness: freshness_decay(lambda, days as f64),
        lambda,
        delta_t_days: days,
        triggered: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalTrigger {
    pub triggered: bool,
    pub terms: Vec<String>,
}

fn year_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b(\d{4})\b").expect("valid regex"))
}

/// Fires on any lexicon term (word-bounded, case-insensitive) or a four-digit
/// year later than the cutoff year.
pub fn b3_trigger<S: AsRef<str>>(query: &str, cutoff: NaiveDate, lexicon: &[S]) -> TemporalTrigger {
    use chrono::Datelike;

    let lower = query.to_lowercase();
    let mut terms = Vec::new();
    for term in lexicon {
        let term = term.as_ref().to_lowercase();
        let pattern = format!(r"\b{}\b", regex::escape(&term));
        if Regex::new(&pattern).is_ok_and(|re| re.is_match(&lower)) {
            terms.push(term);
        }
    }
    for cap in year_regex().captures_iter(query) {
        let year: i32 = cap[1].parse().expect("four digits");
        if year > cutoff.year() && !terms.contains(&cap[1].to_string()) {
            terms.push(cap[1].to_string());
        }
    }
    TemporalTrigger {
        triggered: !terms.is_empty(),
        terms,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuptureScore {
    pub score: f64,
    pub entity_pair: Option<(String, String)>,
}

/// Cosine distance `1 - cos(a, b)`, clipped to `[0, 2]`.
pub fn b4_rupture(a: &[f64], b: &[f64]) -> Result<RuptureScore, BoundaryError> {
    if a.len() != b.len() {
        return Err(ShapeError::Dimension {
            expected: a.len(),
            got: b.len(),
        }
        .into());
    }
    Ok(RuptureScore {
        score: (1.0 - vector::cosine(a, b)).clamp(0.0, 2.0),
        entity_pair: None,
    })
}

// Capitalized words that are almost never entities at the start of a question.
const CAPITALIZED_STOPWORDS: [&str; 40] = [
    "a", "an", "the", "is", "are", "was", "were", "do", "does", "did", "can", "could", "will",
    "would", "should", "shall", "has", "have", "had", "who", "what", "when", "where", "why",
    "how", "which", "whose", "in", "on", "of", "at", "if", "it", "i", "to", "for", "and", "or",
    "but", "according",
];

/// Maximal runs of capitalized words, punctuation stripped. A run ends at a
/// word carrying trailing punctuation.
pub fn capitalized_spans(text: &str) -> Vec<String> {
    let mut spans = Vec::new();
    let mut current: Vec<String> = Vec::new();
    for raw in text.split_whitespace() {
        let word = raw.trim_matches(|c: char| !c.is_alphanumeric());
        let starts_upper = word.chars().next().is_some_and(char::is_uppercase);
        let stop = CAPITALIZED_STOPWORDS.contains(&word.to_lowercase().as_str());
        if starts_upper && !stop {
            current.push(word.to_string());
            let ends_clause = raw
                .chars()
                .last()
                .is_some_and(|c| matches!(c, '?' | '.' | ',' | ';' | ':' | '!'));
            if ends_clause {
                spans.push(current.join(" "));
                current.clear();
            }
        } else if !current.is_empty() {
            spans.push(current.join(" "));
            current.clear();
        }
    }
    if !current.is_empty() {
        spans.push(current.join(" "));
    }
    spans
}

/// The two longest capitalized spans, in order of appearance. Returns `None`
/// when fewer than two are found; B4 abstains for such questions.
pub fn extract_entity_pair(question: &str) -> Option<(String, String)> {
    let spans = capitalized_spans(question);
    if spans.len() < 2 {
        return None;
    }
    let mut order: Vec<usize> = (0..spans.len()).collect();
    order.sort_by(|&a, &b| {
        spans[b]
            .chars()
            .count()
            .cmp(&spans[a].chars().count())
            .then(a.cmp(&b))
    });
    let (mut i, mut j) = (order[0], order[1]);
    if i > j {
        std::mem::swap(&mut i, &mut j);
    }
    Some((spans[i].clone(), spans[j].clone()))
}

/// Anything that can score P(premise entails hypothesis).
pub trait EntailmentScorer {
    fn entailment(&self, premise: &str, hypothesis: &str) -> Result<f64, GatewayError>;
}

impl<F> EntailmentScorer for F
where
    F: Fn(&str, &str) -> Result<f64, GatewayError>,
{
    fn entailment(&self, premise: &str, hypothesis: &str) -> Result<f64, GatewayError> {
        self(premise, hypothesis)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundingScore {
    pub score: f64,
    pub best_reference: usize,
}

impl GroundingScore {
    pub fn uncertainty(&self) -> f64 {
        1.0 - self.score
    }
}

/// Best of already-computed reference entailment probabilities.
pub fn grounding_from_scores(scores: &[f64]) -> Result<GroundingScore, BoundaryError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    let (best_reference, score) =
        best.ok_or_else(|| BoundaryError::Precondition("no references".into()))?;
    Ok(GroundingScore {
        score: score.clamp(0.0, 1.0),
        best_reference,
    })
}

/// Max over references of P(reference entails answer).
pub fn b5_grounding<S: AsRef<str>>(
    answer: &str,
    references: &[S],
    scorer: &dyn EntailmentScorer,
) -> Result<GroundingScore, BoundaryError> {
    if references.is_empty() {
        return Err(BoundaryError::Precondition("empty reference list".into()));
    }
    let scores = references
        .iter()
        .map(|r| scorer.entailment(r.as_ref(), answer))
        .collect::<Result<Vec<_>, _>>()?;
    grounding_from_scores(&scores)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn date(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn pool(vs: &[Vec<f64>]) -> EmbeddingIndex {
        let mut p = EmbeddingIndex::new();
        for (i, v) in vs.iter().enumerate() {
            p.push(format!("p{i}"), v).unwrap();
        }
        p
    }

    #[test]
    fn density_identical_and_orthogonal() {
        let p = pool(&vec![vec![1.0, 0.0, 0.0]; 10]);
        assert!((b2_density(&[1.0, 0.0, 0.0], None, &p, 10).unwrap().rho - 1.0).abs() < 1e-15);
        assert_eq!(b2_density(&[0.0, 1.0, 0.0], None, &p, 10).unwrap().rho, 0.0);
    }

    #[test]
    fn density_excludes_self_and_checks_pool_size() {
        let p = pool(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let d = b2_density(&[1.0, 0.0], Some("p0"), &p, 1).unwrap();
        assert_eq!(d.neighbor_ids, vec!["p1".to_string()]);
        assert_eq!(d.rho, 0.0);
        assert!(matches!(
            b2_density(&[1.0, 0.0], Some("p0"), &p, 2),
            Err(BoundaryError::Precondition(_))
        ));
    }

    #[test]
    fn freshness_examples() {
        let d = date("2024-01-01");
        assert_eq!(b3_freshness(d, d, DEFAULT_LAMBDA).unwrap().freshness, 1.0);
        assert_eq!(b3_freshness(d, date("2030-01-01"), 0.0).unwrap().freshness, 1.0);
        let half = b3_freshness(date("2023-01-01"), date("2024-01-01"), DEFAULT_LAMBDA).unwrap();
        assert_eq!(half.delta_t_days, 365);
        assert!((half.freshness - 0.5).abs() < 1e-12);
        assert!(b3_freshness(date("2024-01-02"), d, DEFAULT_LAMBDA).is_err());
    }

    #[test]
    fn trigger_examples() {
        let cutoff = date("2024-06-30");
        let t = b3_trigger("Who is the current president?", cutoff, &DEFAULT_TEMPORAL_LEXICON);
        assert!(t.triggered);
        assert_eq!(t.terms, vec!["current".to_string()]);
        assert!(!b3_trigger("What is 2+2?", cutoff, &DEFAULT_TEMPORAL_LEXICON).triggered);
        let t = b3_trigger("Results of the 2031 election", cutoff, &DEFAULT_TEMPORAL_LEXICON);
        assert_eq!(t.terms, vec!["2031".to_string()]);
        assert!(!b3_trigger("The 1999 election", cutoff, &DEFAULT_TEMPORAL_LEXICON).triggered);
        assert!(!b3_trigger("Is snow white?", cutoff, &DEFAULT_TEMPORAL_LEXICON).triggered);
        assert!(b3_trigger("What happened this year?", cutoff, &DEFAULT_TEMPORAL_LEXICON).triggered);
    }

    #[test]
    fn rupture_examples() {
        assert_eq!(b4_rupture(&[1.0, 0.0], &[1.0, 0.0]).unwrap().score, 0.0);
        assert_eq!(b4_rupture(&[1.0, 0.0], &[-1.0, 0.0]).unwrap().score, 2.0);
        let r = b4_rupture(&[1.0, 0.0], &[0.6, 0.8]).unwrap().score;
        assert!((r - 0.4).abs() < 1e-12);
        assert!(b4_rupture(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn entity_pairs() {
        assert_eq!(
            extract_entity_pair("Did Einstein meet Newton?"),
            Some(("Einstein".into(), "Newton".into()))
        );
        assert_eq!(extract_entity_pair("what is water"), None);
        assert_eq!(
            extract_entity_pair("Paris is in France"),
            Some(("Paris".into(), "France".into()))
        );
        assert_eq!(
            extract_entity_pair("Was Marie Curie born in Warsaw or in Paris?"),
            Some(("Marie Curie".into(), "Warsaw".into()))
        );
    }

    #[test]
    fn grounding_examples() {
        let identity = |p: &str, h: &str| Ok(if p == h { 1.0 } else { 0.1 });
        let g = b5_grounding("Paris", &["Paris", "Lyon"], &identity).unwrap();
        assert_eq!((g.score, g.best_reference), (1.0, 0));
        let zero = |_: &str, _: &str| Ok(0.0);
        let g = b5_grounding("x", &["a", "b"], &zero).unwrap();
        assert_eq!((g.score, g.uncertainty()), (0.0, 1.0));
        let g = grounding_from_scores(&[0.2, 0.9, 0.4]).unwrap();
        assert_eq!((g.score, g.best_reference), (0.9, 1));
        assert!(b5_grounding::<&str>("x", &[], &zero).is_err());
    }

    #[test]
    fn grounding_propagates_transport_errors() {
        let down = |_: &str, _: &str| Err(GatewayError::Transport("connection refused".into()));
        assert!(matches!(
            b5_grounding("x", &["a"], &down),
            Err(BoundaryError::Gateway(GatewayError::Transport(_)))
        ));
    }

    fn arb_vec(d: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..1.0, d)
    }

    proptest! {
        #[test]
        fn density_pool_permutation_invariant(
            vs in prop::collection::vec(arb_vec(4), 5..15),
            q in arb_vec(4),
            k in 1usize..5,
        ) {
            let a = b2_density(&q, None, &pool(&vs), k).unwrap().rho;
            let mut rev = vs.clone();
            rev.reverse();
            let b = b2_density(&q, None, &pool(&rev), k).unwrap().rho;
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn density_monotone_when_adding_closer_vector(
            vs in prop::collection::vec(arb_vec(4), 5..15),
            q in arb_vec(4),
            k in 1usize..5,
        ) {
            let before = b2_density(&q, None, &pool(&vs), k).unwrap().rho;
            let mut more = vs.clone();
            more.push(q.clone());
            let after = b2_density(&q, None, &pool(&more), k).unwrap().rho;
            prop_assert!(after >= before - 1e-12);
        }

        #[test]
        fn freshness_decreasing_and_multiplicative(lambda in 1e-4f64..0.1, a in 0.0f64..500.0, b in 0.0f64..500.0) {
            prop_assert!(freshness_decay(lambda, a + 1.0) < freshness_decay(lambda, a));
            let lhs = freshness_decay(lambda, a) * freshness_decay(lambda, b);
            prop_assert!((lhs - freshness_decay(lambda, a + b)).abs() < 1e-12);
        }

        #[test]
        fn rupture_symmetric(a in arb_vec(5), b in arb_vec(5)) {
            prop_assert_eq!(b4_rupture(&a, &b).unwrap().score, b4_rupture(&b, &a).unwrap().score);
        }

        #[test]
        fn grounding_monotone_in_references(scores in prop::collection::vec(0.0f64..1.0, 1..10), extra in 0.0f64..1.0) {
            let before = grounding_from_scores(&scores).unwrap().score;
            let mut more = scores.clone();
            more.push(extra);
            prop_assert!(grounding_from_scores(&more).unwrap().score >= before);
        }
    }
}
