//! Partitioning a question's sampled responses into semantic clusters and
//! summarising homogenization across a run.
//!
//! Three clusterers are provided:
//!
//! * [`cluster_jaccard`]: character-bigram Jaccard similarity with
//!   single-linkage union-find (default threshold 0.4).
//! * [`cluster_agglomerative`]: average-linkage merging on embedding cosine
//!   similarity (default threshold 0.85).
//! * [`cluster_entailment`]: union-find over bidirectional entailment scores
//!   (default threshold 0.5).
//!
//! All of them go through a [`SimilarityMatrix`], so a threshold sweep
//! computes pairwise similarities once.

mod agglomerative;
mod bigram;
mod union_find;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vector::{self, ShapeError};

pub use agglomerative::average_linkage;
pub use bigram::{char_bigrams, jaccard_similarity, normalize_text, BigramSet};
pub use union_find::DisjointSet;

pub const DEFAULT_JACCARD_THRESHOLD: f64 = 0.4;
pub const DEFAULT_EMBEDDING_THRESHOLD: f64 = 0.85;
pub const DEFAULT_ENTAILMENT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("no questions to summarise")]
    Empty,
    #[error("thresholds must be sorted ascending")]
    UnsortedThresholds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterMethod {
    Jaccard,
    Embedding,
    Entailment,
}

impl ClusterMethod {
    pub const ALL: [ClusterMethod; 3] = [Self::Jaccard, Self::Embedding, Self::Entailment];

    pub fn name(self) -> &'static str {
        match self {
            Self::Jaccard => "jaccard",
            Self::Embedding => "embedding",
            Self::Entailment => "entailment",
        }
    }

    pub fn default_threshold(self) -> f64 {
        match self {
            Self::Jaccard => DEFAULT_JACCARD_THRESHOLD,
            Self::Embedding => DEFAULT_EMBEDDING_THRESHOLD,
            Self::Entailment => DEFAULT_ENTAILMENT_THRESHOLD,
        }
    }

    pub fn linkage(self) -> Linkage {
        match self {
            Self::Embedding => Linkage::Average,
            _ => Linkage::Single,
        }
    }
}

impl std::str::FromStr for ClusterMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jaccard" => Ok(Self::Jaccard),
            "embedding" => Ok(Self::Embedding),
            "entailment" | "nli" => Ok(Self::Entailment),
            other => Err(format!("unknown clustering method `{other}`")),
        }
    }
}

impl std::fmt::Display for ClusterMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linkage {
    /// Union-find over every pair at or above the threshold.
    Single,
    /// Average-linkage agglomerative merging.
    Average,
}

/// How the two entailment directions are combined into one pair score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntailmentAggregation {
    #[default]
    Min,
    Mean,
}

/// Renumbers arbitrary labels by order of first occurrence.
pub(crate) fn renumber(raw: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    raw.iter()
        .map(|r| {
            let next = map.len();
            *map.entry(*r).or_insert(next)
        })
        .collect()
}

/// A partition of `N` items, labels contiguous and numbered by first
/// occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<usize>,
    num_clusters: usize,
}

impl Partition {
    pub fn from_labels(raw: &[usize]) -> Self {
        let labels = renumber(raw);
        let num_clusters = labels.iter().max().map_or(0, |m| m + 1);
        Self {
            labels,
            num_clusters,
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_clusters(&self) -> usize {
        self.num_clusters
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_clusters];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Member indices of each cluster.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_clusters];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    /// Same grouping regardless of label names. Both sides are already in
    /// first-occurrence form, so structural equality suffices.
    pub fn same_partition(&self, other: &Partition) -> bool {
        self.labels == other.labels
    }
}

/// A question's partition with method and threshold provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub question_id: String,
    pub method: ClusterMethod,
    pub threshold: f64,
    /// Cluster id of each sample, indexed by sample position.
    pub assignment: Vec<usize>,
    pub num_clusters: usize,
}

impl ClusterAssignment {
    pub fn new(question_id: impl Into<String>, method: ClusterMethod, threshold: f64, p: Partition) -> Self {
        Self {
            question_id: question_id.into(),
            method,
            threshold,
            num_clusters: p.num_clusters,
            assignment: p.labels,
        }
    }

    pub fn partition(&self) -> Partition {
        Partition::from_labels(&self.assignment)
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    /// Checks contiguity and the cluster count.
    pub fn check(&self) -> Result<(), String> {
        if self.assignment.is_empty() {
            return Err("empty assignment".into());
        }
        let m = self.num_clusters;
        if m == 0 || m > self.assignment.len() {
            return Err(format!("cluster count {m} outside 1..={}", self.assignment.len()));
        }
        let mut seen = vec![false; m];
        for &c in &self.assignment {
            if c >= m {
                return Err(format!("cluster id {c} not below {m}"));
            }
            seen[c] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err("cluster ids are not contiguous".into());
        }
        Ok(())
    }
}

/// Dense symmetric similarity matrix for one question's responses.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![1.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self { n, data }
    }

    pub fn jaccard<S: AsRef<str>>(responses: &[S]) -> Self {
        let sets: Vec<BigramSet> = responses.iter().map(|r| char_bigrams(r.as_ref())).collect();
        Self::from_fn(sets.len(), |i, j| jaccard_similarity(&sets[i], &sets[j]))
    }

    /// Cosine similarities; vectors are normalized first.
    pub fn cosine(embeddings: &[Vec<f64>]) -> Result<Self, ShapeError> {
        vector::check_same_dim(embeddings)?;
        let unit: Vec<Vec<f64>> = embeddings.iter().map(|e| vector::normalized(e)).collect();
        Ok(Self::from_fn(unit.len(), |i, j| {
            vector::dot(&unit[i], &unit[j]).clamp(-1.0, 1.0)
        }))
    }

    /// Pair scores from a square matrix; an edge between `i` and `j` uses the
    /// aggregate of entries `(i, j)` and `(j, i)`.
    pub fn entailment(scores: &[Vec<f64>], agg: EntailmentAggregation) -> Result<Self, ShapeError> {
        let n = scores.len();
        for (row, r) in scores.iter().enumerate() {
            if r.len() != n {
                return Err(ShapeError::NotSquare {
                    rows: n,
                    row,
                    cols: r.len(),
                });
            }
        }
        Ok(Self::from_fn(n, |i, j| {
            let (a, b) = (scores[i][j], scores[j][i]);
            match agg {
                EntailmentAggregation::Min => a.min(b),
                EntailmentAggregation::Mean => 0.5 * (a + b),
            }
        }))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn cluster(&self, linkage: Linkage, threshold: f64) -> Partition {
        match linkage {
            Linkage::Single => {
                let mut ds = DisjointSet::new(self.n);
                for i in 0..self.n {
                    for j in (i + 1)..self.n {
                        if self.get(i, j) >= threshold {
                            ds.union(i, j);
                        }
                    }
                }
                Partition::from_labels(&ds.labels())
            }
            Linkage::Average => Partition::from_labels(&average_linkage(self, threshold)),
        }
    }
}

pub fn cluster_jaccard<S: AsRef<str>>(responses: &[S], threshold: f64) -> Partition {
    SimilarityMatrix::jaccard(responses).cluster(Linkage::Single, threshold)
}

pub fn cluster_agglomerative(embeddings: &[Vec<f64>], threshold: f64) -> Result<Partition, ClusterError> {
    Ok(SimilarityMatrix::cosine(embeddings)?.cluster(Linkage::Average, threshold))
}

/// Union-find over pairs whose entailment score (min of the two directions)
/// reaches the threshold.
pub fn cluster_entailment(pair_scores: &[Vec<f64>], threshold: f64) -> Result<Partition, ClusterError> {
    Ok(SimilarityMatrix::entailment(pair_scores, EntailmentAggregation::Min)?
        .cluster(Linkage::Single, threshold))
}

/// Run-level homogenization summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogenizationStats {
    pub questions: usize,
    /// Fraction of questions whose responses form a single cluster.
    pub scr: f64,
    pub mean_nc: f64,
    /// Cluster count -> number of questions.
    pub histogram: BTreeMap<usize, usize>,
}

pub fn homogenization_stats<'a, I>(partitions: I) -> Result<HomogenizationStats, ClusterError>
where
    I: IntoIterator<Item = &'a Partition>,
{
    let mut histogram = BTreeMap::new();
    let mut q = 0usize;
    let mut single = 0usize;
    let mut total = 0usize;
    for p in partitions {
        let m = p.num_clusters();
        *histogram.entry(m).or_insert(0) += 1;
        q += 1;
        total += m;
        if m == 1 {
            single += 1;
        }
    }
    if q == 0 {
        return Err(ClusterError::Empty);
    }
    Ok(HomogenizationStats {
        questions: q,
        scr: single as f64 / q as f64,
        mean_nc: total as f64 / q as f64,
        histogram,
    })
}

/// Homogenization stats for [`ClusterAssignment`]s.
pub fn assignment_stats(assignments: &[ClusterAssignment]) -> Result<HomogenizationStats, ClusterError> {
    let parts: Vec<Partition> = assignments.iter().map(ClusterAssignment::partition).collect();
    homogenization_stats(&parts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub stats: HomogenizationStats,
}

/// Clusters every question at each threshold, reusing the similarity
/// matrices.
pub fn threshold_sweep(
    matrices: &[SimilarityMatrix],
    linkage: Linkage,
    thresholds: &[f64],
) -> Result<Vec<SweepRow>, ClusterError> {
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(ClusterError::UnsortedThresholds);
    }
    thresholds
        .iter()
        .map(|&t| {
            let parts: Vec<Partition> = matrices.iter().map(|m| m.cluster(linkage, t)).collect();
            Ok(SweepRow {
                threshold: t,
                stats: homogenization_stats(&parts)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests;
