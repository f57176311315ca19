use crate::clustering::Partition;
use crate::vector;

use super::SignalError;

/// Cosine similarity at which SINdex's greedy pass joins an existing cluster
/// (cosine distance <= 0.05).
pub const SINDEX_SIMILARITY: f64 = 0.95;

#[derive(Debug, Clone, PartialEq)]
pub struct SemanticEntropyScore {
    pub se: f64,
    pub proportions: Vec<f64>,
    pub clusters: usize,
}

/// Entropy of the cluster-size distribution. Exactly zero for one cluster.
pub fn semantic_entropy(p: &Partition) -> SemanticEntropyScore {
    let n = p.len() as f64;
    let proportions: Vec<f64> = p.cluster_sizes().iter().map(|&s| s as f64 / n).collect();
    let se = if proportions.len() <= 1 {
        0.0
    } else {
        -proportions.iter().map(|q| q * q.ln()).sum::<f64>()
    };
    SemanticEntropyScore {
        se,
        proportions,
        clusters: p.num_clusters(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentTax {
    pub value: f64,
    pub clusters: usize,
    pub n: usize,
}

/// `1 - m / N`, evaluated as `(N - m) / N` so the result is the correctly
/// rounded rational.
pub fn alignment_tax(p: &Partition) -> AlignmentTax {
    let n = p.len();
    let m = p.num_clusters();
    AlignmentTax {
        value: if n == 0 { 0.0 } else { (n - m) as f64 / n as f64 },
        clusters: m,
        n,
    }
}

/// Single pass in input order: each vector joins the first cluster whose
/// founding member has cosine similarity `>= threshold`, else starts a new
/// cluster.
pub fn greedy_single_pass(embeddings: &[Vec<f64>], threshold: f64) -> Result<Partition, SignalError> {
    vector::check_same_dim(embeddings)?;
    let mut founders: Vec<usize> = Vec::new();
    let mut labels = Vec::with_capacity(embeddings.len());
    for (i, e) in embeddings.iter().enumerate() {
        match founders
            .iter()
            .position(|&f| vector::cosine(&embeddings[f], e) >= threshold)
        {
            Some(c) => labels.push(c),
            None => {
                labels.push(founders.len());
                founders.push(i);
            }
        }
    }
    Ok(Partition::from_labels(&labels))
}

/// `-sum p'_i ln p'_i` with `p'_i = p_i * mean pairwise cosine within C_i`,
/// not renormalized. Singleton clusters have coherence 1.
pub fn sindex_score(p: &Partition, embeddings: &[Vec<f64>]) -> Result<f64, SignalError> {
    if embeddings.len() != p.len() {
        return Err(SignalError::Precondition(format!(
            "{} embeddings for {} responses",
            embeddings.len(),
            p.len()
        )));
    }
    vector::check_same_dim(embeddings)?;
    let n = p.len() as f64;
    let mut total = 0.0;
    for members in p.members() {
        let coherence = if members.len() < 2 {
            1.0
        } else {
            let mut sum = 0.0;
            let mut pairs = 0usize;
            for (a, &i) in members.iter().enumerate() {
                for &j in &members[a + 1..] {
                    sum += vector::cosine(&embeddings[i], &embeddings[j]);
                    pairs += 1;
                }
            }
            sum / pairs as f64
        };
        let adjusted = members.len() as f64 / n * coherence;
        if adjusted > 0.0 {
            total -= adjusted * adjusted.ln();
        }
    }
    Ok(total)
}

/// SINdex with its own greedy clustering at [`SINDEX_SIMILARITY`].
pub fn sindex(embeddings: &[Vec<f64>]) -> Result<f64, SignalError> {
    let p = greedy_single_pass(embeddings, SINDEX_SIMILARITY)?;
    sindex_score(&p, embeddings)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(labels: &[usize]) -> Partition {
        Partition::from_labels(labels)
    }

    #[test]
    fn single_cluster_has_zero_entropy() {
        assert_eq!(semantic_entropy(&part(&[0; 10])).se, 0.0);
    }

    #[test]
    fn even_split_is_ln2() {
        let se = semantic_entropy(&part(&[0, 0, 0, 0, 0, 1, 1, 1, 1, 1])).se;
        assert!((se - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn all_singletons_is_ln_n() {
        let labels: Vec<usize> = (0..10).collect();
        let se = semantic_entropy(&part(&labels)).se;
        assert!((se - 10f64.ln()).abs() < 1e-12);
        // Near-maximal, same regime as a diverse base model.
        assert!(se > 2.158);
    }

    #[test]
    fn alignment_tax_anchor_cases() {
        assert_eq!(alignment_tax(&part(&[0; 10])).value, 0.9);
        assert_eq!(alignment_tax(&part(&[0, 0, 0, 0, 0, 1, 1, 1, 1, 1])).value, 0.8);
        let labels: Vec<usize> = (0..10).collect();
        assert_eq!(alignment_tax(&part(&labels)).value, 0.0);
    }

    #[test]
    fn sindex_of_identical_vectors_is_zero() {
        let e = vec![vec![1.0, 0.0]; 6];
        assert_eq!(sindex(&e).unwrap(), 0.0);
    }

    #[test]
    fn sindex_two_tight_clusters_is_ln2() {
        let mut e = vec![vec![1.0, 0.0]; 5];
        e.extend(vec![vec![0.0, 1.0]; 5]);
        assert!((sindex(&e).unwrap() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn sindex_with_coherence_point_nine() {
        // Five unit vectors whose pairwise cosines are all 0.9: common axis
        // weight sqrt(0.9), orthogonal private axes with weight sqrt(0.1).
        let block = |offset: usize| -> Vec<Vec<f64>> {
            (0..5)
                .map(|i| {
                    let mut v = vec![0.0; 12];
                    v[offset] = 0.9f64.sqrt();
                    v[offset + 1 + i] = 0.1f64.sqrt();
                    v
                })
                .collect()
        };
        let mut e = block(0);
        e.extend(block(6));
        let p = part(&[0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
        let s = sindex_score(&p, &e).unwrap();
        assert!((s - (-2.0 * 0.45 * 0.45f64.ln())).abs() < 1e-12);
        assert!((s - 0.71866).abs() < 1e-5);
    }

    #[test]
    fn greedy_pass_uses_founder() {
        // b is close to a, c is close to b but not to a.
        let a = vec![1.0, 0.0];
        let b = vec![0.96, 0.28];
        let c = vec![0.8, 0.6];
        let p = greedy_single_pass(&[a, b, c], 0.95).unwrap();
        assert_eq!(p.labels(), &[0, 0, 1]);
    }
}
