use super::SimilarityMatrix;

/// Average-linkage agglomerative clustering on a similarity matrix.
///
/// Clusters are identified by their smallest member index. Each step merges
/// the pair with the highest mean pairwise similarity; equal means go to the
/// lexicographically smallest `(i, j)` pair. Merging stops once no pair has
/// mean similarity `>= threshold`.
pub fn average_linkage(sim: &SimilarityMatrix, threshold: f64) -> Vec<usize> {
    let n = sim.len();
    let mut sums: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| sim.get(i, j)).collect()).collect();
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut owner: Vec<usize> = (0..n).collect();

    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..n {
                if !active[j] {
                    continue;
                }
                let avg = sums[i][j] / (size[i] * size[j]) as f64;
                if best.is_none_or(|(b, _, _)| avg > b) {
                    best = Some((avg, i, j));
                }
            }
        }
        let Some((avg, i, j)) = best else { break };
        if avg < threshold {
            break;
        }
        for k in 0..n {
            if active[k] && k != i && k != j {
                sums[i][k] += sums[j][k];
                sums[k][i] = sums[i][k];
            }
        }
        size[i] += size[j];
        active[j] = false;
        for o in owner.iter_mut() {
            if *o == j {
                *o = i;
            }
        }
    }
    super::renumber(&owner)
}
