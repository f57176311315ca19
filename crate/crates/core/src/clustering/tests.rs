use proptest::prelude::*;

use super::*;

fn basis(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

#[test]
fn identical_strings_form_one_cluster() {
    let rs = vec!["Paris is the capital of France."; 10];
    assert_eq!(cluster_jaccard(&rs, 0.4).num_clusters(), 1);
}

#[test]
fn disjoint_strings_stay_apart() {
    let rs = ["ab", "cd", "ef", "gh", "ij", "kl", "mn", "op", "qr", "st"];
    assert_eq!(cluster_jaccard(&rs, 0.4).num_clusters(), 10);
}

#[test]
fn empty_responses_cluster_together_only_with_each_other() {
    let rs = ["", "", "something else"];
    let p = cluster_jaccard(&rs, 0.4);
    assert_eq!(p.labels(), &[0, 0, 1]);
    let p = cluster_jaccard(&["", "text here"], 0.4);
    assert_eq!(p.num_clusters(), 2);
}

#[test]
fn agglomerative_extremes() {
    let same = vec![vec![0.6, 0.8]; 7];
    assert_eq!(cluster_agglomerative(&same, 0.85).unwrap().num_clusters(), 1);
    assert_eq!(cluster_agglomerative(&basis(6), 0.85).unwrap().num_clusters(), 6);
}

#[test]
fn agglomerative_normalizes_inputs() {
    let v = vec![vec![3.0, 4.0], vec![0.3, 0.4], vec![-4.0, 3.0]];
    assert_eq!(cluster_agglomerative(&v, 0.85).unwrap().labels(), &[0, 0, 1]);
}

#[test]
fn agglomerative_dimension_mismatch() {
    let v = vec![vec![1.0, 0.0], vec![1.0, 0.0, 0.0]];
    assert!(matches!(
        cluster_agglomerative(&v, 0.85),
        Err(ClusterError::Shape(ShapeError::Dimension { .. }))
    ));
}

#[test]
fn average_linkage_uses_mean_not_max() {
    // 0-1 very similar, 2 similar to 1 but not to 0; mean linkage of {0,1}
    // with 2 is (0.5 + 0.9) / 2 = 0.7 < 0.85.
    let m = SimilarityMatrix::from_fn(3, |i, j| match (i, j) {
        (0, 1) => 0.95,
        (1, 2) => 0.9,
        _ => 0.5,
    });
    assert_eq!(m.cluster(Linkage::Average, 0.85).labels(), &[0, 0, 1]);
    assert_eq!(m.cluster(Linkage::Single, 0.85).labels(), &[0, 0, 0]);
}

#[test]
fn agglomerative_tie_break_prefers_smallest_pair() {
    // (0,1) and (0,2) tie at 0.9; merging (0,1) first leaves 2 alone because
    // the {0,1}-2 mean is 0.45.
    let m = SimilarityMatrix::from_fn(3, |i, _| if i == 0 { 0.9 } else { 0.0 });
    assert_eq!(m.cluster(Linkage::Average, 0.85).labels(), &[0, 0, 1]);
}

#[test]
fn entailment_extremes_and_shape() {
    let ones = vec![vec![1.0; 5]; 5];
    assert_eq!(cluster_entailment(&ones, 0.5).unwrap().num_clusters(), 1);
    let eye: Vec<Vec<f64>> = basis(5);
    assert_eq!(cluster_entailment(&eye, 0.5).unwrap().num_clusters(), 5);
    let ragged = vec![vec![1.0, 0.0], vec![1.0]];
    assert!(matches!(
        cluster_entailment(&ragged, 0.5),
        Err(ClusterError::Shape(ShapeError::NotSquare { .. }))
    ));
}

#[test]
fn entailment_requires_both_directions() {
    let scores = vec![vec![1.0, 0.9], vec![0.2, 1.0]];
    assert_eq!(cluster_entailment(&scores, 0.5).unwrap().num_clusters(), 2);
    let m = SimilarityMatrix::entailment(&scores, EntailmentAggregation::Mean).unwrap();
    assert_eq!(m.cluster(Linkage::Single, 0.5).num_clusters(), 1);
}

#[test]
fn homogenization_examples() {
    let one = Partition::from_labels(&[0, 0, 0]);
    let three = Partition::from_labels(&[0, 1, 2]);
    let s = homogenization_stats([&one, &one]).unwrap();
    assert_eq!((s.scr, s.mean_nc), (1.0, 1.0));
    let s = homogenization_stats([&one, &three]).unwrap();
    assert_eq!((s.scr, s.mean_nc), (0.5, 2.0));
    assert_eq!(s.histogram.get(&3), Some(&1));
    assert_eq!(homogenization_stats(std::iter::empty()), Err(ClusterError::Empty));
}

#[test]
fn sweep_rejects_unsorted_thresholds() {
    let m = vec![SimilarityMatrix::jaccard(&["a b", "a c"])];
    assert_eq!(
        threshold_sweep(&m, Linkage::Single, &[0.5, 0.3]),
        Err(ClusterError::UnsortedThresholds)
    );
}

#[test]
fn sweep_over_identical_strings_is_all_single_cluster() {
    let m = vec![SimilarityMatrix::jaccard(&["same answer"; 5]); 3];
    for row in threshold_sweep(&m, Linkage::Single, &[0.3, 0.4, 0.5, 1.0]).unwrap() {
        assert_eq!(row.stats.scr, 1.0);
    }
}

#[test]
fn assignment_check_catches_gaps() {
    let mut a = ClusterAssignment::new("q", ClusterMethod::Jaccard, 0.4, Partition::from_labels(&[0, 1]));
    assert!(a.check().is_ok());
    a.assignment = vec![0, 2];
    assert!(a.check().is_err());
}

fn permute<T: Clone>(xs: &[T], perm: &[usize]) -> Vec<T> {
    perm.iter().map(|&i| xs[i].clone()).collect()
}

fn arb_perm(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

proptest! {
    #[test]
    fn jaccard_partition_is_permutation_invariant(
        (texts, perm) in prop::collection::vec("[abc ]{0,6}", 1..8)
            .prop_flat_map(|t| { let n = t.len(); (Just(t), arb_perm(n)) })
    ) {
        let p = cluster_jaccard(&texts, 0.4);
        let q = cluster_jaccard(&permute(&texts, &perm), 0.4);
        // Map q back to the original order before comparing.
        let mut back = vec![0; texts.len()];
        for (pos, &orig) in perm.iter().enumerate() {
            back[orig] = q.labels()[pos];
        }
        prop_assert!(p.same_partition(&Partition::from_labels(&back)));
    }

    #[test]
    fn union_find_cluster_count_monotone_in_threshold(
        texts in prop::collection::vec("[abcd ]{0,8}", 1..10),
        t1 in 0.05f64..1.0, t2 in 0.05f64..1.0,
    ) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let m = SimilarityMatrix::jaccard(&texts);
        prop_assert!(m.cluster(Linkage::Single, lo).num_clusters() <= m.cluster(Linkage::Single, hi).num_clusters());
    }

    #[test]
    fn agglomerative_is_deterministic(vs in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 1..8)) {
        let a = cluster_agglomerative(&vs, 0.5).unwrap();
        let b = cluster_agglomerative(&vs, 0.5).unwrap();
        prop_assert_eq!(a, b);
    }
}
