use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use homogen_core::cascade::{run_cascade, BoundaryConfig};
use homogen_core::clustering::{cluster_agglomerative, cluster_entailment, cluster_jaccard};
use homogen_core::signals::sindex;
use homogen_core::stats::{auroc, bootstrap_ci, delong, distance_correlation, Statistic};
use homogen_core::ScoredSample;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn responses(r: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    let words = ["paris", "the", "capital", "is", "france", "city", "of", "lyon", "answer", "probably"];
    (0..n)
        .map(|_| (0..r.gen_range(3..12)).map(|_| words[r.gen_range(0..words.len())]).collect::<Vec<_>>().join(" "))
        .collect()
}

fn embeddings(r: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect()).collect()
}

fn samples(r: &mut ChaCha8Rng, n: usize) -> Vec<ScoredSample> {
    (0..n)
        .map(|_| {
            let y = r.gen_bool(0.4);
            ScoredSample::new(r.gen::<f64>() + if y { 0.3 } else { 0.0 }, y)
        })
        .collect()
}

fn clustering(c: &mut Criterion) {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    let mut g = c.benchmark_group("clustering");
    for n in [10, 20] {
        let texts = responses(&mut r, n);
        let emb = embeddings(&mut r, n, 768);
        let ent: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| r.gen()).collect()).collect();
        g.bench_with_input(BenchmarkId::new("jaccard", n), &texts, |b, t| b.iter(|| cluster_jaccard(black_box(t), 0.4)));
        g.bench_with_input(BenchmarkId::new("agglomerative", n), &emb, |b, e| {
            b.iter(|| cluster_agglomerative(black_box(e), 0.85).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("entailment", n), &ent, |b, e| {
            b.iter(|| cluster_entailment(black_box(e), 0.5).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("sindex", n), &emb, |b, e| b.iter(|| sindex(black_box(e)).unwrap()));
    }
    g.finish();
}

fn statistics(c: &mut Criterion) {
    let mut r = ChaCha8Rng::seed_from_u64(2);
    let s = samples(&mut r, 800);
    let t = samples(&mut r, 800);
    let t: Vec<ScoredSample> = t.iter().zip(&s).map(|(x, y)| ScoredSample::new(x.score, y.incorrect)).collect();
    let mut g = c.benchmark_group("stats");
    g.bench_function("auroc_800", |b| b.iter(|| auroc(black_box(&s)).unwrap()));
    g.bench_function("delong_paired_800", |b| b.iter(|| delong(black_box(&s), black_box(&t), true).unwrap()));
    g.sample_size(10);
    g.bench_function("bootstrap_auroc_800x1000", |b| b.iter(|| bootstrap_ci(black_box(&s), Statistic::Auroc, 1000, 0).unwrap()));
    let x: Vec<f64> = s.iter().map(|v| v.score).collect();
    let y: Vec<f64> = t.iter().map(|v| v.score).collect();
    g.bench_function("dcor_800x100", |b| b.iter(|| distance_correlation(black_box(&x), black_box(&y), 100, 0).unwrap()));
    g.finish();
}

fn cascade(c: &mut Criterion) {
    let stages = vec![
        BoundaryConfig::new("b1", 0.0, 0.2, 0.8, 0.4),
        BoundaryConfig::new("b2", 1.0, 0.2, 0.8, 0.3),
        BoundaryConfig::new("b5", 5.0, 0.2, 0.8, 0.3),
    ];
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let scores: Vec<[f64; 3]> = (0..1000).map(|_| [r.gen(), r.gen(), r.gen()]).collect();
    c.bench_function("cascade_1000_queries", |b| {
        b.iter(|| {
            let mut flagged = 0;
            for q in &scores {
                let mut provider = |i: usize, _: &str| -> Result<f64, String> { Ok(q[i]) };
                flagged += run_cascade(&mut provider, &stages, 0.5).unwrap().flag as usize;
            }
            flagged
        })
    });
}

criterion_group!(benches, clustering, statistics, cascade);
criterion_main!(benches);
