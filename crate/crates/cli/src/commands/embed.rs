use std::path::PathBuf;

use clap::Args;
use homogen_core::boundary::extract_entity_pair;
use homogen_core::gateway::{Gateway, GatewayError};
use homogen_core::store::{EmbeddingRecord, FailureRecord, Record, RunStore, TextRef};
use log::{info, warn};

use crate::context::{for_each_parallel, Context, EndpointArgs, RunLock};
use crate::error::CliError;
use crate::output::{Report, Table};
use crate::row;

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub run: PathBuf,
    /// Recompute embeddings that are already stored.
    #[arg(long)]
    pub force: bool,
    #[command(flatten)]
    pub endpoints: EndpointArgs,
}

/// Texts of one question that still need vectors.
fn targets(store: &RunStore, qid: &str, force: bool) -> Vec<(TextRef, String)> {
    let mut out = Vec::new();
    let Some(q) = store.question(qid) else { return out };
    out.push((TextRef::Question, q.text.clone()));
    for s in store.samples_for(qid) {
        out.push((TextRef::Sample(s.sample_index), s.text.clone()));
    }
    if let Some(g) = store.greedy(qid) {
        out.push((TextRef::Greedy, g.text.clone()));
    }
    if let Some((a, b)) = extract_entity_pair(&q.text) {
        out.push((TextRef::EntityA, a));
        out.push((TextRef::EntityB, b));
    }
    if !force {
        out.retain(|(t, _)| store.embedding(qid, *t).is_none());
    }
    out
}

fn embed_question(gw: &Gateway, qid: &str, todo: &[(TextRef, String)]) -> Result<(Vec<EmbeddingRecord>, usize), GatewayError> {
    let texts: Vec<String> = todo.iter().map(|(_, t)| t.clone()).collect();
    let batch = gw.embed_texts(&texts)?;
    let records = todo
        .iter()
        .zip(batch.vectors)
        .map(|((target, _), vector)| EmbeddingRecord {
            question_id: qid.to_string(),
            target: *target,
            vector,
        })
        .collect();
    Ok((records, batch.dim))
}

pub fn run(ctx: &Context, args: &EmbedArgs) -> Result<(), CliError> {
    let gw = args.endpoints.gateway(&ctx.config)?;
    if gw.config.embed_url.is_none() {
        return Err(CliError::usage("no embedding endpoint: set gateway.embed_url in the config or pass --embed-url"));
    }
    let _lock = RunLock::acquire(&args.run)?;
    let mut store = ctx.load_run(&args.run)?;
    let work: Vec<(String, Vec<(TextRef, String)>)> = store
        .question_ids()
        .into_iter()
        .map(|q| {
            let t = targets(&store, &q, args.force);
            (q, t)
        })
        .filter(|(_, t)| !t.is_empty())
        .collect();
    info!("{} questions need embeddings", work.len());

    let mut dim = store.manifest().and_then(|m| m.embedding_dim);
    let mut written = 0usize;
    let mut failed = Vec::new();
    let mut mismatch = None;
    for_each_parallel(
        work.len(),
        gw.config.max_in_flight,
        |i| embed_question(&gw, &work[i].0, &work[i].1),
        |i, r| {
            let qid = &work[i].0;
            match r {
                Ok((records, d)) => {
                    match dim {
                        Some(prev) if prev != d => {
                            mismatch.get_or_insert(format!(
                                "embedding dimension changed from {prev} to {d} (question `{qid}`); re-embed with --force into a fresh run"
                            ));
                            return;
                        }
                        _ => dim = Some(d),
                    }
                    store.clear_failures(qid, "embed");
                    for r in records {
                        written += 1;
                        let _ = store.upsert(Record::Embedding(r));
                    }
                }
                Err(e) => {
                    warn!("{qid}: embedding failed: {e}");
                    let transport = matches!(e, GatewayError::Transport(_) | GatewayError::Http { .. });
                    let _ = store.upsert(Record::Failure(FailureRecord {
                        question_id: qid.clone(),
                        stage: "embed".into(),
                        error: e.to_string(),
                        attempts: 1,
                    }));
                    failed.push(transport);
                }
            }
        },
    );
    if let Some(msg) = mismatch {
        return Err(CliError::data(msg));
    }
    if let (Some(m), Some(d)) = (store.manifest().cloned(), dim) {
        if m.embedding_dim != Some(d) {
            store.set_manifest(homogen_core::RunManifest {
                embedding_dim: Some(d),
                ..m
            });
        }
    }
    store.write_path(&args.run)?;

    let stats = gw.stats();
    let mut report = Report::new("embed", ctx);
    report.input("run", &args.run, &store.content_hash());
    let mut t = Table::new("summary", &["metric", "value"]);
    t.push(row!["questions_attempted", work.len()]);
    t.push(row!["questions_failed", failed.len()]);
    t.push(row!["embeddings_written", written]);
    t.push(row!["dimension", dim]);
    t.push(row!["network_requests", stats.network_requests]);
    t.push(row!["cache_hits", stats.cache_hits]);
    report.table(t);
    report.emit(ctx)?;
    partial_status(&failed, work.len(), "embedding")
}

/// Exit status for per-question network stages: `failed` holds one entry per
/// failed question, true when the failure was a transport error.
pub fn partial_status(failed: &[bool], attempted: usize, what: &str) -> Result<(), CliError> {
    if failed.is_empty() {
        return Ok(());
    }
    let msg = format!(
        "{what} failed for {} of {attempted} questions; rerun the same command to retry them",
        failed.len()
    );
    if failed.len() == attempted && failed.iter().all(|&t| t) {
        Err(CliError::Transport(msg))
    } else {
        Err(CliError::Partial(msg))
    }
}
