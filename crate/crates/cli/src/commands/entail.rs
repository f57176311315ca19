use std::path::PathBuf;

use clap::Args;
use homogen_core::gateway::{Gateway, GatewayError};
use homogen_core::store::{EntailmentRecord, FailureRecord, Record, RunStore, TextRef};
use log::{info, warn};

use super::embed::partial_status;
use crate::context::{for_each_parallel, Context, EndpointArgs, RunLock};
use crate::error::CliError;
use crate::output::{Report, Table};
use crate::row;

#[derive(Debug, Args)]
pub struct EntailArgs {
    #[arg(long)]
    pub run: PathBuf,
    /// Also score each gold answer against the greedy answer.
    #[arg(long)]
    pub references: bool,
    /// Skip the sample-pair judgements.
    #[arg(long)]
    pub no_pairs: bool,
    #[command(flatten)]
    pub endpoints: EndpointArgs,
}

struct Pair {
    premise: TextRef,
    hypothesis: TextRef,
    p_text: String,
    h_text: String,
}

fn pairs_for(store: &RunStore, qid: &str, args: &EntailArgs) -> Vec<Pair> {
    let mut out = Vec::new();
    if !args.no_pairs {
        let samples = store.samples_for(qid);
        for a in &samples {
            for b in &samples {
                if a.sample_index != b.sample_index {
                    out.push(Pair {
                        premise: TextRef::Sample(a.sample_index),
                        hypothesis: TextRef::Sample(b.sample_index),
                        p_text: a.text.clone(),
                        h_text: b.text.clone(),
                    });
                }
            }
        }
    }
    if args.references {
        let golds = store.question(qid).and_then(|q| q.gold_answers.clone()).unwrap_or_default();
        if let Some(g) = store.greedy(qid) {
            for (i, gold) in golds.into_iter().enumerate() {
                out.push(Pair {
                    premise: TextRef::Reference(i),
                    hypothesis: TextRef::Greedy,
                    p_text: gold,
                    h_text: g.text.clone(),
                });
            }
        }
    }
    out.retain(|p| store.entailment(qid, p.premise, p.hypothesis).is_none());
    out
}

fn score(gw: &Gateway, qid: &str, pairs: &[Pair]) -> Result<Vec<EntailmentRecord>, (GatewayError, u32)> {
    pairs
        .iter()
        .map(|p| {
            let (probability, _) = gw.entailment_call(&p.p_text, &p.h_text)?;
            Ok(EntailmentRecord {
                question_id: qid.to_string(),
                premise: p.premise,
                hypothesis: p.hypothesis,
                probability,
            })
        })
        .collect()
}

pub fn run(ctx: &Context, args: &EntailArgs) -> Result<(), CliError> {
    if args.no_pairs && !args.references {
        return Err(CliError::usage("--no-pairs without --references leaves nothing to score"));
    }
    let gw = args.endpoints.gateway(&ctx.config)?;
    if gw.config.entail_url.is_none() {
        return Err(CliError::usage("no entailment endpoint: set gateway.entail_url in the config or pass --entail-url"));
    }
    let _lock = RunLock::acquire(&args.run)?;
    let mut store = ctx.load_run(&args.run)?;
    let work: Vec<(String, Vec<Pair>)> = store
        .question_ids()
        .into_iter()
        .map(|q| {
            let p = pairs_for(&store, &q, args);
            (q, p)
        })
        .filter(|(_, p)| !p.is_empty())
        .collect();
    info!("{} questions need entailment scores", work.len());

    let mut written = 0usize;
    let mut failed = Vec::new();
    for_each_parallel(
        work.len(),
        gw.config.max_in_flight,
        |i| score(&gw, &work[i].0, &work[i].1),
        |i, r| {
            let qid = &work[i].0;
            match r {
                Ok(records) => {
                    store.clear_failures(qid, "entail");
                    for r in records {
                        written += 1;
                        let _ = store.upsert(Record::Entailment(r));
                    }
                }
                Err((e, attempts)) => {
                    warn!("{qid}: entailment failed: {e}");
                    failed.push(matches!(e, GatewayError::Transport(_) | GatewayError::Http { .. }));
                    let _ = store.upsert(Record::Failure(FailureRecord {
                        question_id: qid.clone(),
                        stage: "entail".into(),
                        error: e.to_string(),
                        attempts,
                    }));
                }
            }
        },
    );
    store.write_path(&args.run)?;

    let stats = gw.stats();
    let mut report = Report::new("entail", ctx);
    report.input("run", &args.run, &store.content_hash());
    let mut t = Table::new("summary", &["metric", "value"]);
    t.push(row!["questions_attempted", work.len()]);
    t.push(row!["questions_failed", failed.len()]);
    t.push(row!["judgements_written", written]);
    t.push(row!["network_requests", stats.network_requests]);
    t.push(row!["cache_hits", stats.cache_hits]);
    report.table(t);
    report.emit(ctx)?;
    partial_status(&failed, work.len(), "entailment")
}
