use std::collections::BTreeSet;
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use homogen_core::gateway::{Gateway, GatewayError};
use homogen_core::store::{
    Decoding, FailureRecord, QuestionRecord, Record, RunManifest, RunStore, FORMAT_VERSION,
};
use log::{info, warn};
use sha2::{Digest, Sha256};

use crate::context::{file_sha256, for_each_parallel, Context, EndpointArgs, RunLock};
use crate::error::CliError;
use crate::output::{Report, Table};
use crate::row;

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Question file: one JSON object per line with `question_id` and `text`.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Run file to create or resume.
    #[arg(long)]
    pub run: PathBuf,
    /// Samples per question.
    #[arg(short = 'n', long = "samples", default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
    #[arg(long, default_value_t = 1.0)]
    pub top_p: f64,
    #[arg(long, default_value_t = 256)]
    pub max_tokens: u32,
    /// Skip the greedy decode with token logprobs.
    #[arg(long)]
    pub no_greedy: bool,
    /// Also ask the P(True) probe about the greedy answer.
    #[arg(long)]
    pub probe: bool,
    #[arg(long)]
    pub dataset_name: Option<String>,
    /// Only the first N questions of the dataset.
    #[arg(long)]
    pub limit: Option<usize>,
    #[command(flatten)]
    pub endpoints: EndpointArgs,
}

pub fn read_dataset(path: &Path) -> Result<Vec<QuestionRecord>, CliError> {
    let f = std::fs::File::open(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let q: QuestionRecord = serde_json::from_str(&line)
            .map_err(|e| CliError::data(format!("{} line {}: {e}", path.display(), i + 1)))?;
        if q.text.trim().is_empty() {
            return Err(CliError::data(format!("{} line {}: empty question text", path.display(), i + 1)));
        }
        if !seen.insert(q.question_id.clone()) {
            return Err(CliError::data(format!(
                "{} line {}: duplicate question_id `{}`",
                path.display(),
                i + 1,
                q.question_id
            )));
        }
        out.push(q);
    }
    Ok(out)
}

fn run_id(dataset: &str, model: &str, seed: u64, n: usize) -> String {
    let h = Sha256::digest(format!("{dataset}\0{model}\0{seed}\0{n}").as_bytes());
    hex::encode(&h[..6])
}

#[derive(Default)]
struct Outcome {
    records: Vec<Record>,
    failures: Vec<FailureRecord>,
    succeeded: Vec<&'static str>,
    transport_only: bool,
}

struct Work {
    question: QuestionRecord,
    samples: bool,
    greedy: bool,
    probe: bool,
    greedy_text: Option<String>,
}

fn failure(q: &str, stage: &str, e: &GatewayError, attempts: u32) -> FailureRecord {
    FailureRecord {
        question_id: q.to_string(),
        stage: stage.to_string(),
        error: e.to_string(),
        attempts,
    }
}

fn process(gw: &Gateway, ctx: &Context, args: &SampleArgs, decoding: &Decoding, w: &Work) -> Outcome {
    let q = &w.question;
    let mut out = Outcome {
        transport_only: true,
        ..Outcome::default()
    };
    let fail = |out: &mut Outcome, stage: &str, e: GatewayError, attempts: u32| {
        if !matches!(e, GatewayError::Transport(_) | GatewayError::Http { .. }) {
            out.transport_only = false;
        }
        warn!("{}: {stage} failed: {e}", q.question_id);
        out.failures.push(failure(&q.question_id, stage, &e, attempts));
    };
    if w.samples {
        match gw.sample_responses(q, args.n, decoding, ctx.seed) {
            Ok((samples, _)) => {
                out.records.extend(samples.into_iter().map(Record::Sample));
                out.succeeded.push("sample");
            }
            Err((e, a)) => fail(&mut out, "sample", e, a),
        }
    }
    let mut greedy_text = w.greedy_text.clone();
    if w.greedy {
        match gw.greedy_with_logprobs(q, ctx.config.signals.greedy_max_tokens, ctx.config.gateway.top_k) {
            Ok((g, _)) => {
                greedy_text = Some(g.text.clone());
                out.records.push(Record::Sample(g));
                out.succeeded.push("greedy");
            }
            Err((e, a)) => fail(&mut out, "greedy", e, a),
        }
    }
    if w.probe {
        match greedy_text {
            Some(answer) => match gw.ptrue_probe(q, &answer, ctx.config.signals.probe_max_tokens, ctx.config.gateway.top_k) {
                Ok((p, _)) => {
                    out.records.push(Record::Sample(p));
                    out.succeeded.push("probe");
                }
                Err((e, a)) => fail(&mut out, "probe", e, a),
            },
            None => {
                out.transport_only = false;
                out.failures.push(FailureRecord {
                question_id: q.question_id.clone(),
                stage: "probe".into(),
                error: "no greedy answer to probe".into(),
                attempts: 0,
                })
            }
        }
    }
    out
}

fn same_decoding(a: &Decoding, b: &Decoding) -> bool {
    a.mode == b.mode && a.temperature == b.temperature && a.top_p == b.top_p && a.max_tokens == b.max_tokens
}

pub fn run(ctx: &Context, args: &SampleArgs) -> Result<(), CliError> {
    if args.n == 0 {
        return Err(CliError::usage("--samples must be at least 1"));
    }
    if !(args.top_p > 0.0 && args.top_p <= 1.0) {
        return Err(CliError::usage("--top-p must be in (0, 1]"));
    }
    if args.temperature < 0.0 {
        return Err(CliError::usage("--temperature must be non-negative"));
    }
    let gw = args.endpoints.gateway(&ctx.config)?;
    if gw.config.chat_url.is_none() {
        return Err(CliError::usage("no chat endpoint: set gateway.chat_url in the config or pass --chat-url"));
    }
    let mut questions = read_dataset(&args.dataset)?;
    if let Some(l) = args.limit {
        questions.truncate(l);
    }
    let _lock = RunLock::acquire(&args.run)?;
    let mut store = if args.run.exists() {
        ctx.load_run(&args.run)?
    } else {
        RunStore::new()
    };
    let decoding = Decoding::sampling(args.temperature, args.top_p, args.max_tokens);
    let dataset_name = args.dataset_name.clone().unwrap_or_else(|| {
        args.dataset
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    });
    match store.manifest() {
        Some(m) => {
            if m.n_samples != args.n || !same_decoding(&m.decoding, &decoding) || m.run_seed != ctx.seed {
                return Err(CliError::data(format!(
                    "{} was created with N={}, seed={} and different decoding settings; resume with the same settings or use a new run file",
                    args.run.display(),
                    m.n_samples,
                    m.run_seed
                )));
            }
        }
        None => store.set_manifest(RunManifest {
            format_version: FORMAT_VERSION,
            run_id: run_id(&dataset_name, &gw.config.chat_model, ctx.seed, args.n),
            model_name: gw.config.chat_model.clone(),
            endpoint_url: gw.config.chat_url.clone().unwrap_or_default(),
            decoding: decoding.clone(),
            n_samples: args.n,
            created_at: (!ctx.deterministic).then(|| chrono::Utc::now().to_rfc3339()),
            dataset_name,
            embedding_dim: None,
            run_seed: ctx.seed,
        }),
    }
    for q in &questions {
        match store.question(&q.question_id) {
            Some(existing) if existing.text != q.text => {
                return Err(CliError::data(format!(
                    "question `{}` differs from the copy already in {}",
                    q.question_id,
                    args.run.display()
                )));
            }
            Some(_) => {}
            None => store.insert(Record::Question(q.clone()))?,
        }
    }
    store.write_path(&args.run)?;

    let work: Vec<Work> = questions
        .iter()
        .filter_map(|q| {
            let qid = &q.question_id;
            let have_greedy = store.greedy(qid);
            let w = Work {
                question: store.question(qid).cloned().unwrap_or_else(|| q.clone()),
                samples: store.samples_for(qid).len() < args.n,
                greedy: !args.no_greedy && have_greedy.is_none(),
                probe: args.probe && store.probe(qid).is_none(),
                greedy_text: have_greedy.map(|g| g.text.clone()),
            };
            (w.samples || w.greedy || w.probe).then_some(w)
        })
        .collect();
    info!("{} of {} questions need requests", work.len(), questions.len());

    let mut append = OpenOptions::new().append(true).open(&args.run)?;
    let mut failed_questions = 0usize;
    let mut transport_failures = 0usize;
    let mut write_error = None;
    for_each_parallel(
        work.len(),
        gw.config.max_in_flight,
        |i| process(&gw, ctx, args, &decoding, &work[i]),
        |i, out| {
            let qid = &work[i].question.question_id;
            let mut lines = String::new();
            for r in out.records.iter().cloned().chain(out.failures.iter().cloned().map(Record::Failure)) {
                lines.push_str(&r.to_line());
                lines.push('\n');
            }
            if let Err(e) = append.write_all(lines.as_bytes()).and_then(|_| append.flush()) {
                write_error.get_or_insert(e);
            }
            for r in out.records {
                if let Err(e) = store.upsert(r) {
                    warn!("{qid}: {e}");
                }
            }
            for stage in out.succeeded {
                store.clear_failures(qid, stage);
            }
            if !out.failures.is_empty() {
                failed_questions += 1;
                if out.transport_only {
                    transport_failures += 1;
                }
                for f in out.failures {
                    let _ = store.upsert(Record::Failure(f));
                }
            }
        },
    );
    if let Some(e) = write_error {
        return Err(e.into());
    }
    store.write_path(&args.run)?;

    let counts = store.counts();
    let stats = gw.stats();
    let mut report = Report::new("sample", ctx);
    report.input("dataset", &args.dataset, &file_sha256(&args.dataset)?);
    report.input("run", &args.run, &store.content_hash());
    let mut t = Table::new("summary", &["metric", "value"]);
    t.push(row!["questions", counts.questions]);
    t.push(row!["samples", counts.samples]);
    t.push(row!["questions_attempted", work.len()]);
    t.push(row!["questions_failed", failed_questions]);
    t.push(row!["network_requests", stats.network_requests]);
    t.push(row!["cache_hits", stats.cache_hits]);
    t.push(row!["retries", stats.retries]);
    report.table(t);
    let mut f = Table::new("failures", &["question_id", "stage", "attempts", "error"]);
    for r in store.failures() {
        f.push(row![&r.question_id, &r.stage, r.attempts, &r.error]);
    }
    if !f.rows.is_empty() {
        report.table(f);
    }
    report.emit(ctx)?;

    if failed_questions > 0 {
        let msg = format!(
            "{failed_questions} of {} questions failed; rerun the same command to retry them",
            work.len()
        );
        if failed_questions == work.len() && transport_failures == failed_questions {
            return Err(CliError::Transport(msg));
        }
        return Err(CliError::Partial(msg));
    }
    Ok(())
}
