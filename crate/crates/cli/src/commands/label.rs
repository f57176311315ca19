use std::path::PathBuf;

use clap::Args;
use homogen_core::analysis::word_overlap_label;
use homogen_core::store::{Judge, Label, LabelRecord, StoreError};

use super::parse_judge;
use crate::context::{file_sha256, Context, RunLock};
use crate::error::CliError;
use crate::output::{Report, Table};
use crate::row;

#[derive(Debug, Args)]
pub struct LabelArgs {
    #[arg(long)]
    pub run: PathBuf,
    /// Label file: one JSON object per line with `question_id` and `label`.
    #[arg(long, conflicts_with = "word_overlap")]
    pub labels: Option<PathBuf>,
    /// Judge that produced the label file.
    #[arg(long, requires = "labels")]
    pub judge: Option<String>,
    /// Label greedy answers by word-overlap F1 against the gold answers.
    #[arg(long)]
    pub word_overlap: bool,
    #[arg(long, default_value_t = 0.5)]
    pub min_f1: f64,
}

pub fn run(ctx: &Context, args: &LabelArgs) -> Result<(), CliError> {
    let _lock = RunLock::acquire(&args.run)?;
    let mut store = ctx.load_run(&args.run)?;
    let mut report = Report::new("label", ctx);
    let (judge, counts) = if let Some(path) = &args.labels {
        let judge = parse_judge(&args.judge)?.unwrap_or(Judge::Human);
        report.input("labels", path, &file_sha256(path)?);
        let counts = store.merge_labels(path, judge).map_err(|e| match e {
            StoreError::Reference(q) => CliError::data(format!(
                "{}: question `{q}` is not in the run; no labels were written",
                path.display()
            )),
            other => CliError::data(format!("{}: {other}", path.display())),
        })?;
        (judge, counts)
    } else if args.word_overlap {
        if !(0.0..=1.0).contains(&args.min_f1) {
            return Err(CliError::usage("--min-f1 must be in [0, 1]"));
        }
        let mut records = Vec::new();
        for q in store.questions() {
            let (Some(golds), Some(g)) = (q.gold_answers.as_ref(), store.greedy(&q.question_id)) else {
                continue;
            };
            if let Some((label, f1)) = word_overlap_label(&g.text, golds, args.min_f1) {
                records.push(LabelRecord {
                    question_id: q.question_id.clone(),
                    label,
                    judge: Judge::WordOverlap,
                    judge_detail: format!("f1={f1:.4} min_f1={}", args.min_f1),
                });
            }
        }
        if records.is_empty() {
            return Err(CliError::data(
                "no question has both gold answers and a greedy answer; nothing to label",
            ));
        }
        (Judge::WordOverlap, store.merge_label_records(records)?)
    } else {
        return Err(CliError::usage("pass --labels FILE or --word-overlap"));
    };
    store.write_path(&args.run)?;

    let mut per_label = [0usize; 3];
    for q in store.questions() {
        if let Some(l) = store.label(&q.question_id, judge) {
            per_label[match l.label {
                Label::Correct => 0,
                Label::Incorrect => 1,
                Label::Ambiguous => 2,
            }] += 1;
        }
    }
    report.input("run", &args.run, &store.content_hash());
    let mut t = Table::new("summary", &["metric", "value"]);
    t.push(row!["judge", judge.to_string()]);
    t.push(row!["labels_written", counts.written]);
    t.push(row!["labeled_questions", counts.labeled_questions]);
    t.push(row!["correct", per_label[0]]);
    t.push(row!["incorrect", per_label[1]]);
    t.push(row!["ambiguous", per_label[2]]);
    report.table(t);
    report.emit(ctx)?;
    Ok(())
}
