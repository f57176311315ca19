use std::path::PathBuf;

use clap::Args;

use crate::context::Context;
use crate::error::CliError;
use crate::output::{Report, Table};
use crate::row;

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub run: PathBuf,
}

pub fn run(ctx: &Context, args: &ValidateArgs) -> Result<(), CliError> {
    let store = ctx.load_run(&args.run)?;
    let violations = store.validate();
    let counts = store.counts();
    let mut report = Report::new("validate", ctx);
    report.input("run", &args.run, &store.content_hash());
    let mut s = Table::new("summary", &["metric", "value"]);
    s.push(row!["questions", counts.questions]);
    s.push(row!["samples", counts.samples]);
    s.push(row!["labeled_questions", counts.labeled_questions]);
    s.push(row!["failures", store.failures().count()]);
    s.push(row!["violations", violations.len()]);
    report.table(s);
    if !violations.is_empty() {
        let mut t = Table::new("violations", &["locator", "message"]);
        for v in &violations {
            t.push(row![&v.locator, &v.message]);
        }
        report.table(t);
    }
    report.emit(ctx)?;
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::data(format!("{} invariant violations in {}", violations.len(), args.run.display())))
    }
}
