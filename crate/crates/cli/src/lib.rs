//! `homogen`: sampling runs, homogenization diagnostics, baseline
//! comparison, cascade evaluation, independence and calibration reports.
//!
//! Every report is a set of CSV tables with a `# key=value` provenance
//! header (tool version, invocation, config hash, input hashes, seed).
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 transport error,
//! 4 partial completion.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod context;
pub mod error;
pub mod output;

use context::Context;
use error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Tool configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for sampling, resampling, permutations and fold assignment.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Omit timestamps so identical inputs give byte-identical reports.
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// Terminal output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Directory for `<command>_<table>.csv` report files.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Parser)]
#[command(name = "homogen", version, about = "Response-homogenization diagnostics for LLM outputs")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample N responses per question (plus greedy and probe) into a run file.
    Sample(commands::sample::SampleArgs),
    /// Embed questions, responses and entity pairs.
    Embed(commands::embed::EmbedArgs),
    /// Score pairwise entailment between responses (and against references).
    Entail(commands::entail::EntailArgs),
    /// Attach correctness labels.
    Label(commands::label::LabelArgs),
    /// Check a run file for invariant violations.
    Validate(commands::validate::ValidateArgs),
    /// Compute every available per-question signal and store it in the run.
    Signals(commands::signals::SignalsArgs),
    /// Single-cluster rate, cluster counts and semantic entropy per method.
    Diagnose(commands::diagnose::DiagnoseArgs),
    /// Compare two runs on the same questions.
    Compare(commands::compare::CompareArgs),
    /// AUROC of every baseline signal with pairwise DeLong tests.
    Baselines(commands::baselines::BaselinesArgs),
    /// Evaluate a cheapest-first detector cascade.
    Cascade(commands::cascade::CascadeArgs),
    /// Pairwise dependence between boundary signals.
    Independence(commands::independence::IndependenceArgs),
    /// Calibration and selective prediction for one signal.
    Calibrate(commands::calibrate::CalibrateArgs),
    /// Train the logistic pointer model on cheap features.
    Pointer(commands::pointer::PointerArgs),
    /// Serve scripted chat, embedding and entailment endpoints.
    StubServer(commands::stub::StubArgs),
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run(args: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    init_logging(cli.global.verbose);
    let result = Context::new(&cli.global, &args).and_then(|ctx| dispatch(&ctx, &cli.command));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("homogen: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(ctx: &Context, command: &Command) -> Result<(), CliError> {
    use commands::*;
    match command {
        Command::Sample(a) => sample::run(ctx, a),
        Command::Embed(a) => embed::run(ctx, a),
        Command::Entail(a) => entail::run(ctx, a),
        Command::Label(a) => label::run(ctx, a),
        Command::Validate(a) => validate::run(ctx, a),
        Command::Signals(a) => signals::run(ctx, a),
        Command::Diagnose(a) => diagnose::run(ctx, a),
        Command::Compare(a) => compare::run(ctx, a),
        Command::Baselines(a) => baselines::run(ctx, a),
        Command::Cascade(a) => cascade::run(ctx, a),
        Command::Independence(a) => independence::run(ctx, a),
        Command::Calibrate(a) => calibrate::run(ctx, a),
        Command::Pointer(a) => pointer::run(ctx, a),
        Command::StubServer(a) => stub::run(ctx, a),
    }
}
