use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use homogen_core::gateway::stub::{StubOptions, StubScript, StubServer};

use crate::context::Context;
use crate::error::CliError;

#[derive(Debug, Args)]
pub struct StubArgs {
    /// JSON script: `{"entries": [{"question", "samples", "greedy", "confidence"}]}`.
    #[arg(long)]
    pub script: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8089")]
    pub addr: String,
    /// Answer the first N requests with --fail-status.
    #[arg(long, default_value_t = 0)]
    pub fail_first: usize,
    #[arg(long, default_value_t = 500)]
    pub fail_status: u16,
    /// Leave token logprobs out of generation responses.
    #[arg(long)]
    pub no_logprobs: bool,
    #[arg(long, default_value_t = 0)]
    pub delay_ms: u64,
    #[arg(long, default_value_t = 64)]
    pub embed_dim: usize,
}

pub fn run(_ctx: &Context, args: &StubArgs) -> Result<(), CliError> {
    let script = StubScript::from_path(&args.script)
        .map_err(|e| CliError::usage(format!("{}: {e}", args.script.display())))?;
    let options = StubOptions {
        fail_first: args.fail_first,
        fail_status: args.fail_status,
        no_logprobs: args.no_logprobs,
        delay_ms: args.delay_ms,
        embed_dim: args.embed_dim,
        ..StubOptions::default()
    };
    let server = StubServer::start(script, options, &args.addr)
        .map_err(|e| CliError::usage(format!("cannot bind {}: {e}", args.addr)))?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "chat_url={}", server.chat_url())?;
    writeln!(out, "native_url={}", server.native_url())?;
    writeln!(out, "embed_url={}", server.embed_url())?;
    writeln!(out, "entail_url={}", server.entail_url())?;
    out.flush()?;
    drop(out);
    server.join();
    Ok(())
}
