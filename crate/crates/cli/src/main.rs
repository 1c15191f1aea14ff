//! `vfl`: configuration-driven runner for the vfl numerical laboratory.

mod commands;
mod config;
mod output;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use commands::*;
use config::{config_err, CliError, FileConfig};
use output::Output;

#[derive(Parser, Debug)]
#[command(
    name = "vfl",
    version,
    about = "Resolvents, regularity criteria and field simulation for stochastic Volterra equations"
)]
struct Cli {
    /// JSON configuration with "schema": "vfl/1"; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "VFL_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    Resolvent(ResolventOpts),
    Subordinate(SubordinateOpts),
    Yosida(YosidaOpts),
    Simulate(SimulateOpts),
    Regularity(RegularityOpts),
    LimitMeasure(LimitMeasureOpts),
    Admissible(AdmissibleOpts),
    Holder(HolderOpts),
    Verify(VerifyOpts),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Resolvent(_) => "resolvent",
            Command::Subordinate(_) => "subordinate",
            Command::Yosida(_) => "yosida",
            Command::Simulate(_) => "simulate",
            Command::Regularity(_) => "regularity",
            Command::LimitMeasure(_) => "limit-measure",
            Command::Admissible(_) => "admissible",
            Command::Holder(_) => "holder",
            Command::Verify(_) => "verify",
        }
    }
}

fn resolve<T: Serialize + DeserializeOwned>(
    flags: T,
    file: &Option<FileConfig>,
) -> Result<T, CliError> {
    match file {
        Some(f) => config::merge(&flags, f.options.clone()),
        None => Ok(flags),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let name = cli.command.name();
    let file = cli
        .config
        .as_deref()
        .map(|p| config::load(p, name))
        .transpose()?;
    let threads = cli.threads.or(file.as_ref().and_then(|f| f.threads));
    if let Some(n) = threads {
        if n == 0 {
            return Err(config_err("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| config_err(format!("thread pool: {e}")))?;
    }
    let dir = cli
        .out
        .or(file.as_ref().and_then(|f| f.out.clone()))
        .unwrap_or_else(|| PathBuf::from(format!("vfl-out/{name}")));
    // Options are resolved before the output directory is touched.
    macro_rules! go {
        ($opts:expr, $f:path) => {{
            let o = resolve($opts, &file)?;
            $f(o, Output::create(&dir)?)
        }};
    }
    match cli.command {
        Command::Resolvent(o) => go!(o, resolvent),
        Command::Subordinate(o) => go!(o, subordinate),
        Command::Yosida(o) => go!(o, yosida),
        Command::Simulate(o) => go!(o, simulate),
        Command::Regularity(o) => go!(o, regularity),
        Command::LimitMeasure(o) => go!(o, limit_measure_cmd),
        Command::Admissible(o) => go!(o, admissible),
        Command::Holder(o) => go!(o, holder),
        Command::Verify(o) => go!(o, verify),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vfl: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
