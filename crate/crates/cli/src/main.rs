use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use imstark_cli::config::Config;
use imstark_cli::error::{CliError, CliResult};
use imstark_cli::{configure_threads, registry_listing, run_experiment};

/// Runs an imaginary Stark ladder experiment and writes a result bundle.
#[derive(Debug, Parser)]
#[command(name = "imstark", version)]
struct Args {
    /// Experiment name, or `list` to print the registry.
    experiment: String,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key; repeatable, wins over the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (overrides `out.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(args: &Args) -> CliResult<()> {
    if args.experiment == "list" {
        print!("{}", registry_listing());
        return Ok(());
    }
    configure_threads(std::env::var("IMSTARK_THREADS").ok().as_deref())?;
    let mut cfg = match &args.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    cfg.apply_overrides(&args.set)?;
    if let Some(out) = &args.out {
        cfg.set("out.dir", &out.display().to_string())?;
    }
    let result = run_experiment(&args.experiment, &cfg, None);
    match &result {
        Ok((bundle, dir)) => {
            println!("{}: wrote {} tables to {}", args.experiment, bundle.outcome.tables.len(), dir.display());
            for w in &bundle.outcome.warnings {
                eprintln!("warning: {w}");
            }
        }
        Err(CliError::Invariant(_)) => eprintln!("{}: bundle written; see summary.json", args.experiment),
        Err(_) => {}
    }
    result.map(|_| ())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::json!({ "error": e.kind(), "message": e.to_string(), "exit_code": e.exit_code() });
            eprintln!("{record}");
            ExitCode::from(e.exit_code())
        }
    }
}
