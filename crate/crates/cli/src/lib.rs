//! Experiment runner for the imaginary Stark ladder: configuration,
//! experiment registry and result bundles (CSV tables, JSON summary,
//! gnuplot script).

pub mod bundle;
pub mod config;
pub mod error;
pub mod experiments;
pub mod plot;

use std::path::{Path, PathBuf};

use bundle::{config_hash, Metadata, ResultBundle};
use config::Config;
use error::{CliError, CliResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Caps the global rayon pool from `IMSTARK_THREADS` when set.
pub fn configure_threads(value: Option<&str>) -> CliResult<usize> {
    if let Some(v) = value {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::Config(format!("IMSTARK_THREADS must be a positive integer, got '{v}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot size thread pool: {e}")))?;
    }
    Ok(rayon::current_num_threads())
}

/// Registry listing, one experiment per line.
pub fn registry_listing() -> String {
    let width = experiments::REGISTRY.iter().map(|e| e.name.len()).max().unwrap_or(0);
    experiments::REGISTRY.iter().map(|e| format!("{:width$}  {}\n", e.name, e.figure)).collect()
}

/// Runs one experiment and writes its bundle. The bundle is written even
/// when an invariant fails; the error is returned afterwards.
pub fn run_experiment(name: &str, cfg: &Config, out: Option<&Path>) -> CliResult<(ResultBundle, PathBuf)> {
    let exp = experiments::find(name)?;
    let dir = match out {
        Some(p) => p.to_path_buf(),
        None => PathBuf::from(cfg.get("out.dir", format!("out/{name}"))?),
    };
    let mut outcome = (exp.run)(cfg)?;
    for key in cfg.unused_keys() {
        if key != "out.dir" {
            outcome.warnings.push(format!("config key '{key}' is not used by {name}"));
        }
    }
    let mut resolved = cfg.resolved();
    resolved.remove("out.dir");
    let metadata = Metadata {
        experiment: name.to_string(),
        config_hash: config_hash(name, &resolved),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        version: VERSION.to_string(),
        threads: rayon::current_num_threads(),
        config: resolved,
    };
    let bundle = ResultBundle { metadata, outcome };
    bundle.write(&dir)?;
    let failed = bundle.outcome.failed_invariants();
    if !failed.is_empty() {
        return Err(CliError::Invariant(failed));
    }
    Ok((bundle, dir))
}
