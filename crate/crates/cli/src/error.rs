use thiserror::Error;

/// Failures of a CLI run, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("computation error: {0}")]
    Compute(#[from] imstark_core::Error),

    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("bundle has no plottable table")]
    UnsupportedTable,

    #[error("invariant check failed: {}", .0.join(", "))]
    Invariant(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Compute(_) | Self::Io { .. } | Self::UnsupportedTable => 3,
            Self::Invariant(_) => 4,
        }
    }

    /// Short machine-readable kind for the error record.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Compute(_) => "computation",
            Self::Io { .. } => "io",
            Self::UnsupportedTable => "unsupported-table",
            Self::Invariant(_) => "invariant",
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
