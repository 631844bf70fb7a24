use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] charged_pphi::Error),

    #[error("failed to write CSV trace: {0}")]
    Csv(#[from] csv::Error),

    #[error("golden suite unavailable: {0}")]
    GoldenMissing(String),

    #[error("{failed} of {total} golden values failed")]
    GoldenFailed { failed: usize, total: usize },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub mod exit {
    pub const OK: u8 = 0;
    pub const FAILURE: u8 = 1;
    pub const VALIDATION: u8 = 2;
    pub const STABILITY: u8 = 3;
    pub const SOLVER: u8 = 4;
    pub const GOLDEN_MISSING: u8 = 5;
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> u8 {
        use charged_pphi::Error as E;
        match self {
            Self::Config(_) => exit::VALIDATION,
            Self::Core(e) => match e {
                E::Parameter(_) | E::Shape { .. } | E::Contract(_) | E::Resource { .. } => exit::VALIDATION,
                E::Unstable { .. } | E::Stability { .. } => exit::STABILITY,
                E::Solver { .. } | E::IllConditioned(_) => exit::SOLVER,
            },
            Self::GoldenMissing(_) => exit::GOLDEN_MISSING,
            Self::Io { .. } | Self::Csv(_) | Self::GoldenFailed { .. } => exit::FAILURE,
        }
    }

    /// Name of the invariant or check that failed, for the error line.
    pub fn invariant(&self) -> &'static str {
        use charged_pphi::Error as E;
        match self {
            Self::Config(_) => "config schema",
            Self::Core(e) => match e {
                E::Parameter(_) => "parameter range",
                E::Shape { .. } => "dimension agreement",
                E::Contract(_) => "input contract",
                E::Resource { .. } => "Fock dimension cap",
                E::Unstable { .. } => "classical positivity (delta < 1)",
                E::Stability { .. } => "coupling below threshold (|lambda| < lambda_quant)",
                E::Solver { .. } => "eigensolver residual",
                E::IllConditioned(_) => "generator invertibility",
            },
            Self::GoldenMissing(_) => "golden suite present",
            Self::GoldenFailed { .. } => "golden agreement",
            Self::Io { .. } | Self::Csv(_) => "output",
        }
    }
}
