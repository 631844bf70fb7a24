use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: expected dimension {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    /// The classical energy form is not dominated by the free energy (margin >= 1).
    #[error("unstable configuration: positivity margin {delta} is not below 1")]
    Unstable { delta: f64 },

    #[error("coupling |lambda| = {lambda} is not below the stability threshold {lambda_quant}")]
    Stability { lambda: f64, lambda_quant: f64 },

    #[error("ill-conditioned generator: smallest singular value {0:e}")]
    IllConditioned(f64),

    #[error("Fock basis dimension {dimension} exceeds the configured cap {cap}")]
    Resource { dimension: usize, cap: usize },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("eigensolver did not converge: residual {residual:e} after {iterations} iterations")]
    Solver { residual: f64, iterations: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
