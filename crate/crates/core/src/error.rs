//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("infeasible construction: {0}")]
    Infeasible(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error(
        "fitness penalty scale too small: observed a secrecy rate of {max_ssr:.3} \
         with tau_t + tau_r = {tau_sum:.3}; raise tau_t/tau_r so that every \
         constraint-violating layout scores below every feasible one"
    )]
    PenaltyScale { max_ssr: f64, tau_sum: f64 },

    #[error("combinatorial blow-up: {0}")]
    Combinatorial(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
