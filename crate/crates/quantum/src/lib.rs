//! State-vector quantum layer: fixtures, Born-rule behaviors, extended
//! Wigner's-friend protocol simulation and possibilistic contextuality.

pub mod ops;
pub mod state;
pub mod fixtures;
pub mod protocol;
pub mod protocols;
pub mod possibilistic;

pub use ops::{Mat, Pvm, C64};
pub use state::StateVector;

use lfpoly_core::scenario::ScenarioError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuantumError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("measurements {0} and {1} share a context but do not commute")]
    NonCommuting(String, String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("conditioning on a probability-zero event: {0}")]
    ZeroProbability(String),
    #[error("state norm drifted by {0:e}")]
    NormDrift(f64),
    #[error("entry {outcome:?} of context {context} ({value}) has no rational within tolerance")]
    Rationalize { context: usize, outcome: Vec<usize>, value: f64 },
    #[error("assignment space of size {0} exceeds the search guard")]
    SearchGuard(u128),
    #[error("json: {0}")]
    Json(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

impl From<serde_json::Error> for QuantumError {
    fn from(e: serde_json::Error) -> Self {
        QuantumError::Json(e.to_string())
    }
}
