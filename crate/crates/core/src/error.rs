use thiserror::Error;

use crate::dynamics::Trajectory;
use crate::profile::StrategyProfile;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input at index {index}")]
    NonFiniteInput { index: usize },

    #[error("invalid simplex point: {reason}")]
    InvalidSimplex { reason: String },

    #[error("participant `{participant}`: {reason}")]
    Shape { participant: String, reason: String },

    #[error("participant `{participant}`: non-finite evaluation value at choice `{choice}`")]
    NonFiniteEvaluation { participant: String, choice: String },

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid network: {0}")]
    Network(String),

    #[error("flow on arc `{arc}` is {flow}, outside [0, {total}]")]
    FlowOutOfRange { arc: String, flow: f64, total: f64 },

    #[error("expectation over {count} pure profiles exceeds the cap of {cap}")]
    CombinatorialCap { count: u128, cap: u128 },

    #[error("lyapunov domain: participant `{participant}` choice `{choice}` is in the anchor support but has zero share")]
    LyapunovDomain { participant: String, choice: String },

    #[error("anchor is not an equilibrium (vi residual {residual:e})")]
    InvalidAnchor { residual: f64 },

    #[error("non-finite state at t = {time}")]
    NumericalAbort {
        time: f64,
        last_valid: Box<StrategyProfile>,
        partial: Box<Trajectory>,
    },

    #[error("spec file: {0}")]
    SpecFile(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
