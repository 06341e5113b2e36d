use std::path::PathBuf;

use thiserror::Error;

use crate::spectral::Field;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("alpha must lie in (0,2], got {0}")]
    InvalidAlpha(f64),

    #[error("grid mismatch between field and operator")]
    GridMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("reaction model `{name}` violates a KPP condition: {detail}")]
    NotKpp { name: String, detail: String },

    #[error("non-finite value after step {step} (t = {time}); last finite state kept for dump")]
    Diverged {
        step: u64,
        time: f64,
        last_good: Box<Field>,
    },

    #[error("quadrature did not converge at r = {r}: {detail}")]
    Quadrature { r: f64, detail: String },

    #[error("need at least {need} samples in the fit window, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("non-positive value {value} at abscissa {at} in fit window")]
    NonPositive { at: f64, value: f64 },

    #[error("level set h = {h}: {detail}")]
    LevelSet { h: f64, detail: String },

    #[error("degenerate state: {0}")]
    Degenerate(String),

    #[error("invalid config: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("snapshot {path}: {detail}")]
    Snapshot { path: PathBuf, detail: String },

    #[error("no snapshots found in {0}")]
    NoSnapshots(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
