use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CbfError {
    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("step rejected: error estimate {estimate:.3e} exceeds tolerance at dt = {dt:.3e}")]
    StepRejected { estimate: f64, dt: f64 },

    #[error("blow-up detected at t = {time}: |grad u|^2 = {grad_sq:.6e} exceeds guard {guard:.6e}")]
    BlowUp { time: f64, grad_sq: f64, guard: f64 },

    #[error("accepted step raised ||u||^2 from {before:.12e} to {after:.12e}")]
    EnergyIncrease { before: f64, after: f64 },

    #[error("time step underflow: dt = {dt:.3e} fell below dt_min = {dt_min:.3e}")]
    StepUnderflow { dt: f64, dt_min: f64 },

    #[error("non-monotone time: {next} does not follow {last}")]
    NonMonotoneTime { last: f64, next: f64 },

    #[error("mollifier width {h} is under-resolved by sample spacing {spacing}")]
    UnderResolvedMollifier { h: f64, spacing: f64 },

    #[error("time grids do not match: {0}")]
    GridMismatch(String),

    #[error("checkpoint {path}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CbfError>;
