//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigenvalue iteration did not converge after {iterations} sweeps (active block ending at row {row})")]
    NoConvergence { iterations: usize, row: usize },

    #[error("singular value decomposition did not converge")]
    SvdNoConvergence,

    #[error("Bloch Hamiltonian is at an exceptional point (|E+ - E-| = {splitting:e})")]
    ExceptionalPoint { splitting: f64 },

    #[error("no eigenvalue below the zero-mode tolerance (smallest |E| = {smallest:e})")]
    NoZeroMode { smallest: f64 },

    #[error("trajectory passes within {distance:e} of an exceptional point")]
    OnBoundary { distance: f64 },

    #[error("band tracking ambiguous at k = {k}: candidate overlaps {first} and {second}; refine sampling")]
    TrackingAmbiguity { k: f64, first: f64, second: f64 },

    #[error("expectation-value trajectory passes within {distance:e} of the origin; winding undefined")]
    GaplessTrajectory { distance: f64 },

    #[error("|H t| = {norm} exceeds the propagator cap {cap}; split into at least {substeps} sub-steps")]
    ExponentTooLarge { norm: f64, cap: f64, substeps: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
