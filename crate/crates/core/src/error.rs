use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max |M - M^H| = {deviation:e}, scale {scale:e})")]
    NotHermitian { deviation: f64, scale: f64 },

    #[error(
        "quartic has complex roots (B={b}, C={c}, D={d}, E={e}); \
         coefficients do not come from a real symmetric matrix"
    )]
    ComplexRoots { b: f64, c: f64, d: f64, e: f64 },

    #[error("degenerate resolvent in Ferrari's method (B={b}, C={c}, D={d}, E={e})")]
    DegenerateResolvent { b: f64, c: f64, d: f64, e: f64 },

    #[error(
        "parameters too close to a degeneracy for perturbation theory \
         (|denominator| = {denominator:e} <= guard {guard:e}); use the subspace solution instead"
    )]
    NearDegeneracy { denominator: f64, guard: f64 },

    #[error(
        "Fock truncation n_tr = {n_tr} not converged: energies moved by {change:e} \
         when adding 5 photons (tolerance {tolerance:e}); increase n_tr"
    )]
    TruncationNotConverged { n_tr: usize, change: f64, tolerance: f64 },

    #[error("integration failed: {0}")]
    StepSize(String),

    #[error("unknown state label '{0}' (expected e.g. A0,2 or phi2,3)")]
    BadLabel(String),

    #[error("no dressed state matches {0}")]
    UnresolvedState(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("unknown preset '{0}'")]
    UnknownPreset(String),

    #[error("missing output file {0}")]
    MissingOutput(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
