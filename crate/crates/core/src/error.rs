use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("basis mismatch: su({left}) vs su({right})")]
    BasisMismatch { left: usize, right: usize },

    #[error("internal consistency: {0}")]
    Consistency(String),

    #[error("singular operator at site {site}: smallest singular value {sigma_min:.3e}")]
    SingularOperator { site: usize, sigma_min: f64 },

    #[error("ill-conditioned matrix (condition number {condition:.3e} exceeds cap {cap:.3e})")]
    Conditioning { condition: f64, cap: f64 },

    #[error("element outside subspace {subspace}: residual {residual:.3e} > {tolerance:.3e}")]
    SubspaceMembership {
        subspace: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("spectral parameter {value} within {radius:.1e} of pole {pole}")]
    SpectralPole {
        value: String,
        pole: String,
        radius: f64,
    },

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("invalid worldsheet: {0}")]
    InvalidWorldsheet(String),

    #[error("aliasing: {modes} modes exceed the band limit {limit} for n_sigma={n_sigma}")]
    Aliasing {
        modes: usize,
        limit: usize,
        n_sigma: usize,
    },

    #[error("instability at tau={tau:.6}: {detail}")]
    Instability { tau: f64, detail: String },

    #[error("ill-posed transport: {0}")]
    Transport(String),

    #[error("monodromy did not converge after {substeps} substeps per cell (change {change:.3e})")]
    NonConvergence { substeps: usize, change: f64 },

    #[error("unknown {kind} '{name}' (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
