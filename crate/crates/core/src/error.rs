use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed function spec `{spec}`: {reason}")]
    FamilySpec { spec: String, reason: String },

    #[error("coefficient file {}: {reason}", path.display())]
    CoefficientFile { path: PathBuf, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("V_N vanishes at N = {0}; the ratio or normalization is undefined")]
    ZeroVariance(usize),

    #[error("rejection sampling exceeded {cap} proposals while placing point {point}")]
    RejectionCap { point: usize, cap: u64 },

    #[error("numerically degenerate configuration: {0}")]
    Degenerate(String),

    #[error("power traces cover k <= {available}, truncation needs k <= {required}")]
    TraceRange { available: usize, required: usize },

    #[error("moment identity not guaranteed: 2 * sum(k) = {twice_sum} exceeds N = {n}")]
    IdentityNotGuaranteed { twice_sum: u64, n: usize },

    #[error("MGF domain violated: t * a_k / sigma = {0} >= 1")]
    MgfDomain(f64),

    #[error("need more than {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("invalid experiment config: {0}")]
    Config(String),

    #[error("sampler failed at sample {index}: {source}")]
    Sample {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
