//! Crate-wide error type.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Two objects that must share a shape do not; the message names the
    /// mismatched dimension.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("probability mass at index {index} is negative ({value})")]
    NegativeMass { index: usize, value: f64 },

    #[error("mass sums to {sum}, outside the renormalization window around 1")]
    Normalization { sum: f64 },

    #[error("empty alphabet")]
    EmptyAlphabet,

    #[error("alphabet symbol {symbol} appears more than once")]
    DuplicateSymbol { symbol: i64 },

    #[error("KL divergence undefined: p[{index}] > 0 where q[{index}] = 0")]
    KlDomain { index: usize },

    #[error("floor {floor} infeasible for {size} outcomes: floor * size > 1")]
    InfeasibleFloor { floor: f64, size: usize },

    #[error("joint weight support is empty")]
    EmptySupport,

    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("classifier assigns zero mass to label {label:?} at outcome {x_tilde}: reward is infinite")]
    InfiniteReward { x_tilde: usize, label: crate::dist::Label },

    #[error("degenerate reference in row {row}: tilt normalizer is {normalizer}")]
    DegenerateReference { row: usize, normalizer: f64 },

    #[error("outcome {x_tilde} has zero marginal mass under the joint")]
    ZeroMarginal { x_tilde: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("preference pair list is empty")]
    EmptyPairs,

    #[error("harm score {score} outside the 1..=5 scale")]
    ScoreOutOfRange { score: i64 },

    #[error("proposal {id} has no harm score")]
    UnscoredProposal { id: u64 },

    #[error("proposal {id} has no classifier verdict")]
    UnclassifiedProposal { id: u64 },

    #[error("proposal references unknown seed {id}")]
    UnknownSeed { id: u64 },

    #[error("no generation context for seed {seed} with prompt tag {tag:?}")]
    UnknownContext { seed: u64, tag: crate::dist::Label },

    #[error("context for seed {seed} has no candidates in language {language}")]
    EmptyLanguagePool { seed: u64, language: u8 },

    #[error("token {token} outside alphabet of size {alphabet_size}")]
    TokenOutOfRange { token: u32, alphabet_size: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
