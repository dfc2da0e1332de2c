//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TqError {
    #[error("dimension must be at least 1")]
    InvalidDimension,

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid cut: {0}")]
    InvalidCut(String),

    #[error("container holds no samples")]
    EmptyContainer,

    /// The container cannot be split by the requested rule (e.g. all
    /// samples coincide on every axis). Tree builders retire such
    /// containers as leaves.
    #[error("degenerate container: {0}")]
    DegenerateContainer(String),

    #[error("empty input batch")]
    EmptyInput,

    #[error("empty batch: burn-in consumes the whole chain")]
    EmptyBatch,

    #[error("sampler failure: {0}")]
    SamplerFailure(String),

    #[error("invalid proposal: density is zero where the integrand is nonzero")]
    InvalidProposal,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no positive mass: every leaf contribution is non-positive")]
    NoMass,

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, TqError>;
