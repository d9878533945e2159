use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("no contrasts supplied")]
    MissingData,

    #[error("variance must be strictly positive and finite, got {0}")]
    InvalidVariance(f64),

    #[error("invalid comparison: {0}")]
    InvalidComparison(String),

    #[error("network is disconnected into {} components: {}", .0.len(), format_components(.0))]
    DisconnectedNetwork(Vec<Vec<String>>),

    #[error("unknown treatment `{0}`")]
    UnknownTreatment(String),

    #[error("comparison needs two distinct treatments, got `{0}` twice")]
    SameTreatment(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("path enumeration reached {reached} paths, exceeding the cap of {cap}")]
    PathExplosion { reached: usize, cap: usize },

    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),

    #[error("path cap must be at least 1")]
    InvalidCap,

    #[error("need at least 2 paths, got {0}")]
    InsufficientPaths(usize),

    #[error("`{0}` and `{1}` are not directly compared")]
    NoDirectEvidence(String, String),

    #[error("no indirect evidence links `{0}` and `{1}` once the direct edge is removed")]
    NoIndirectEvidence(String, String),

    #[error("invalid loop: {0}")]
    InvalidLoop(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: u64,
        column: usize,
        message: String,
    },
}

fn format_components(components: &[Vec<String>]) -> String {
    components
        .iter()
        .map(|c| format!("{{{}}}", c.join(", ")))
        .collect::<Vec<_>>()
        .join(" ")
}
