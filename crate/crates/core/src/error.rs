use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("table of resolution {resolution} needs about {required_bytes} bytes, budget is {budget_bytes}")]
    ResourceLimit { resolution: u32, required_bytes: u64, budget_bytes: u64 },
    #[error("provenance is missing or inconsistent: {0}")]
    MissingProvenance(String),
    #[error("constraint set is not closed: {0}")]
    Unclosed(String),
    #[error("constraint {index} is invalid: {reason}")]
    InvalidConstraint { index: usize, reason: String },
    #[error("solution violates row {row}: {reason}")]
    Infeasible { row: usize, reason: String },
    #[error("linear program is unbounded: {0}")]
    Unbounded(String),
    #[error("certificate rejected: {0}")]
    Certificate(String),
    #[error("invalid protocol graph: {0}")]
    InvalidGraph(String),
    #[error("bad file format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
