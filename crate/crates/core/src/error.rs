use thiserror::Error;

use crate::geometry::Vec3;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("point {point} is not a lattice vertex (off by {distance})")]
    NotOnLattice { point: Vec3, distance: f64 },
    #[error("agent index {index} out of range for {n} agents")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("graph window mismatch: expected {expected} agents, found {found}")]
    GraphSizeMismatch { expected: usize, found: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("rejection budget of {budget} draws exhausted: {context}")]
    RejectionBudget { budget: usize, context: String },
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("seed {seed}: {source}")]
    Trial {
        seed: u64,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { field: field.into(), message: message.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
