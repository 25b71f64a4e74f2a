use thiserror::Error;

use crate::field::FieldSpec;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("field mismatch: {0} vs {1}")]
    FieldMismatch(FieldSpec, FieldSpec),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is singular")]
    Singular,

    #[error("{op} is not supported over {field}")]
    Unsupported { field: FieldSpec, op: &'static str },

    #[error("pole at t=0 in entry ({row}, {col})")]
    PoleAtZero { row: usize, col: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("enumeration budget exceeded: {needed} candidates, budget {budget}")]
    Budget { needed: u128, budget: u128 },

    #[error("not a member of {0}")]
    NotMember(String),

    #[error("construction failed: {0}")]
    Construction(String),
}

pub type Result<T> = std::result::Result<T, Error>;
