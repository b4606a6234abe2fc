use thiserror::Error;

use crate::model::ValidationReport;

/// Errors raised by team construction, solvers and reductions.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum TeamError {
    #[error("invalid team specification: {0}")]
    InvalidSpec(ValidationReport),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("stage {stage} out of range for a team with {dms} decision makers")]
    StageOutOfRange { stage: usize, dms: usize },

    #[error("{what}: {required} required, cap is {cap}")]
    CapExceeded {
        what: &'static str,
        required: u128,
        cap: u128,
    },

    #[error("absolute continuity fails on {} cell(s), first at {:?}", .0.len(), .0.first())]
    AbsoluteContinuity(Vec<crate::reduction::ContinuityViolation>),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl TeamError {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        TeamError::ShapeMismatch(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, TeamError>;
