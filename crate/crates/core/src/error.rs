use thiserror::Error;

use crate::exprlang::ExprError;
use crate::types::Vec3;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("point ({}, {}, {}) lies outside the domain", .0.x, .0.y, .0.z)]
    OutOfDomain(Vec3),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("field vanishes (|F| = {norm:e}) at ({}, {}, {})", .point.x, .point.y, .point.z)]
    Equilibrium { point: Vec3, norm: f64 },
    #[error("trajectory left the domain near ({}, {}, {})", .point.x, .point.y, .point.z)]
    DomainExit { point: Vec3 },
    #[error(
        "|V| = {value:e} is below the floor {floor:e} at ({}, {}, {}); the 1/V factor of the \
         auxiliary momentum relation is undefined there",
        .point.x, .point.y, .point.z
    )]
    VFloor { point: Vec3, value: f64, floor: f64 },
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("step size underflow at t = {t}: {reason}")]
    StepUnderflow { t: f64, reason: String },
}

impl Error {
    /// Failures that arise while computing, as opposed to malformed input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Expr(e) => e.is_evaluation(),
            Error::Equilibrium { .. }
            | Error::DomainExit { .. }
            | Error::VFloor { .. }
            | Error::NonConvergence(_)
            | Error::StepUnderflow { .. }
            | Error::OutOfDomain(_)
            | Error::Precondition(_) => true,
            Error::DimensionMismatch(_) | Error::Invalid(_) => false,
        }
    }
}
