use alloc::string::String;

use thiserror::Error;

use crate::rational::Vector;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid rational literal {0:?}")]
pub struct ParseRationalError(pub String);

/// Failures of the exact calculus operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CalcError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operation requires a nonempty polyhedron")]
    EmptyPolyhedron,
    #[error("point {0} does not belong to the set")]
    PointNotInSet(Vector),
    #[error("function has empty effective domain")]
    ImproperFunction,
    #[error("a polyhedral function needs at least one affine piece")]
    NoPieces,
    #[error("integral functional has empty domain")]
    ImproperSum,
    #[error("function is +inf at {0}")]
    NotInDomain(Vector),
    #[error("epsilon-subdifferential of atom {atom} is empty at the query point")]
    EmptySummand { atom: usize },
    #[error("{xstar} is not in the {eps}-subdifferential")]
    NotInSubdifferential { xstar: Vector, eps: String },
    #[error("{0} is not an epsilon-subgradient at the base point")]
    NotEpsSubgradient(Vector),
    #[error("{0} is not in the relative interior of the conjugate domain")]
    NotInteriorPoint(Vector),
    #[error("negative parameter: {0}")]
    NegativeParameter(&'static str),
    #[error("weights must be strictly positive")]
    NonPositiveWeight,
    #[error("the measure space needs at least one atom")]
    NoAtoms,
    #[error("basis vectors do not span a subspace of the ambient space")]
    InvalidSubspace,
    #[error("theorem check {theorem} failed: {detail}")]
    TheoremViolation { theorem: &'static str, detail: String },
    #[error("schedule must be nonempty with matching lengths")]
    InvalidSchedule,
}

pub type Result<T, E = CalcError> = core::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(CalcError::DimensionMismatch { expected, found })
    }
}
