use thiserror::Error;

use crate::farey::Rational;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("rationals {0} and {1} are not Farey neighbours")]
    NotAdjacent(Rational, Rational),
    #[error("{0} is a root of the sector and has no Farey parents")]
    RootNode(Rational),
    #[error("({0}, {1}) is not a reduced pair")]
    NotReduced(i64, i64),
    #[error("integer overflow while {0}")]
    Overflow(&'static str),
    #[error("no hyperbolic torus: discriminant a^2 b^2 - 4a^2 - 4b^2 is negative")]
    NoHyperbolicTorus,
    #[error("degenerate triple: every trace must exceed 2 ({0})")]
    DegenerateTriple(String),
    #[error("Markoff-Fricke relation violated: relative defect {0}")]
    RelationViolated(String),
    #[error("trace {0} is not hyperbolic (must exceed 2)")]
    NotHyperbolic(String),
    #[error("trace of {0} requested before its Farey parents were computed")]
    EnumerationOrder(Rational),
    #[error("seed matrices inconsistent: commutator trace {0}, expected -2")]
    InconsistentBase(String),
    #[error("logarithm of a non-positive quantity in {0}")]
    LogDomain(&'static str),
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors that indicate an internal inconsistency (an oracle
    /// or identity mismatch) rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(
            self,
            Error::EnumerationOrder(_)
                | Error::InconsistentBase(_)
                | Error::LogDomain(_)
                | Error::Assembly(_)
        )
    }
}
