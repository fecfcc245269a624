//! Error type shared by every module.
//!
//! Each variant is classified by [`ErrorKind`] so callers (the CLI in
//! particular) can map failures to the right exit code: malformed or
//! out-of-contract inputs versus results that exist mathematically but
//! cannot be resolved at the working precision.

use thiserror::Error;

/// Coarse classification used for exit-code mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// The input violates a precondition (bad parameters, wrong shape,
    /// non-depleted series where depletion is required, ...).
    Input,
    /// The computation is well-posed but the working precision cannot
    /// resolve it (vanishing denominators, unresolved Newton polygons,
    /// underflow after division, ...).
    Precision,
    /// An internal cross-check that must hold by construction failed.
    Consistency,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("not a p-adic unit")]
    NotUnit,

    #[error("outside convergence disk")]
    OutsideConvergenceDisk,

    #[error("precision underflow")]
    PrecisionUnderflow,

    #[error("divisor vanishes at this precision")]
    NotInvertible,

    #[error("theta^sigma requires p-depleted input")]
    ThetaRequiresDepleted,

    #[error("roots not rational at this precision; supply roots directly in EigenData")]
    RootsNotRational,

    #[error("iteration does not converge")]
    IterationDiverges,

    #[error("overconvergent-projection denominator vanishes at this precision")]
    DenominatorVanishes,

    #[error("overlap exceeds symmetric power")]
    OverlapExceedsSymmetricPower,

    #[error("non-integral output at this precision")]
    NonIntegralOutput,

    #[error("precision too low to resolve Newton polygon")]
    NewtonPolygonUnresolved,

    #[error("no slope gap at {0}")]
    NoSlopeGap(String),

    #[error("not a resolvent pole")]
    NotResolventPole,

    #[error("not adjoint pair")]
    NotAdjointPair,

    #[error("exceptional point")]
    ExceptionalPoint,

    #[error("exceptional Euler factor")]
    ExceptionalEulerFactor,

    #[error("Euler factor formulations disagree: {0}")]
    FormulationMismatch(String),

    #[error("basis does not resolve the form at this precision")]
    BasisDoesNotResolve,

    #[error("form outside basis span")]
    OutsideBasisSpan,

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            NotUnit | OutsideConvergenceDisk | ThetaRequiresDepleted
            | OverlapExceedsSymmetricPower | NotResolventPole | NotAdjointPair
            | ExceptionalPoint | ExceptionalEulerFactor | OutsideBasisSpan
            | Invalid(_) => ErrorKind::Input,
            PrecisionUnderflow | NotInvertible | RootsNotRational | IterationDiverges
            | DenominatorVanishes | NonIntegralOutput | NewtonPolygonUnresolved
            | NoSlopeGap(_) | BasisDoesNotResolve => ErrorKind::Precision,
            FormulationMismatch(_) => ErrorKind::Consistency,
        }
    }
}

/// Convenience constructor for parameter/shape errors.
pub fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}

pub type Result<T> = std::result::Result<T, Error>;
