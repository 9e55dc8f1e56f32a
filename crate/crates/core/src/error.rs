use thiserror::Error;

/// Every failure the library can report. Variants group into the exit-code
/// families used by the command line front end (see [`Error::class`]).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    BadDimensions(String),
    #[error("matrix is not symmetric (relative defect {defect:.3e})")]
    NonSymmetric { defect: f64 },
    #[error("ambiguous rank decision: gap ratio {gap:.3e} below required {required:.3e}")]
    AmbiguousRank { gap: f64, required: f64 },
    #[error("integer result changed under refinement: {coarse} vs {fine} ({what})")]
    UnstableIndex { what: String, coarse: i64, fine: i64 },
    #[error("non-degeneracy margin unstable under grid refinement: {coarse:.3e} vs {fine:.3e}")]
    Unstable { coarse: f64, fine: f64 },
    #[error("degenerate operator: {0}")]
    Degenerate(String),
    #[error("endpoint operator is degenerate (margin {margin:.3e})")]
    EndpointDegenerate { margin: f64 },
    #[error("end operator is degenerate (margin {margin:.3e})")]
    EndDegenerate { margin: f64 },
    #[error("unresolved eigenvalue crossing near s = {s:.6}")]
    UnresolvedCrossing { s: f64 },
    #[error("matrix path is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },
    #[error("boundary condition violated: {0}")]
    BoundaryConditionViolated(String),
    #[error("coefficient has not settled at the truncation (deviation {deviation:.3e})")]
    CoefficientNotSettled { deviation: f64 },
    #[error("right-hand side support too wide: {0}")]
    SupportTooWide(String),
    #[error("fit window too short: {0}")]
    WindowTooShort(String),
    #[error("all norms in the fit window underflow")]
    Underflow,
    #[error("end operators do not match for gluing (deviation {deviation:.3e})")]
    EndMismatch { deviation: f64 },
    #[error("grid too coarse: {points_per_width:.2} points per Gaussian width (need 6)")]
    GridTooCoarse { points_per_width: f64 },
    #[error("zero type has count 0 and no distinguished element")]
    NoElement,
    #[error("zeros too close: separation {separation:.3} < 4")]
    ZerosTooClose { separation: f64 },
    #[error("boundary zeros cannot be realised by one real deformation: {0}")]
    IncompatibleBoundaryZeros(String),
    #[error("kernel is empty")]
    EmptyKernel,
    #[error("end kind mismatch: {0}")]
    EndKindMismatch(String),
    #[error("degenerate asymptotic operator at end {end} (margin {margin:.3e})")]
    DegenerateAsymptotics { end: String, margin: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Coarse classification used for process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numerical,
    Degenerate,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            AmbiguousRank { .. } | UnstableIndex { .. } | Unstable { .. } | UnresolvedCrossing { .. } => {
                ErrorClass::Numerical
            }
            Degenerate(_)
            | EndpointDegenerate { .. }
            | EndDegenerate { .. }
            | DegenerateAsymptotics { .. } => ErrorClass::Degenerate,
            _ => ErrorClass::Validation,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
