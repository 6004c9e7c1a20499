use thiserror::Error;

/// Everything that can go wrong inside the engine.
///
/// Numeric payloads are carried as `f64` regardless of the scalar type used
/// for the computation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("gamma pole at x = {x}")]
    Pole { x: f64 },

    #[error("order range [{d_min}, {d_max}] does not fit in a single band")]
    BandCrossing { d_min: f64, d_max: f64 },

    #[error("parse error at byte {offset}: expected one of {}", expected.join(", "))]
    Parse { offset: usize, expected: Vec<String> },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("kernel exponent {beta} is not integrable (must be < 1)")]
    Exponent { beta: f64 },

    #[error("order {order} lies within {guard} of the gamma pole at {pole}")]
    PoleGuard { order: f64, pole: f64, guard: f64 },

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("evaluation point {t} lies on the boundary of an empty integral (order {order} > 0)")]
    EmptyInterval { t: f64, order: f64 },

    #[error("regularization parameter is unidentifiable: approximation does not depend on alpha")]
    SingularCalibration,

    #[error("zero pivot at node {index} (diagonal weight {value})")]
    ZeroPivot { index: usize, value: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Short machine-readable tag for diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Pole { .. } => "pole",
            Error::BandCrossing { .. } => "band",
            Error::Parse { .. } => "parse",
            Error::Domain(_) => "domain",
            Error::Exponent { .. } => "exponent",
            Error::PoleGuard { .. } => "pole-guard",
            Error::Resolution(_) => "resolution",
            Error::EmptyInterval { .. } => "empty-interval",
            Error::SingularCalibration => "singular-calibration",
            Error::ZeroPivot { .. } => "zero-pivot",
            Error::InvalidInput(_) => "invalid-input",
        }
    }

    /// True for errors caused by malformed input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::InvalidInput(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
