use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grid is not symmetric about the origin")]
    AsymmetricGrid,

    #[error("the closed-form characteristic function requires a vanishing potential")]
    PotentialPresent,

    #[error("argument of the characteristic function could not be tracked along the contour")]
    UnresolvedContour,

    #[error("root count mismatch: contour winding {expected}, located {found}")]
    CountMismatch { expected: i64, found: i64 },

    #[error("{lambda} is not an eigenvalue within tolerance")]
    NotAnEigenvalue { lambda: Complex64 },

    #[error("non-real eigenvalue {0} in the search window")]
    ComplexSpectrum(Complex64),

    #[error("energy {0} sits on a channel threshold; the plane-wave basis is degenerate there")]
    ChannelThreshold(Complex64),

    #[error(
        "perfect-transmission routes disagree: direct {direct:?}, eigencurve {eigencurve:?}"
    )]
    RouteDisagreement {
        direct: Vec<f64>,
        eigencurve: Vec<f64>,
    },

    #[error("perfect-transmission energy {lambda} has reflection amplitude {reflection}")]
    ReflectionNotVanishing { lambda: f64, reflection: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
