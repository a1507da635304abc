use alloc::string::String;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("degenerate orientation basis: v1 and v2_raw are (nearly) parallel")]
    DegenerateBasis,
    #[error("gaussian mean is behind the camera (depth {depth})")]
    BehindCamera { depth: f64 },
    #[error("camera center lies inside the gaussian's 1-level ellipsoid")]
    CameraInsideGaussian,
    #[error("projected conic is not an ellipse")]
    NotAnEllipse,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("image too small: {width}x{height}, need at least {min}x{min}")]
    TooSmall { width: usize, height: usize, min: usize },
    #[error("every gaussian failed to project in every image")]
    AllProjectionsDegenerate,
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("invalid value for {field}: {reason}")]
    InvariantViolation { field: String, reason: String },
}

impl Error {
    pub(crate) fn invariant(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvariantViolation { field: field.into(), reason: reason.into() }
    }

    /// Projection failures that the fitter tolerates as an all-zero map.
    pub fn is_degenerate_projection(&self) -> bool {
        matches!(
            self,
            Error::BehindCamera { .. } | Error::CameraInsideGaussian | Error::NotAnEllipse | Error::DegenerateBasis
        )
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
