use std::path::PathBuf;

use gmq_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum GmqError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: unsupported image: {message}")]
    UnsupportedFormat { path: PathBuf, message: String },
    #[error("{file}: parse error at `{field}`: {message}")]
    Parse { file: String, field: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

pub type Result<T, E = GmqError> = std::result::Result<T, E>;

impl GmqError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GmqError::Io { path: path.into(), source }
    }

    pub fn invariant(field: impl Into<String>, reason: impl Into<String>) -> Self {
        GmqError::Core(CoreError::InvariantViolation { field: field.into(), reason: reason.into() })
    }

    /// Process exit status: 2 usage, 3 data or parse, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            GmqError::Usage(_) => 2,
            GmqError::Io { .. } | GmqError::UnsupportedFormat { .. } | GmqError::Parse { .. } => 3,
            GmqError::Core(e) => match e {
                CoreError::ConfigInvalid(_) => 2,
                CoreError::InvariantViolation { .. } | CoreError::DimensionMismatch(_) | CoreError::TooSmall { .. } => 3,
                CoreError::DegenerateBasis
                | CoreError::BehindCamera { .. }
                | CoreError::CameraInsideGaussian
                | CoreError::NotAnEllipse
                | CoreError::AllProjectionsDegenerate => 4,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_kind() {
        assert_eq!(GmqError::Usage("x".into()).exit_code(), 2);
        assert_eq!(GmqError::invariant("a", "b").exit_code(), 3);
        assert_eq!(GmqError::Core(CoreError::AllProjectionsDegenerate).exit_code(), 4);
        assert_eq!(GmqError::Core(CoreError::ConfigInvalid("k".into())).exit_code(), 2);
    }
}
