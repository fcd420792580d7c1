use thiserror::Error;

/// Errors raised by the geometry, network, training and metric routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate point configuration: centered source has rank {rank} (< 2)")]
    DegenerateConfiguration { rank: usize },

    #[error("frame {frame}: {source}")]
    AtFrame {
        frame: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("sequence too short: need {needed}, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("audio too short: need {needed} samples, got {got}")]
    TooShortAudio { needed: usize, got: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("zero-length bone {bone} at frame {frame}")]
    ZeroBone { frame: usize, bone: usize },

    #[error("bounding box has zero diagonal")]
    DegenerateExtent,

    #[error("component {0} has no members")]
    EmptyComponent(usize),

    #[error("speaker vector is not one-hot")]
    NotOneHot,

    #[error("value {0} outside the open interval (0, 1)")]
    DomainError(f64),

    #[error("positive and negative speakers coincide ({0})")]
    SameSpeaker(usize),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("empty split {0}")]
    EmptySplit(String),

    #[error("covariance is not positive semidefinite (eigenvalue {0})")]
    NonPsd(f64),

    #[error("covariance is singular: {samples} samples for dimension {dim}")]
    SingularCovariance { samples: usize, dim: usize },

    #[error("frame {frame}: bone into joint {joint} points opposite its rest direction; twist is ambiguous")]
    AmbiguousTwist { frame: usize, joint: usize },

    #[error("lip layout indices overlap at landmark {0}")]
    IndexOverlap(usize),

    #[error("checkpoint mismatch: {0}")]
    CheckpointMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub fn at_frame(self, frame: usize) -> Self {
        Error::AtFrame {
            frame,
            source: Box::new(self),
        }
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
