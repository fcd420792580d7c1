use cospeech::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad arguments, configuration or input files.
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}: {1}")]
    Context(String, Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Self::Invalid(msg.into())
    }

    /// 2 for validation failures, 3 for runtime errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Invalid(_) => 2,
            Self::Core(e) | Self::Context(_, e) => match e {
                Error::InvalidConfig(_)
                | Error::CheckpointMismatch(_)
                | Error::Format(_)
                | Error::EmptySplit(_)
                | Error::EmptyCorpus => 2,
                _ => 3,
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Core(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Core(e.into())
    }
}
