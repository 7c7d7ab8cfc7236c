use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("{0}")]
    Core(#[from] backflow_core::Error),
    #[error("invariant violation {0}")]
    Invariant(String),
}

impl CliError {
    /// 2 for numerical invariant violations, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Invariant(_) => 2,
            Self::Core(e) if e.is_invariant_violation() => 2,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}
