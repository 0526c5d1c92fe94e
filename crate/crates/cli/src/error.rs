use thiserror::Error;

/// Harness failures, each mapped onto a process exit code.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown experiment '{0}' (try `gaussfield list`)")]
    UnknownExperiment(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::UnknownExperiment(_) | HarnessError::Config(_) => EXIT_CONFIG,
            HarnessError::Resource(_) => EXIT_RESOURCE,
            HarnessError::Numerical(_) | HarnessError::Io(_) => EXIT_FAIL,
        }
    }
}

impl From<gaussfield::Error> for HarnessError {
    fn from(e: gaussfield::Error) -> Self {
        use gaussfield::Error as E;
        match e {
            E::Config(m) | E::Domain(m) | E::Degenerate(m) => HarnessError::Config(m),
            E::Resource(m) | E::Infeasible(m) => HarnessError::Resource(m),
            E::Numerical(m) => HarnessError::Numerical(m),
        }
    }
}

pub type HResult<T> = std::result::Result<T, HarnessError>;
