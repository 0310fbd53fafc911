use thiserror::Error;

/// Errors raised by the analysis library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degree error: {0}")]
    Degree(String),

    #[error("singular transfer function: {0}")]
    SingularTf(String),

    #[error("evaluation too close to a pole at omega = {omega}")]
    NearPole { omega: f64 },

    #[error("closed loop is unstable: {0}")]
    Unstable(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid filter: {0}")]
    InvalidFilter(String),

    #[error("invalid sensor mount: {0}")]
    InvalidMount(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("improper transfer function: {0}")]
    ImproperTf(String),

    #[error("step size {dt} too large; need dt <= {max_dt}")]
    StepTooLarge { dt: f64, max_dt: f64 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
