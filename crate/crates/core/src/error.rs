use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition of an operation was violated. The message names it.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("window too small: {0}")]
    WindowTooSmall(String),

    #[error("recurrent regime: the Green's function needs d > min(2, alpha) (got d = {d}, alpha = {alpha})")]
    RecurrentRegime { d: usize, alpha: f64 },

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("numerical guard tripped: {0}")]
    NumericalGuard(String),

    #[error("bisection interval does not bracket the target: {0}")]
    NonBracketing(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NumericalGuard(_) | Error::NonBracketing(_) => 3,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
