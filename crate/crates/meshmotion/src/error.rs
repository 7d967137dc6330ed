use crate::losses::LossReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("boundary set is empty: {0}")]
    EmptyBoundary(String),

    #[error("optimization diverged at iteration {iter}")]
    Diverged {
        iter: usize,
        /// Last report with finite values, if any iteration completed.
        last: Option<Box<LossReport>>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("file format error: {0}")]
    Format(String),
}

impl Error {
    /// Process exit code used by the command-line tools.
    ///
    /// 0 = ok, 2 = usage/validation, 3 = i/o, 4 = numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) | Error::Format(_) | Error::Json(_) => 3,
            Error::Diverged { .. } => 4,
            _ => 2,
        }
    }
}
