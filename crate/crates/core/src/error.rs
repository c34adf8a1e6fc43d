use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("selective subproblem is degenerate: L_w ({l_w}) <= L_r ({l_r})")]
    DegenerateSelective { l_r: f64, l_w: f64 },

    #[error("no positive AUC margin (beta = {0}); the viability threshold is undefined")]
    NonPositiveMargin(f64),

    #[error("labels contain a single class")]
    SingleClass,

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },

    #[error("{path}:{row}:{column}: {message}")]
    Cell {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// Validation errors map to exit code 2, everything else to 3.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Invalid(_)
                | Error::Shape(_)
                | Error::Empty(_)
                | Error::Schema { .. }
                | Error::Cell { .. }
                | Error::Csv(_)
                | Error::Json(_)
        )
    }
}
