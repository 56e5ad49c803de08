use thiserror::Error;

#[derive(Debug, Error)]
pub enum QsvError {
    #[error("size error: dimension {0} exceeds the limit {1}")]
    Size(usize, usize),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("vector is not normalized (norm {0})")]
    Normalization(f64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl QsvError {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            QsvError::NonConvergence(_) => 3,
            QsvError::Io(_) => 4,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for QsvError {
    fn from(e: std::io::Error) -> Self {
        QsvError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for QsvError {
    fn from(e: serde_json::Error) -> Self {
        QsvError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, QsvError>;
