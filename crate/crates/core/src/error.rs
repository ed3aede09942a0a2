use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible edge budget K = {k} for {n_edges} candidate edges (need 0 < K <= M)")]
    InfeasibleBudget { k: f64, n_edges: usize },

    /// `I + gamma*L - eta*D` is not positive definite for the given window (1-based).
    #[error(
        "singular system in window {window}: I + gamma*L - eta*D is not positive definite; try a smaller eta"
    )]
    SingularSystem { window: usize },

    #[error("objective diverged at iteration {iteration} (value {value}); try a smaller tau1")]
    Divergence { iteration: usize, value: f64 },

    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach a 1-based window number to a singular-system error.
    pub(crate) fn in_window(self, window: usize) -> Self {
        match self {
            Error::SingularSystem { .. } => Error::SingularSystem { window },
            other => other,
        }
    }

    /// Numerical failures are the ones a user fixes by changing step sizes or
    /// penalty weights rather than data.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularSystem { .. } | Error::Divergence { .. }
        )
    }
}
