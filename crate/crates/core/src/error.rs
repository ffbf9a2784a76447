use thiserror::Error;

/// Errors raised by the recovery toolkit.
///
/// Everything except [`RecovError::Solver`] is a validation problem with the
/// caller's input; solver failures carry the numerical trace that led to them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecovError {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("rank deficient: columns {columns:?} are linearly dependent on the others")]
    RankDeficient { columns: Vec<usize> },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("null space of the measurements meets the model space (witness of norm 1 attached)")]
    Intersection { witness: Vec<f64> },

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("no admissible model space: {0}")]
    NoAdmissible(String),

    #[error("solver failure: {message}")]
    Solver { message: String, trace: Vec<f64> },
}

impl RecovError {
    /// True for errors caused by the input rather than by a numerical solver.
    pub fn is_validation(&self) -> bool {
        !matches!(self, RecovError::Solver { .. })
    }

    pub(crate) fn solver(message: impl Into<String>, trace: Vec<f64>) -> Self {
        RecovError::Solver {
            message: message.into(),
            trace,
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        RecovError::Invalid(message.into())
    }
}

pub type Result<T> = std::result::Result<T, RecovError>;

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(RecovError::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}
