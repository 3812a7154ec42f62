use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Two vectors that must live in the same space have different lengths.
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// An argument is outside the domain of the operation.
    #[error("{0}")]
    Domain(String),

    /// The operation is genuinely singular at this input (e.g. the plain
    /// James–Stein rule at `x == delta0`).
    #[error("singular input: {0}")]
    Singular(&'static str),

    /// A series or continued fraction did not reach the requested tolerance
    /// within its term budget. Never silently truncated.
    #[error("failed to converge: {0}")]
    Convergence(&'static str),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}
