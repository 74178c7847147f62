use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Model data violates a structural invariant (row sums, ranges, lengths).
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// An operation was called on a model missing a required ingredient.
    #[error("configuration error: {0}")]
    Config(String),

    #[error(
        "value iteration did not converge within {max_iter} sweeps (last residual {residual:.3e})"
    )]
    NoConvergence { max_iter: usize, residual: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// An enumeration would exceed its size guard.
    #[error("size guard exceeded: requires {required} but guard is {guard}")]
    GuardExceeded { required: u128, guard: u128 },
}

pub type Result<T> = std::result::Result<T, Error>;
