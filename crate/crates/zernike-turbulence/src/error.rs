use thiserror::Error;

/// Everything that can go wrong in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid Zernike index (n={n}, m={m}): need |m| <= n and n - |m| even")]
    InvalidMode { n: i64, m: i64 },

    #[error("precondition violated: {0}")]
    Domain(String),

    #[error("1F1({a}; {b}; -{x}) cannot be evaluated to working accuracy")]
    Overflow { a: f64, b: f64, x: f64 },

    #[error("sum not converged: partial value {partial:e}, tail estimate {tail:e}")]
    NonConvergent { partial: f64, tail: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
