use thiserror::Error;

/// Which vital rate a bounds check refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rate {
    Growth,
    Mortality,
    Fertility,
}

impl std::fmt::Display for Rate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rate::Growth => write!(f, "growth g"),
            Rate::Mortality => write!(f, "mortality mu"),
            Rate::Fertility => write!(f, "fertility beta"),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: expected {expected} samples, got {found}")]
    Shape { expected: usize, found: usize },

    #[error("profile sample {index} is {value}; profiles must be finite and nonnegative")]
    NegativeDensity { index: usize, value: f64 },

    #[error("{rate} = {value} at x = {x} lies outside the declared bounds [{low}, {high}]")]
    BoundsViolation {
        rate: Rate,
        x: f64,
        value: f64,
        low: f64,
        high: f64,
    },

    #[error("inner fixed point did not converge after {iterations} iterations (last L1 residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
