use thiserror::Error;

use crate::solvers::RermSolution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The upper end of a bisection bracket never satisfied the target
    /// inequality, even after automatic enlargement.
    #[error("bracket error: condition not met at upper bracket {hi}")]
    Bracket { hi: f64 },

    /// The solver ran out of iterations; `best` holds the best iterate reached.
    #[error("iteration limit of {iterations} reached (optimality gap {gap:e})")]
    IterationLimit { iterations: usize, gap: f64, best: Box<RermSolution> },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidInput(msg()))
    }
}
