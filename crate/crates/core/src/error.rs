use thiserror::Error;

use crate::prob_core::ProbError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error("incompatible alphabets: {0}")]
    IncompatibleAlphabets(String),
    #[error("auxiliaries are not independent of the source (I(ST;WUV) = {0})")]
    NotDecoupled(f64),
    #[error("receiver Y is not a deterministic function of X")]
    NotSemiDeterministic,
    #[error("source is not Markov (I(S;T|K) = {0})")]
    NotMarkovSource(f64),
    #[error("inconsistent entropy tuple: {0}")]
    InvalidEntropyTuple(String),
    #[error("frontier is empty")]
    EmptyFrontier,
    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
