use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("letter {letter} is not a generator of F_{rank}")]
    LetterOutOfRange { letter: i32, rank: u32 },

    #[error("ball of radius {radius} has {size} words, over the cap of {cap}")]
    BallCapExceeded { radius: usize, size: u128, cap: usize },

    #[error("convolution support reached {size} atoms, over the cap of {cap}; use Monte Carlo mode")]
    SupportCapExceeded { size: usize, cap: usize },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("query {index} lies outside window [-{window}, {window}] and the set has no closed form")]
    OutOfWindow { index: i64, window: i64 },

    #[error("no witness found: {0}")]
    NotFound(String),

    #[error("radius mismatch: need at least {needed}, have {have}")]
    RadiusMismatch { needed: usize, have: usize },

    #[error("need at least {needed} points, found {found}")]
    TooFewPoints { needed: usize, found: usize },

    #[error("base quasimorphism is not 3Z-valued at {word}")]
    NotThreeDivisible { word: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{0}")]
    InvalidArgument(String),
}
