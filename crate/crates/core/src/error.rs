use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coupling function is constant")]
    ConstantFunction,

    #[error("coupling function has no positive-slope zero (f_l = {lower}, f_u = {upper})")]
    NoZeroCrossing { lower: f64, upper: f64 },

    #[error("value {value} is outside the open range ({lower}, {upper})")]
    OutOfRange { value: f64, lower: f64, upper: f64 },

    #[error("gamma {gamma} is not below the chain threshold {threshold}")]
    AboveThreshold { gamma: f64, threshold: f64 },

    #[error("no locked solution of the standard chain equations found")]
    NoSolution,

    #[error("neither 0 nor pi is a positive-slope zero of the coupling function")]
    NoSymmetricZero,

    #[error("exhaustive search limited to N - 1 <= 4 phase differences, got {0}")]
    DimensionTooLarge(usize),

    #[error("at least two oscillators are required, got {0}")]
    TooFewOscillators(usize),

    #[error("non-finite phase at t = {time}")]
    NonFiniteState { time: f64 },

    #[error("upper bracket gamma = {0} still locks")]
    BadBracket(f64),

    #[error("analytic cap is infinite; bisection is not applicable")]
    NotApplicable,

    #[error("{0} system did not lock")]
    NotLocked(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cannot parse coupling function `{spec}`: {reason}")]
    Parse { spec: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
