use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// `E[Z' 1_(0,alpha]] >= lambda (1 - alpha)`: the truncated overshoot eats
    /// the whole drift budget.
    #[error("dominance gap: truncated tail expectation {expectation} >= budget {budget}")]
    DominanceGap { expectation: f64, budget: f64 },

    #[error("invalid drift spec: {0}")]
    InvalidDriftSpec(String),

    #[error("censored fraction {fraction} exceeds limit {limit}")]
    Censoring { fraction: f64, limit: f64 },

    #[error("schedule validation failed at level {level}: achieved {achieved}, required {required}")]
    ScheduleValidation { level: usize, achieved: f64, required: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerically rank-deficient basis: {0}")]
    NumericalRank(String),

    #[error("basis condition number {cond:e} exceeds the limit")]
    IllConditioned { cond: f64 },

    #[error("basis is not unimodular: |det| = {det}")]
    NotUnimodular { det: f64 },

    #[error("enumeration produced {count} candidates, cap is {cap}")]
    Explosion { count: usize, cap: usize },

    #[error("rank error: expected rank {expected}, found {found}")]
    Rank { expected: usize, found: usize },

    #[error("integer overflow in exact arithmetic")]
    Overflow,

    #[error("invalid matrix measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("config error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(message: impl Into<String>) -> Self {
        Error::Config { line: None, message: message.into() }
    }

    /// Process exit code: 2 for configuration and input problems, 3 for
    /// everything raised by the numerics.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Parse(_) | Error::Io(_) => 2,
            _ => 3,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
