use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{routine} did not converge within {iterations} iterations")]
    Convergence {
        routine: &'static str,
        iterations: usize,
    },
    #[error("posterior is undefined: concentration is zero and there is no data")]
    UndefinedPosterior,
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("no crossing of level {level} found for the quantile-process cdf")]
    NoCrossing { level: f64 },
    #[error("inverted interval: lower {lower} exceeds upper {upper}")]
    InvertedInterval { lower: f64, upper: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
