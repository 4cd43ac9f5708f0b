use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("field contains non-finite values{}", at_time(*.time))]
    NonFinite { time: Option<f64> },

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("numerical instability at t = {time}: non-finite state (try a smaller dt)")]
    Instability { time: f64 },

    #[error("requested time {requested} lies beyond the validity horizon {horizon}")]
    BeyondHorizon { requested: f64, horizon: f64 },

    #[error("fit rejected: {0}")]
    Fit(String),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("log-magnitude {value:.1} exceeds guard {limit} ({context})")]
    Overflow {
        value: f64,
        limit: f64,
        context: String,
    },

    #[error("snapshot container: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn at_time(time: Option<f64>) -> String {
    match time {
        Some(t) => format!(" at t = {t}"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
