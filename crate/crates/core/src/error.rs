use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-invertible zero mode (mean {mean:e})")]
    NonInvertibleZeroMode { mean: f64 },
    #[error("zero-mode obstruction in {0}")]
    ZeroModeObstruction(&'static str),
    #[error("window exceeds domain: radius {radius} on length {length}")]
    WindowExceedsDomain { radius: f64, length: f64 },
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("non-integrable: {0}")]
    NonIntegrable(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid mode index {0}")]
    InvalidMode(usize),
    #[error("blow-up suspected at t = {time}: {detail}")]
    BlowUp { time: f64, detail: String },
    #[error("growth monitor tripped at t = {0}")]
    MonitorTripped(f64),
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("interrupted")]
    Interrupted,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
