use thiserror::Error;

pub type Result<T> = std::result::Result<T, GkdvError>;

#[derive(Debug, Error)]
pub enum GkdvError {
    /// Negative-order homogeneous operators are singular at the zero mode.
    #[error("negative-order operator applied to field with nonzero mean (|mean| = {mean:e}, norm = {norm:e})")]
    NegativeOrderOnNonzeroMean { mean: f64, norm: f64 },

    #[error("box too small: profile tail {tail:e} at the box edge exceeds {limit:e}")]
    BoxTooSmall { tail: f64, limit: f64 },

    #[error("blowup detected at t = {time}: sup|u| = {sup:e} (ceiling {ceiling:e})")]
    BlowupDetected { time: f64, sup: f64, ceiling: f64 },

    #[error("modulation fit diverged{}: {reason}", frame.map(|f| format!(" at frame {f}")).unwrap_or_default())]
    FitDiverged { frame: Option<usize>, reason: String },

    #[error("time window too short: {frames} frames, need at least {required}")]
    WindowTooShort { frames: usize, required: usize },

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("unknown quantity `{0}`")]
    UnknownQuantity(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("snapshot format: {0}")]
    SnapshotFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl GkdvError {
    /// Validation failures map to CLI exit code 1, everything else to 2.
    pub fn is_validation(&self) -> bool {
        matches!(self, GkdvError::ConfigInvalid(_) | GkdvError::UnknownQuantity(_))
    }
}
