use thiserror::Error;

/// Errors produced by the simulation and control toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PsnfError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integration diverged at t = {time}: non-finite state")]
    Diverged { time: f64 },

    #[error("state component went negative ({value:e}) at t = {time}")]
    NegativeState { time: f64, value: f64 },

    #[error("window [{start}, {end}] outside trajectory span [{span_start}, {span_end}]")]
    OutOfRange {
        start: f64,
        end: f64,
        span_start: f64,
        span_end: f64,
    },

    #[error("moving average undefined at t = {time} (requires t >= period {period})")]
    UndefinedRegion { time: f64, period: f64 },

    #[error("infeasible target {target}: below the uncontrolled equilibrium {floor}")]
    InfeasibleTarget { target: f64, floor: f64 },

    #[error("unreachable target {target}: averaged equilibrium never exceeds {ceiling}")]
    UnreachableTarget { target: f64, ceiling: f64 },

    #[error("empty duty history")]
    EmptyHistory,

    #[error("config error: {0}")]
    Config(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("io error: {0}")]
    Io(String),
}

impl PsnfError {
    /// True for failures of the numerical integration rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            PsnfError::Diverged { .. } | PsnfError::NegativeState { .. }
        )
    }
}

impl From<std::io::Error> for PsnfError {
    fn from(e: std::io::Error) -> Self {
        PsnfError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for PsnfError {
    fn from(e: serde_json::Error) -> Self {
        PsnfError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, PsnfError>;
