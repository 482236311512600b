use thiserror::Error;

use crate::mild::PicardReport;

pub type Result<T> = std::result::Result<T, NsgError>;

#[derive(Debug, Error)]
pub enum NsgError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// `e^{a|k|_1}` produced a non-finite coefficient.
    #[error("Gevrey multiplier overflow on the l1 shell |k|_1 = {shell} (a = {a})")]
    Overflow { shell: i64, a: f64 },

    #[error("numerical blowup after t = {last_good_time}: {detail}")]
    Blowup { last_good_time: f64, detail: String },

    #[error("fixed-point iteration failed after {} iterations", .report.iterations)]
    FixedPointFailure { report: Box<PicardReport> },

    #[error("lambda schedule undefined: heat-part norm {uh_norm} is not in (0, 1)")]
    IncompatibleSchedule { uh_norm: f64 },

    #[error("diagnostic impossible: {0}")]
    DiagnosticImpossible(String),

    #[error("config error{}: {message}", .line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl NsgError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        NsgError::InvalidArgument(msg.into())
    }
}
