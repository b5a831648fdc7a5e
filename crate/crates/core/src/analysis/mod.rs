//! Loss-landscape sweeps and trajectory metrics.

mod landscape;
mod metrics;
mod report;

pub use landscape::{loss_landscape, Axis, AxisSpec, LossGrid, LossSample, LOSS_GRID_HEADER};
pub use metrics::{
    ate_rmse, kitti_relative_errors, relative_errors_subtraj, umeyama_align, usable_lengths, BoxStats, KittiErrors,
    LengthError, SubtrajErrors, KITTI_LENGTHS,
};
pub use report::{evaluate, EvalOptions, MetricReport};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("trajectory lengths differ: {est} estimated vs {gt} ground-truth poses")]
    LengthMismatch { est: usize, gt: usize },
    #[error("empty trajectory")]
    Empty,
    #[error("path of {path_length:.3} m is too short for segment lengths {missing:?}; usable: {usable:?}")]
    TooShort {
        path_length: f64,
        missing: Vec<f64>,
        usable: Vec<f64>,
    },
    #[error("degenerate positions: {0}")]
    Degenerate(String),
    #[error("invalid axis: {0}")]
    InvalidAxis(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
