//! Forecast error metrics, comparison tables and prediction exports.

mod metrics;
mod report;

pub use metrics::{compute_metrics, mape, mse, rmse, Mape, Metrics};
pub use report::{
    build_report, evaluate_predictions, literature_baselines, read_predictions_csv,
    write_predictions_csv, ExperimentReport, MetricScale, MetricsRow, PredictionPoint, RunRecord,
    PREDICTIONS_HEADER,
};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{actual} actual values vs {predicted} predictions")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("no values to score")]
    Empty,
    #[error("every actual value is zero, MAPE is undefined")]
    AllZeroActuals,
    #[error("report needs at least one trained run")]
    NoRuns,
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}
