//! ST / sKD / tKD training, accuracy metrics, robustness tables and the
//! class-correlation analysis.

mod adam;
mod correlation;
mod metrics;
mod objective;
mod robustness;
mod train;

pub use adam::AdamState;
pub use correlation::{
    class_correlation, correlation_from_features, insignificance_score, welch_t, CorrelationMatrix, T_THRESHOLD,
};
pub use metrics::{evaluate, predict, MetricsReport};
pub use objective::{build_objective, ObjectiveConfig, Strategy};
pub use robustness::{corruption_error, robustness_eval, robustness_kinds, RobustnessRow, RobustnessTable};
pub use train::{sample_gradient, train, train_from, TrainConfig};
