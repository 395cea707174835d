//! Experiment pipeline: configuration, parallel realizations, aggregation,
//! CSV output and oracle cross-checks.

pub mod check;
pub mod config;
pub mod experiment;
pub mod output;
pub mod stats;

pub use check::{cross_check, validate_tow, Condition, CrossCheckReport, ValidateReport};
pub use config::{parse_config, ExperimentConfig, InstanceFilter, ScenarioKind};
pub use experiment::{prepare_instance, run_experiment, ExperimentResult, PreparedInstance, Realization};
pub use output::emit_csv;
pub use stats::{AggregateStats, Metric, Quartiles};
