//! Experiment runner: TOML configurations in, `report.json` and `cases.csv`
//! out.

pub mod config;
pub mod pipelines;
pub mod regression;
pub mod report;
pub mod run;

pub use config::{ConfigError, ExperimentConfig, ScenarioKind};
pub use regression::{regress_error_slope, RegressionError, SlopeFit};
pub use report::{write_outputs, CaseRecord, Check, Report};
pub use run::{run, RunOutput};
