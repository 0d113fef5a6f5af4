//! Experiment harness for snowcast: configuration, forcing and observation
//! files, the synthetic twin, metrics and result export.

pub mod config;
pub mod error;
pub mod experiment;
pub mod io;
pub mod metrics;
pub mod synthetic;

pub use config::{ExperimentConfig, RunMode};
pub use error::{HarnessError, Result};
pub use experiment::{run_twin, write_twin, SeriesRow, TwinOutput};
pub use io::load_forcing_csv;
pub use metrics::{ar1_baseline, rmse, rmse_conventional, MetricsReport, ModeMetrics};
