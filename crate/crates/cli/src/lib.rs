//! Command-line harness around the `learnability` estimators: CSV ingestion,
//! configurable multi-trial experiments, figure presets, and result files.

pub mod config;
pub mod csv_io;
pub mod error;
pub mod experiment;
pub mod plot;
pub mod presets;

pub use config::{ExperimentConfig, Mode};
pub use csv_io::{export_csv, ingest_csv, read_csv, write_csv};
pub use error::{CliError, Result};
pub use experiment::{run_experiment, run_trials, summarize, ExperimentOutput, Manifest, SummaryRow, TrialRecord};
pub use presets::{preset, Figure, Scale};
