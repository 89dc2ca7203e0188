//! Configuration ingestion, experiment dispatch and result emission for the
//! `oqbm` command-line tool.

pub mod config;
pub mod experiments;
pub mod ks;
pub mod report;

pub use config::{load_config, parse_config, ConfigError, ExperimentConfig, ExperimentKind};
pub use experiments::{run_experiment, run_kind, with_threads, HarnessError};
pub use ks::{ks_distance, ks_distance_cdf, ks_distance_normal, KsError};
pub use report::{Bound, ConvergenceReport, Row, CSV_COLUMNS};
