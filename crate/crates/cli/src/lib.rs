//! Experiment driver: configuration, presets, reference caching and CSV
//! output around `lodll-core`.

pub mod cache;
pub mod config;
pub mod csv;
pub mod error;
pub mod experiments;
pub mod goldens;
pub mod presets;

pub use cache::{CacheOutcome, ReferenceCache};
pub use config::{parse_config, ConfigSources, Experiment, ExperimentConfig};
pub use csv::{fmt_sci, CsvTable};
pub use error::{CliError, Result};
pub use experiments::{compute_tables, run_experiment, RunReport};
