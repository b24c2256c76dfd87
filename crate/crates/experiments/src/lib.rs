//! Reproducible Monte Carlo studies for the Brox diffusion: configuration,
//! replica orchestration, statistics and CSV/JSON output.

pub mod config;
pub mod criteria;
pub mod error;
pub mod output;
pub mod stats;
pub mod studies;

pub use config::{ExperimentConfig, Study};
pub use error::{ExpError, Result};
pub use output::{write_results, StudyResult};
