//! Campaign runner, parameter sweeps, comparison report and CSV/JSON IO on
//! top of `toaloc-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod report;
pub mod runner;
pub mod sweep;

pub use config::{ReportParams, RunConfig};
pub use error::SimError;
