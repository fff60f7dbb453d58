//! Scenario files, reports and parallel execution around `mcvd-core`.

pub mod commands;
mod error;
pub mod parallel;
pub mod scenario_file;

pub use error::{AppError, AppResult};
