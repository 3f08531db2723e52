//! Configuration, basis caching, file formats and the command-line driver
//! for `nearfield-core`.

pub mod cache;
pub mod cli;
pub mod config;
pub mod error;
pub mod files;
pub mod pipeline;

pub use config::ExperimentConfig;
pub use error::{AppError, AppResult};
