//! Library surface of the qobsent CLI: run configuration, the spectral
//! cache, and deterministic output rendering. The binary in `main.rs` is a
//! thin clap wrapper over these.

pub mod cache;
pub mod config;
pub mod output;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("config validation error: {0}")]
    Validation(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Lib(#[from] qobsent::Error),
    #[error("cache error: {0}")]
    Cache(String),
}
