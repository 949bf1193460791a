//! Command-line companion to `misery-core`: configuration files,
//! dataset and report I/O, HTTP chat and embedding backends, the
//! leave-one-out benchmark runner, the game-show tournament driver,
//! and table rendering.

use std::path::PathBuf;

use misery_core::backend::BackendError;
use misery_core::dataset::DatasetError;
use misery_core::embed::EmbedError;
use misery_core::game::GameError;
use misery_core::metrics::MetricError;
use misery_core::prompt::PromptError;
use thiserror::Error;

pub mod bench;
pub mod cache;
pub mod config;
pub mod files;
pub mod fleet;
pub mod game_run;
pub mod http;
pub mod render;

/// Everything that can go wrong above the core engine.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("no reports found under {0}")]
    NoReports(PathBuf),
}

pub type Result<T> = std::result::Result<T, CliError>;
