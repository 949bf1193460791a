//! File I/O with path-carrying errors, plus the output-directory
//! naming conventions for reports and transcripts.

use std::path::{Path, PathBuf};

use misery_core::dataset::Dataset;
use misery_core::game::FeedbackMode;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::Config;
use crate::{CliError, Result};

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `text`, creating parent directories as needed.
pub fn write_string(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| CliError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let text = read_to_string(path)?;
    Ok(Dataset::from_csv(&text)?)
}

pub fn load_config(path: &Path) -> Result<Config> {
    let text = read_to_string(path)?;
    let config = Config::from_toml(&text, path)?;
    config.validate(path)?;
    Ok(config)
}

/// Pretty JSON plus a trailing newline; the byte layout is stable for
/// identical values, which is what report determinism rests on.
pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let body = serde_json::to_string_pretty(value).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    write_string(path, &format!("{body}\n"))
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Replaces anything outside `[A-Za-z0-9._-]` so names stay safe as
/// file-name components.
pub fn sanitize_component(raw: &str) -> String {
    raw.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                c
            } else {
                '-'
            }
        })
        .collect()
}

pub fn mode_tag(mode: FeedbackMode) -> &'static str {
    match mode {
        FeedbackMode::Static => "static",
        FeedbackMode::Adaptive => "adaptive",
    }
}

pub fn report_path(out_dir: &Path, model: &str, seed: u64, mode: FeedbackMode) -> PathBuf {
    out_dir.join(format!(
        "report_{}_s{}_{}.json",
        sanitize_component(model),
        seed,
        mode_tag(mode)
    ))
}

pub fn transcript_path(
    out_dir: &Path,
    model: &str,
    seed: u64,
    mode: FeedbackMode,
    episode: usize,
) -> PathBuf {
    out_dir.join("transcripts").join(format!(
        "{}_s{}_{}_ep{:03}.json",
        sanitize_component(model),
        seed,
        mode_tag(mode),
        episode
    ))
}

/// All `report_*.json` files directly under `dir`, sorted by name.
pub fn list_reports(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if path.is_file() && name.starts_with("report_") && name.ends_with(".json") {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}
