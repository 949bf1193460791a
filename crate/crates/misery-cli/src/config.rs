//! Declarative run configuration: one TOML document drives both the
//! benchmark and the game-show commands. Parsing is strict (unknown
//! keys are rejected) and `validate` checks every cross-field rule up
//! front so runs fail before any network call.

use std::path::{Path, PathBuf};

use misery_core::backend::{BackendKind, ModelSpec};
use misery_core::game::FeedbackMode;
use misery_core::prompt::PromptStrategy;
use serde::{Deserialize, Serialize};

use crate::http::AuthStyle;
use crate::{CliError, Result};

pub const DEFAULT_SEEDS: [u64; 3] = [12, 123, 1234];
pub const DEFAULT_EPISODES: usize = 20;
pub const DEFAULT_K_VALUES: [usize; 3] = [1, 2, 5];
pub const DEFAULT_ABORT_FAILURE_RATIO: f64 = 0.25;
pub const DEFAULT_BENCH_SEED: u64 = 12;

/// Top-level configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Dataset CSV; relative paths resolve against the config file's
    /// directory.
    pub dataset: PathBuf,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub game: GameSection,
    #[serde(default)]
    pub bench: BenchSection,
    #[serde(default)]
    pub embedding: EmbeddingSection,
    #[serde(default)]
    pub models: Vec<ModelEntry>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSection {
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_episodes")]
    pub episodes: usize,
    #[serde(default)]
    pub feedback: FeedbackChoice,
}

impl Default for GameSection {
    fn default() -> Self {
        Self {
            seeds: default_seeds(),
            episodes: default_episodes(),
            feedback: FeedbackChoice::default(),
        }
    }
}

fn default_seeds() -> Vec<u64> {
    DEFAULT_SEEDS.to_vec()
}

fn default_episodes() -> usize {
    DEFAULT_EPISODES
}

/// Which feedback modes a game run plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum FeedbackChoice {
    /// Adaptive mode only.
    On,
    /// Static mode only.
    Off,
    #[default]
    Both,
}

impl FeedbackChoice {
    pub fn modes(self) -> Vec<FeedbackMode> {
        match self {
            FeedbackChoice::On => vec![FeedbackMode::Adaptive],
            FeedbackChoice::Off => vec![FeedbackMode::Static],
            FeedbackChoice::Both => vec![FeedbackMode::Static, FeedbackMode::Adaptive],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    /// Strategy names to run; `k` below expands the few-shot ones.
    #[serde(default = "default_strategies")]
    pub strategies: Vec<StrategyName>,
    #[serde(default = "default_k_values")]
    pub k: Vec<usize>,
    /// Seed for exemplar ordering and per-record draws.
    #[serde(default = "default_bench_seed")]
    pub seed: u64,
    /// Abort a cell once its backend failure rate exceeds this.
    #[serde(default = "default_abort_ratio")]
    pub abort_failure_ratio: f64,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            strategies: default_strategies(),
            k: default_k_values(),
            seed: default_bench_seed(),
            abort_failure_ratio: default_abort_ratio(),
        }
    }
}

fn default_strategies() -> Vec<StrategyName> {
    vec![
        StrategyName::ZeroShot,
        StrategyName::CotTwoStage,
        StrategyName::FewShotFixed,
        StrategyName::FewShotEmbedding,
    ]
}

fn default_k_values() -> Vec<usize> {
    DEFAULT_K_VALUES.to_vec()
}

fn default_bench_seed() -> u64 {
    DEFAULT_BENCH_SEED
}

fn default_abort_ratio() -> f64 {
    DEFAULT_ABORT_FAILURE_RATIO
}

/// A prompting strategy by name; few-shot kinds take their shot count
/// from the configured `k` grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum StrategyName {
    ZeroShot,
    CotTwoStage,
    FewShotFixed,
    FewShotRandom,
    FewShotEmbedding,
}

impl StrategyName {
    pub fn takes_k(self) -> bool {
        !matches!(self, StrategyName::ZeroShot | StrategyName::CotTwoStage)
    }

    /// Pairs the name with a shot count. `k` is ignored by the
    /// strategies that take none.
    pub fn with_k(self, k: usize) -> PromptStrategy {
        match self {
            StrategyName::ZeroShot => PromptStrategy::ZeroShot,
            StrategyName::CotTwoStage => PromptStrategy::CotTwoStage,
            StrategyName::FewShotFixed => PromptStrategy::FewShotFixed { k },
            StrategyName::FewShotRandom => PromptStrategy::FewShotRandom { k },
            StrategyName::FewShotEmbedding => PromptStrategy::FewShotEmbedding { k },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSection {
    #[serde(default)]
    pub provider: EmbeddingProviderKind,
    /// Vector dimension for the hash provider.
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// http provider: identity recorded in reports and cache keys.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub credential_env: Option<String>,
    #[serde(default)]
    pub auth_style: AuthStyle,
    /// Sidecar cache file; defaults to `<output_dir>/embedding_cache.json`
    /// for the http provider. The hash provider never caches.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache: Option<PathBuf>,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        Self {
            provider: EmbeddingProviderKind::default(),
            dim: default_dim(),
            name: None,
            endpoint: None,
            credential_env: None,
            auth_style: AuthStyle::default(),
            cache: None,
        }
    }
}

fn default_dim() -> usize {
    misery_core::embed::HashEmbedder::DEFAULT_DIM
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingProviderKind {
    /// Deterministic, network-free hash embedder.
    #[default]
    Hash,
    /// Remote provider speaking `{input: [...]} -> {vectors: [[...]]}`.
    Http,
}

/// One contestant model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEntry {
    pub backend: BackendKind,
    /// Display name; also the report file key, so it must be unique.
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    /// Environment variable holding the API credential. The variable
    /// name is the only thing ever written to configs or reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub credential_env: Option<String>,
    #[serde(default)]
    pub auth_style: AuthStyle,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_attempts")]
    pub max_attempts: u32,
    /// First retry delay for transport failures; doubles per retry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_backoff_ms: Option<u64>,
    /// Oracle backends: Gaussian noise added to the true score.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_sd: Option<f64>,
    /// Scripted backends: replies consumed in order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replies: Option<Vec<String>>,
    /// Scripted backends: reply repeated after `replies` drains (or
    /// for every call when `replies` is absent).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<String>,
}

fn default_max_attempts() -> u32 {
    3
}

impl ModelEntry {
    pub fn to_model_spec(&self) -> ModelSpec {
        ModelSpec {
            backend_kind: self.backend,
            model_name: self.name.clone(),
            endpoint: self.endpoint.clone(),
            credential_env: self.credential_env.clone(),
            temperature: self.temperature,
            max_attempts: self.max_attempts,
        }
    }
}

impl Config {
    /// Parses a TOML document. Use [`crate::files::load_config`] to
    /// read one from disk with path context.
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Dataset path resolved against the config file's directory.
    pub fn resolved_dataset(&self, config_path: &Path) -> PathBuf {
        resolve(config_path, &self.dataset)
    }

    /// Output directory resolved against the config file's directory.
    pub fn resolved_output_dir(&self, config_path: &Path) -> PathBuf {
        resolve(config_path, &self.output_dir)
    }

    /// Embedding cache path; http provider only.
    pub fn resolved_cache(&self, config_path: &Path) -> Option<PathBuf> {
        if self.embedding.provider != EmbeddingProviderKind::Http {
            return None;
        }
        Some(match &self.embedding.cache {
            Some(p) => resolve(config_path, p),
            None => self
                .resolved_output_dir(config_path)
                .join("embedding_cache.json"),
        })
    }

    /// Cross-field checks; `config_path` locates error messages and
    /// anchors relative paths.
    pub fn validate(&self, config_path: &Path) -> Result<()> {
        let fail = |message: String| CliError::Config {
            path: config_path.to_path_buf(),
            message,
        };

        let dataset = self.resolved_dataset(config_path);
        if !dataset.is_file() {
            return Err(fail(format!(
                "dataset file {} does not exist",
                dataset.display()
            )));
        }
        if self.game.seeds.is_empty() {
            return Err(fail("game.seeds must not be empty".into()));
        }
        if self.game.episodes == 0 {
            return Err(fail("game.episodes must be at least 1".into()));
        }
        if self.bench.strategies.is_empty() {
            return Err(fail("bench.strategies must not be empty".into()));
        }
        if self.bench.k.is_empty() && self.bench.strategies.iter().any(|s| s.takes_k()) {
            return Err(fail(
                "bench.k must not be empty for few-shot strategies".into(),
            ));
        }
        if self.bench.k.contains(&0) {
            return Err(fail("bench.k values must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.bench.abort_failure_ratio) {
            return Err(fail("bench.abort_failure_ratio must lie in [0, 1]".into()));
        }

        if self.embedding.provider == EmbeddingProviderKind::Http {
            for (field, value) in [
                ("embedding.name", &self.embedding.name),
                ("embedding.endpoint", &self.embedding.endpoint),
                ("embedding.credential_env", &self.embedding.credential_env),
            ] {
                if value.as_deref().unwrap_or("").is_empty() {
                    return Err(fail(format!("{field} is required for the http provider")));
                }
            }
        }
        if self.embedding.dim < 2 {
            return Err(fail("embedding.dim must be at least 2".into()));
        }

        let mut names = std::collections::BTreeSet::new();
        for entry in &self.models {
            if entry.name.trim().is_empty() {
                return Err(fail("every model needs a non-empty name".into()));
            }
            if !names.insert(entry.name.clone()) {
                return Err(fail(format!("duplicate model name `{}`", entry.name)));
            }
            match entry.backend {
                BackendKind::HttpChat => {
                    entry
                        .to_model_spec()
                        .validate()
                        .map_err(|e| fail(format!("model `{}`: {e}", entry.name)))?;
                }
                BackendKind::Scripted => {
                    if entry.replies.is_none() && entry.constant.is_none() {
                        return Err(fail(format!(
                            "scripted model `{}` needs `replies` or `constant`",
                            entry.name
                        )));
                    }
                }
                BackendKind::Oracle => {
                    if let Some(sd) = entry.noise_sd {
                        if !sd.is_finite() || sd < 0.0 {
                            return Err(fail(format!(
                                "model `{}`: noise_sd must be a finite number >= 0",
                                entry.name
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// The configured models, narrowed to `name` when given.
    pub fn select_models(&self, name: Option<&str>, config_path: &Path) -> Result<Vec<ModelEntry>> {
        let fail = |message: String| CliError::Config {
            path: config_path.to_path_buf(),
            message,
        };
        if self.models.is_empty() {
            return Err(fail("no models configured".into()));
        }
        match name {
            None => Ok(self.models.clone()),
            Some(wanted) => {
                let picked: Vec<ModelEntry> = self
                    .models
                    .iter()
                    .filter(|m| m.name == wanted)
                    .cloned()
                    .collect();
                if picked.is_empty() {
                    return Err(fail(format!("no model named `{wanted}` in config")));
                }
                Ok(picked)
            }
        }
    }
}

fn resolve(config_path: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        config_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(path)
    }
}

/// The benchmark grid: every (strategy, k) cell the config asks for.
pub fn expand_strategy_grid(
    strategies: &[StrategyName],
    k_values: &[usize],
) -> Vec<PromptStrategy> {
    let mut grid = Vec::new();
    for &name in strategies {
        if name.takes_k() {
            for &k in k_values {
                grid.push(name.with_k(k));
            }
        } else {
            grid.push(name.with_k(1));
        }
    }
    grid
}
