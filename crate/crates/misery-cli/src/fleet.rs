//! Turns configured model entries into live contestants and embedding
//! providers, and adapts them to the tournament's factory interface.

use misery_core::backend::{BackendError, BackendKind, Contestant, ScriptedBackend};
use misery_core::embed::{Embedder, HashEmbedder};
use misery_core::game::{ContestantFactory, FeedbackMode};
use misery_core::rng::SplitMix64;

use crate::config::{EmbeddingProviderKind, EmbeddingSection, ModelEntry};
use crate::http::{HttpChatBackend, HttpEmbedder};

/// Stream tag for oracle noise draws: the bytes of "oracle". Keeps
/// the oracle's noise stream disjoint from episode sampling, which
/// derives its streams from small indices.
const ORACLE_NOISE_STREAM: u64 = 0x6f72_6163_6c65;

/// Builds a fresh contestant for one run. Scripted queues and oracle
/// noise streams start from the same state every time, so a rebuilt
/// contestant replays identically.
pub fn build_contestant(entry: &ModelEntry, seed: u64) -> Result<Contestant, BackendError> {
    match entry.backend {
        BackendKind::Scripted => {
            let backend = match (&entry.replies, &entry.constant) {
                (Some(replies), None) => ScriptedBackend::new(replies.clone()),
                (None, Some(constant)) => ScriptedBackend::constant(constant.clone()),
                (Some(replies), Some(constant)) => {
                    ScriptedBackend::new(replies.clone()).with_fallback(constant.clone())
                }
                (None, None) => {
                    return Err(BackendError::InvalidSpec(format!(
                        "scripted model `{}` has no replay source",
                        entry.name
                    )))
                }
            };
            Ok(Contestant::scripted(backend))
        }
        BackendKind::Oracle => {
            let noise_sd = entry.noise_sd.unwrap_or(0.0);
            let rng = SplitMix64::derive(seed, ORACLE_NOISE_STREAM);
            Ok(Contestant::oracle(noise_sd, rng))
        }
        BackendKind::HttpChat => {
            let mut backend = HttpChatBackend::new(entry.to_model_spec(), entry.auth_style)?;
            if let Some(ms) = entry.initial_backoff_ms {
                backend = backend.with_initial_backoff_ms(ms);
            }
            Ok(Contestant::Chat(Box::new(backend)))
        }
    }
}

/// Factory over one config entry; the tournament calls `make` per
/// (seed, mode) run.
pub struct ConfigFactory {
    entry: ModelEntry,
}

impl ConfigFactory {
    pub fn new(entry: ModelEntry) -> Self {
        Self { entry }
    }
}

impl ContestantFactory for ConfigFactory {
    fn model_label(&self) -> String {
        self.entry.name.clone()
    }

    fn make(&self, seed: u64, _mode: FeedbackMode) -> Result<Contestant, BackendError> {
        build_contestant(&self.entry, seed)
    }
}

/// Builds the configured embedding provider. Validation has already
/// guaranteed the http fields are present.
pub fn build_embedder(section: &EmbeddingSection) -> crate::Result<Box<dyn Embedder>> {
    match section.provider {
        EmbeddingProviderKind::Hash => Ok(Box::new(HashEmbedder::new(section.dim)?)),
        EmbeddingProviderKind::Http => {
            let name = section.name.clone().unwrap_or_default();
            let endpoint = section.endpoint.clone().unwrap_or_default();
            let env = section.credential_env.clone().unwrap_or_default();
            Ok(Box::new(HttpEmbedder::new(
                name,
                endpoint,
                &env,
                section.auth_style,
            )?))
        }
    }
}
