//! Core engine for misery-score evaluation.
//!
//! Everything in this crate is deterministic and free of I/O: dataset
//! validation and summary statistics, the seeded PRNG that all sampling
//! flows through, regression metrics, prompt construction and exemplar
//! selection, answer parsing, and the multi-round game-show protocol
//! with its graders and report aggregation.
//!
//! The crate is `no_std` (with `alloc`). File formats, HTTP backends and
//! the command-line interface live in the companion `misery-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod answer;
pub mod backend;
pub mod chat;
pub mod dataset;
pub mod embed;
pub mod game;
pub mod metrics;
pub mod prompt;
pub mod rng;

pub use answer::ParsedAnswer;
pub use backend::{Contestant, ModelSpec};
pub use chat::{ChatTurn, Role, Transcript};
pub use dataset::{Dataset, DatasetSummary, MiseryRecord};
pub use game::{EpisodeSpec, FeedbackMode, GameReport};
pub use metrics::MetricBundle;
pub use prompt::{ExemplarPool, PromptStrategy};
pub use rng::SplitMix64;
