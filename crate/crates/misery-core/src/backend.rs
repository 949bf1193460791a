//! Contestant backends: the completion trait every model handle
//! implements, deterministic test backends, and the ground-truth
//! oracle used for harness self-validation.
//!
//! The oracle answers from the true scores plus optional Gaussian
//! noise and always emits text the parsers accept, so an end-to-end
//! run through prompts, parsing and grading should score perfectly at
//! zero noise. Models never see ground truth; only the oracle variant
//! of [`Contestant`] reads it.

use alloc::boxed::Box;
use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::{String, ToString};

use serde::{Deserialize, Serialize};

use crate::answer::{parse_binary, parse_interval, parse_ordinal};
use crate::chat::{validate_turns, ChatError, ChatTurn, Role};
use crate::dataset::format_score;
use crate::rng::SplitMix64;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum BackendError {
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("protocol error (status {status}): {body_excerpt}")]
    Protocol { status: u16, body_excerpt: String },
    #[error("credential environment variable `{0}` is not set")]
    MissingCredential(String),
    #[error("scripted reply queue is exhausted")]
    ReplayExhausted,
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Conversation(#[from] ChatError),
}

/// Per-call bookkeeping recorded in transcripts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallMeta {
    pub backend: String,
    pub attempts: u32,
    pub latency_ms: u64,
}

/// One backend reply plus its call metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct BackendReply {
    pub text: String,
    pub meta: CallMeta,
}

impl BackendReply {
    fn local(backend: &str, text: String) -> Self {
        Self {
            text,
            meta: CallMeta {
                backend: backend.to_string(),
                attempts: 1,
                latency_ms: 0,
            },
        }
    }
}

/// A black-box chat model. Implementations must not mutate the input
/// turns and must reject conversations that fail
/// [`crate::chat::validate_turns`].
pub trait ChatCompleter {
    /// Stable identity recorded in call metadata and reports.
    fn id(&self) -> String;

    fn complete(&mut self, turns: &[ChatTurn]) -> Result<BackendReply, BackendError>;
}

/// Replays a fixed queue of replies. With a fallback installed, the
/// backend keeps returning the fallback after the queue drains,
/// otherwise it reports exhaustion.
#[derive(Debug, Clone)]
pub struct ScriptedBackend {
    queue: VecDeque<String>,
    fallback: Option<String>,
}

impl ScriptedBackend {
    pub fn new(replies: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            queue: replies.into_iter().map(Into::into).collect(),
            fallback: None,
        }
    }

    /// A backend that answers every call with the same text.
    pub fn constant(reply: impl Into<String>) -> Self {
        Self {
            queue: VecDeque::new(),
            fallback: Some(reply.into()),
        }
    }

    /// Keeps answering with `reply` once the queue drains.
    pub fn with_fallback(mut self, reply: impl Into<String>) -> Self {
        self.fallback = Some(reply.into());
        self
    }

    pub fn remaining(&self) -> usize {
        self.queue.len()
    }
}

impl ChatCompleter for ScriptedBackend {
    fn id(&self) -> String {
        "scripted".to_string()
    }

    fn complete(&mut self, turns: &[ChatTurn]) -> Result<BackendReply, BackendError> {
        validate_turns(turns)?;
        let text = match self.queue.pop_front() {
            Some(t) => t,
            None => self.fallback.clone().ok_or(BackendError::ReplayExhausted)?,
        };
        Ok(BackendReply::local("scripted", text))
    }
}

/// A contestant that answers wrongly on its own but repeats any
/// correct label revealed by host feedback. It exists to prove the
/// feedback channel works: with feedback it aces repeat question
/// kinds, without feedback it keeps failing them.
#[derive(Debug, Clone, Default)]
pub struct FeedbackLearner;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum QuestionKind {
    Ordinal,
    Binary,
    Scalar,
    Interval,
}

fn detect_kind(question: &str) -> Option<QuestionKind> {
    if question.contains("points wide") || question.contains("points apart") {
        Some(QuestionKind::Interval)
    } else if question.contains("whole number") {
        Some(QuestionKind::Scalar)
    } else if question.contains("higher or lower") {
        Some(QuestionKind::Binary)
    } else if question.contains("above, below, or between") {
        Some(QuestionKind::Ordinal)
    } else {
        None
    }
}

/// Pulls the revealed label out of a feedback turn: the text between
/// "The correct answer was " and the following ";".
fn feedback_label(feedback: &str) -> Option<&str> {
    let marker = "The correct answer was ";
    let start = feedback.find(marker)? + marker.len();
    let rest = &feedback[start..];
    let end = rest.find(';')?;
    Some(&rest[..end])
}

impl ChatCompleter for FeedbackLearner {
    fn id(&self) -> String {
        "feedback-learner".to_string()
    }

    fn complete(&mut self, turns: &[ChatTurn]) -> Result<BackendReply, BackendError> {
        validate_turns(turns)?;
        let question = &turns.last().expect("validated non-empty").content;
        let kind = detect_kind(question);
        let echoed = turns
            .iter()
            .rev()
            .find(|t| t.role == Role::Feedback)
            .and_then(|t| feedback_label(&t.content))
            .filter(|label| match kind {
                Some(QuestionKind::Ordinal) => parse_ordinal(label).is_some(),
                Some(QuestionKind::Binary) => parse_binary(label).is_some(),
                Some(QuestionKind::Interval) => parse_interval(label).is_some(),
                Some(QuestionKind::Scalar) | None => false,
            });
        let text = match (echoed, kind) {
            (Some(label), _) => label.to_string(),
            (None, Some(QuestionKind::Ordinal)) => "above".to_string(),
            (None, Some(QuestionKind::Binary)) => "lower".to_string(),
            (None, Some(QuestionKind::Scalar)) => "50".to_string(),
            (None, Some(QuestionKind::Interval)) => "[0, 7]".to_string(),
            (None, None) => "pass".to_string(),
        };
        Ok(BackendReply::local("feedback-learner", text))
    }
}

/// Ground truth for one question, consumed only by the oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuestionTruth {
    /// True target score; answered on the 1-100 scale.
    Scalar { truth: f64 },
    /// Anchor scores (low, high) and the true target score.
    Ordinal {
        anchor_lo: f64,
        anchor_hi: f64,
        truth: f64,
    },
    /// Base score and the true target score.
    Binary { base: f64, truth: f64 },
    /// True target score and the required interval width.
    Interval { truth: f64, width: u32 },
}

/// Formats a legal answer from ground truth. With `noise_sd` zero the
/// answer is exactly correct; otherwise Gaussian noise perturbs the
/// target score first (revealed anchor and base scores stay exact).
pub fn oracle_reply(truth: &QuestionTruth, noise_sd: f64, rng: &mut SplitMix64) -> String {
    match *truth {
        QuestionTruth::Scalar { truth } => {
            let noisy = (truth + rng.gaussian(noise_sd)).clamp(1.0, 100.0);
            format_score(noisy)
        }
        QuestionTruth::Ordinal {
            anchor_lo,
            anchor_hi,
            truth,
        } => {
            let noisy = truth + rng.gaussian(noise_sd);
            if noisy < anchor_lo {
                "below".to_string()
            } else if noisy > anchor_hi {
                "above".to_string()
            } else {
                "between".to_string()
            }
        }
        QuestionTruth::Binary { base, truth } => {
            let noisy = truth + rng.gaussian(noise_sd);
            if noisy > base {
                "higher".to_string()
            } else {
                "lower".to_string()
            }
        }
        QuestionTruth::Interval { truth, width } => {
            let noisy = (truth + rng.gaussian(noise_sd)).clamp(0.0, 100.0);
            let (lo, hi) = canonical_interval(noisy, width);
            format!("{lo}-{hi}")
        }
    }
}

/// The width-`w` integer interval centered on `score`:
/// `lo = clamp(floor(score) - w/2, 0, 100 - w)`, `hi = lo + w`.
/// Always contains `score` and has exact width.
pub fn canonical_interval(score: f64, width: u32) -> (i64, i64) {
    let half = width as i64 / 2;
    let lo = (libm::floor(score) as i64 - half).clamp(0, 100 - width as i64);
    (lo, lo + width as i64)
}

/// Oracle state: noise level plus its own seeded random stream.
#[derive(Debug, Clone)]
pub struct OracleContestant {
    noise_sd: f64,
    rng: SplitMix64,
}

impl OracleContestant {
    pub fn new(noise_sd: f64, rng: SplitMix64) -> Self {
        Self { noise_sd, rng }
    }

    pub fn noise_sd(&self) -> f64 {
        self.noise_sd
    }
}

/// A participant in a run: either a black-box chat model or the
/// ground-truth oracle. The runner threads question truth through
/// `respond`; chat backends never receive it.
pub enum Contestant {
    Chat(Box<dyn ChatCompleter>),
    Oracle(OracleContestant),
}

impl Contestant {
    pub fn scripted(backend: ScriptedBackend) -> Self {
        Contestant::Chat(Box::new(backend))
    }

    pub fn oracle(noise_sd: f64, rng: SplitMix64) -> Self {
        Contestant::Oracle(OracleContestant::new(noise_sd, rng))
    }

    pub fn id(&self) -> String {
        match self {
            Contestant::Chat(backend) => backend.id(),
            Contestant::Oracle(_) => "oracle".to_string(),
        }
    }

    pub fn respond(
        &mut self,
        turns: &[ChatTurn],
        truth: &QuestionTruth,
    ) -> Result<BackendReply, BackendError> {
        match self {
            Contestant::Chat(backend) => backend.complete(turns),
            Contestant::Oracle(oracle) => {
                validate_turns(turns)?;
                let text = oracle_reply(truth, oracle.noise_sd, &mut oracle.rng);
                Ok(BackendReply::local("oracle", text))
            }
        }
    }
}

/// How a contestant is wired up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    HttpChat,
    Scripted,
    Oracle,
}

/// Descriptor for one contestant model, echoed into reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub backend_kind: BackendKind,
    pub model_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    /// Name of the environment variable holding the API credential.
    /// Only the name is ever stored or logged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub credential_env: Option<String>,
    pub temperature: f64,
    pub max_attempts: u32,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.model_name.is_empty() {
            return Err(BackendError::InvalidSpec("model_name is empty".into()));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(BackendError::InvalidSpec(format!(
                "temperature {} is not a finite non-negative number",
                self.temperature
            )));
        }
        if self.max_attempts < 1 {
            return Err(BackendError::InvalidSpec(
                "max_attempts must be >= 1".into(),
            ));
        }
        if self.backend_kind == BackendKind::HttpChat {
            if self.endpoint.as_deref().unwrap_or("").is_empty() {
                return Err(BackendError::InvalidSpec(
                    "http_chat requires an endpoint".into(),
                ));
            }
            if self.credential_env.as_deref().unwrap_or("").is_empty() {
                return Err(BackendError::InvalidSpec(
                    "http_chat requires a credential environment variable name".into(),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    fn ask(text: &str) -> Vec<ChatTurn> {
        vec![ChatTurn::system("host"), ChatTurn::user(text)]
    }

    #[test]
    fn scripted_pops_in_order_then_exhausts() {
        let mut backend = ScriptedBackend::new(["42", "higher"]);
        assert_eq!(backend.complete(&ask("q1")).unwrap().text, "42");
        assert_eq!(backend.remaining(), 1);
        assert_eq!(backend.complete(&ask("q2")).unwrap().text, "higher");
        assert_eq!(
            backend.complete(&ask("q3")).unwrap_err(),
            BackendError::ReplayExhausted
        );
    }

    #[test]
    fn scripted_constant_never_exhausts() {
        let mut backend = ScriptedBackend::constant("between");
        for _ in 0..20 {
            assert_eq!(backend.complete(&ask("q")).unwrap().text, "between");
        }
    }

    #[test]
    fn scripted_rejects_bad_conversations() {
        let mut backend = ScriptedBackend::constant("x");
        let dangling = vec![ChatTurn::user("q"), ChatTurn::assistant("a")];
        assert!(matches!(
            backend.complete(&dangling).unwrap_err(),
            BackendError::Conversation(_)
        ));
        assert!(matches!(
            backend.complete(&[]).unwrap_err(),
            BackendError::Conversation(ChatError::EmptyConversation)
        ));
    }

    #[test]
    fn scripted_meta_is_deterministic() {
        let mut backend = ScriptedBackend::constant("x");
        let meta = backend.complete(&ask("q")).unwrap().meta;
        assert_eq!(meta.backend, "scripted");
        assert_eq!(meta.attempts, 1);
        assert_eq!(meta.latency_ms, 0);
    }

    #[test]
    fn oracle_zero_noise_examples() {
        let mut rng = SplitMix64::new(1);
        let ordinal = QuestionTruth::Ordinal {
            anchor_lo: 30.0,
            anchor_hi: 70.0,
            truth: 50.0,
        };
        assert_eq!(oracle_reply(&ordinal, 0.0, &mut rng), "between");

        let scalar = QuestionTruth::Scalar { truth: 56.0 };
        assert_eq!(oracle_reply(&scalar, 0.0, &mut rng), "56");

        let binary = QuestionTruth::Binary {
            base: 40.0,
            truth: 60.0,
        };
        assert_eq!(oracle_reply(&binary, 0.0, &mut rng), "higher");

        let interval = QuestionTruth::Interval {
            truth: 56.0,
            width: 30,
        };
        assert_eq!(oracle_reply(&interval, 0.0, &mut rng), "41-71");
    }

    #[test]
    fn oracle_zero_noise_boundary_labels() {
        let mut rng = SplitMix64::new(1);
        let at_anchor = QuestionTruth::Ordinal {
            anchor_lo: 30.0,
            anchor_hi: 70.0,
            truth: 30.0,
        };
        assert_eq!(oracle_reply(&at_anchor, 0.0, &mut rng), "between");
        let above = QuestionTruth::Ordinal {
            anchor_lo: 30.0,
            anchor_hi: 70.0,
            truth: 80.0,
        };
        assert_eq!(oracle_reply(&above, 0.0, &mut rng), "above");
        let lower = QuestionTruth::Binary {
            base: 40.0,
            truth: 20.0,
        };
        assert_eq!(oracle_reply(&lower, 0.0, &mut rng), "lower");
    }

    #[test]
    fn canonical_interval_clamps_and_contains() {
        assert_eq!(canonical_interval(56.0, 30), (41, 71));
        assert_eq!(canonical_interval(3.0, 20), (0, 20));
        assert_eq!(canonical_interval(99.0, 10), (90, 100));
        for truth in 0..=100 {
            for width in [30u32, 20, 10] {
                let (lo, hi) = canonical_interval(truth as f64, width);
                assert_eq!(hi - lo, width as i64);
                assert!(lo >= 0 && hi <= 100);
                assert!((lo as f64) <= truth as f64 && truth as f64 <= hi as f64);
            }
        }
    }

    #[test]
    fn noisy_oracle_is_seed_deterministic_and_in_range() {
        let a = oracle_reply(
            &QuestionTruth::Scalar { truth: 56.0 },
            5.0,
            &mut SplitMix64::new(7),
        );
        let b = oracle_reply(
            &QuestionTruth::Scalar { truth: 56.0 },
            5.0,
            &mut SplitMix64::new(7),
        );
        assert_eq!(a, b);

        let mut rng = SplitMix64::new(11);
        for _ in 0..200 {
            let text = oracle_reply(&QuestionTruth::Scalar { truth: 98.0 }, 10.0, &mut rng);
            let value: f64 = text.parse().unwrap();
            assert!((1.0..=100.0).contains(&value), "got {value}");
        }
    }

    #[test]
    fn contestant_oracle_threads_truth() {
        let mut contestant = Contestant::oracle(0.0, SplitMix64::new(3));
        let reply = contestant
            .respond(&ask("q"), &QuestionTruth::Scalar { truth: 77.0 })
            .unwrap();
        assert_eq!(reply.text, "77");
        assert_eq!(reply.meta.backend, "oracle");
        assert_eq!(contestant.id(), "oracle");
    }

    #[test]
    fn feedback_learner_defaults_are_wrong_on_purpose() {
        let mut learner = FeedbackLearner;
        let ordinal_q = "Answer with exactly one word: above, below, or between.";
        assert_eq!(learner.complete(&ask(ordinal_q)).unwrap().text, "above");
        let binary_q = "Is it higher or lower than the base?";
        assert_eq!(learner.complete(&ask(binary_q)).unwrap().text, "lower");
        let scalar_q = "Estimate as a whole number between 1 and 100.";
        assert_eq!(learner.complete(&ask(scalar_q)).unwrap().text, "50");
        let interval_q = "Give an interval exactly 30 points wide.";
        assert_eq!(learner.complete(&ask(interval_q)).unwrap().text, "[0, 7]");
    }

    #[test]
    fn feedback_learner_echoes_legal_labels() {
        let mut learner = FeedbackLearner;
        let turns = vec![
            ChatTurn::user("Answer with exactly one word: above, below, or between."),
            ChatTurn::assistant("above"),
            ChatTurn::feedback(
                "Your previous answer was incorrect. The correct answer was between; that story's misery index is 40.",
            ),
            ChatTurn::user("Answer with exactly one word: above, below, or between."),
        ];
        assert_eq!(learner.complete(&turns).unwrap().text, "between");
    }

    #[test]
    fn feedback_learner_ignores_labels_of_other_kinds() {
        let mut learner = FeedbackLearner;
        let turns = vec![
            ChatTurn::user("Is it higher or lower?"),
            ChatTurn::assistant("lower"),
            ChatTurn::feedback(
                "Your previous answer was incorrect. The correct answer was higher; that story's misery index is 60.",
            ),
            ChatTurn::user("Answer with exactly one word: above, below, or between."),
        ];
        assert_eq!(learner.complete(&turns).unwrap().text, "above");

        let echo = vec![
            ChatTurn::user("Is it higher or lower?"),
            ChatTurn::assistant("lower"),
            ChatTurn::feedback(
                "Your previous answer was incorrect. The correct answer was higher; that story's misery index is 60.",
            ),
            ChatTurn::user("Is it higher or lower than the base?"),
        ];
        assert_eq!(learner.complete(&echo).unwrap().text, "higher");
    }

    #[test]
    fn model_spec_validation() {
        let mut spec = ModelSpec {
            backend_kind: BackendKind::HttpChat,
            model_name: "gpt-test".into(),
            endpoint: Some("https://example.invalid/v1/chat".into()),
            credential_env: Some("MISERY_API_KEY".into()),
            temperature: 0.0,
            max_attempts: 3,
        };
        assert!(spec.validate().is_ok());

        spec.endpoint = None;
        assert!(spec.validate().is_err());
        spec.endpoint = Some("https://example.invalid/v1/chat".into());
        spec.credential_env = None;
        assert!(spec.validate().is_err());

        let oracle = ModelSpec {
            backend_kind: BackendKind::Oracle,
            model_name: "oracle".into(),
            endpoint: None,
            credential_env: None,
            temperature: 0.0,
            max_attempts: 1,
        };
        assert!(oracle.validate().is_ok());

        let bad_temp = ModelSpec {
            temperature: -1.0,
            ..oracle.clone()
        };
        assert!(bad_temp.validate().is_err());
    }
}
