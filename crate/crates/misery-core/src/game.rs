//! The four-round misery game show: seeded episode casting, question
//! construction, feedback injection, grading, and score aggregation.
//!
//! One episode casts 12 distinct stories and asks eight questions:
//! two ordinal placements against a revealed anchor pair (Q1, Q2),
//! two binary comparisons against revealed bases (Q3, Q4), one scalar
//! estimate (Q5), and three interval guesses of widths 30, 20, 10
//! (Q6-Q8). In adaptive mode the whole episode is one running
//! conversation and every graded question is followed by a feedback
//! turn naming the correct answer; Q5 has no correct/incorrect
//! verdict, so it gets no feedback. In static mode every question is
//! an isolated conversation.
//!
//! Grading rules: ordinal truth uses inclusive anchor bounds (a score
//! equal to an anchor counts as between); binary truth is strict
//! (sampling guarantees unequal scores); an interval is correct only
//! when its width matches exactly and it contains the truth.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::answer::{
    parse_binary, parse_interval, parse_ordinal, parse_scalar, BinaryAnswer, OrdinalAnswer,
    ParsedAnswer,
};
use crate::backend::{canonical_interval, BackendError, CallMeta, Contestant, QuestionTruth};
use crate::chat::{ChatTurn, Transcript};
use crate::dataset::{format_score, MiseryRecord};
use crate::prompt::{render, PromptError};
use crate::rng::{IndexSampler, SplitMix64};

const GAME_SYSTEM: &str = include_str!("../templates/game_system.txt");
const ORDINAL_QUESTION: &str = include_str!("../templates/ordinal_question.txt");
const BINARY_QUESTION: &str = include_str!("../templates/binary_question.txt");
const SCALAR_QUESTION: &str = include_str!("../templates/scalar_question.txt");
const INTERVAL_QUESTION: &str = include_str!("../templates/interval_question.txt");
const REPROMPT_ORDINAL: &str = include_str!("../templates/reprompt_ordinal.txt");
const REPROMPT_BINARY: &str = include_str!("../templates/reprompt_binary.txt");
const REPROMPT_SCALAR: &str = include_str!("../templates/reprompt_scalar.txt");
const REPROMPT_INTERVAL: &str = include_str!("../templates/reprompt_interval.txt");
const FEEDBACK: &str = include_str!("../templates/feedback.txt");

/// One stricter-format retry per question before the answer is
/// recorded as invalid.
const REPROMPT_BUDGET: usize = 1;

/// Interval widths for Q6, Q7, Q8.
pub const BONUS_WIDTHS: [u32; 3] = [30, 20, 10];

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GameError {
    #[error("episode needs {needed} records, dataset has {got}")]
    DatasetTooSmall { needed: usize, got: usize },
    #[error("dataset ran out of records with differing scores during casting")]
    InsufficientScoreVariety,
    #[error("no completed episodes to aggregate")]
    NoEpisodes,
    #[error("tournament needs at least one model and one seed")]
    EmptyTournament,
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

/// Whether the host reveals correct answers as the episode runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackMode {
    /// Isolated conversation per question, no feedback.
    Static,
    /// One running conversation with feedback after each graded
    /// question.
    Adaptive,
}

/// The cast of one episode, in fixed role order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    /// Revealed reference stories for Round 1.
    pub anchors: (MiseryRecord, MiseryRecord),
    /// Hidden targets placed against the anchors (Q1, Q2).
    pub r1_targets: (MiseryRecord, MiseryRecord),
    /// (revealed base, hidden target) pairs for Q3 and Q4.
    pub r2_pairs: ((MiseryRecord, MiseryRecord), (MiseryRecord, MiseryRecord)),
    /// Hidden target for the scalar estimate (Q5).
    pub r3_target: MiseryRecord,
    /// Hidden targets for the three interval questions (Q6-Q8).
    pub bonus_targets: (MiseryRecord, MiseryRecord, MiseryRecord),
}

impl EpisodeSpec {
    /// The 12 cast records in role order.
    pub fn cast(&self) -> [&MiseryRecord; 12] {
        [
            &self.anchors.0,
            &self.anchors.1,
            &self.r1_targets.0,
            &self.r1_targets.1,
            &self.r2_pairs.0 .0,
            &self.r2_pairs.0 .1,
            &self.r2_pairs.1 .0,
            &self.r2_pairs.1 .1,
            &self.r3_target,
            &self.bonus_targets.0,
            &self.bonus_targets.1,
            &self.bonus_targets.2,
        ]
    }

    /// Checks cast distinctness, anchor score difference, and strict
    /// inequality within each Round-2 pair.
    pub fn check_invariants(&self) -> bool {
        let cast = self.cast();
        let mut ids: Vec<u64> = cast.iter().map(|r| r.id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len() == 12
            && self.anchors.0.score != self.anchors.1.score
            && self.r2_pairs.0 .0.score != self.r2_pairs.0 .1.score
            && self.r2_pairs.1 .0.score != self.r2_pairs.1 .1.score
    }
}

/// Draws the 12-role cast without replacement. Roles fill in fixed
/// order; when a role constrains the score (second anchor, Round-2
/// targets), records failing the constraint are consumed and skipped.
/// Deterministic per rng state.
pub fn sample_episode(
    records: &[MiseryRecord],
    rng: &mut SplitMix64,
) -> Result<EpisodeSpec, GameError> {
    if records.len() < 12 {
        return Err(GameError::DatasetTooSmall {
            needed: 12,
            got: records.len(),
        });
    }
    let mut sampler = IndexSampler::new(records.len());
    let mut draw = |rng: &mut SplitMix64,
                    predicate: &dyn Fn(&MiseryRecord) -> bool|
     -> Result<MiseryRecord, GameError> {
        loop {
            let idx = sampler
                .draw(rng)
                .ok_or(GameError::InsufficientScoreVariety)?;
            if predicate(&records[idx]) {
                return Ok(records[idx].clone());
            }
        }
    };
    let any = |_: &MiseryRecord| true;

    let anchor_a = draw(rng, &any)?;
    let anchor_b = draw(rng, &|r: &MiseryRecord| r.score != anchor_a.score)?;
    let r1_first = draw(rng, &any)?;
    let r1_second = draw(rng, &any)?;
    let base_one = draw(rng, &any)?;
    let target_one = draw(rng, &|r: &MiseryRecord| r.score != base_one.score)?;
    let base_two = draw(rng, &any)?;
    let target_two = draw(rng, &|r: &MiseryRecord| r.score != base_two.score)?;
    let r3_target = draw(rng, &any)?;
    let bonus_a = draw(rng, &any)?;
    let bonus_b = draw(rng, &any)?;
    let bonus_c = draw(rng, &any)?;

    Ok(EpisodeSpec {
        anchors: (anchor_a, anchor_b),
        r1_targets: (r1_first, r1_second),
        r2_pairs: ((base_one, target_one), (base_two, target_two)),
        r3_target,
        bonus_targets: (bonus_a, bonus_b, bonus_c),
    })
}

/// Samples `count` episodes; episode `i` draws from the stream
/// derived as `(seed, i)`, so episode casts are independent of one
/// another's skip counts.
pub fn sample_episodes(
    records: &[MiseryRecord],
    count: usize,
    seed: u64,
) -> Result<Vec<EpisodeSpec>, GameError> {
    (0..count)
        .map(|i| {
            let mut rng = SplitMix64::derive(seed, i as u64);
            sample_episode(records, &mut rng)
        })
        .collect()
}

/// Truth label for an ordinal question with inclusive bounds.
pub fn ordinal_truth(anchor_a: f64, anchor_b: f64, target: f64) -> OrdinalAnswer {
    let lo = anchor_a.min(anchor_b);
    let hi = anchor_a.max(anchor_b);
    if target < lo {
        OrdinalAnswer::Below
    } else if target > hi {
        OrdinalAnswer::Above
    } else {
        OrdinalAnswer::Between
    }
}

pub fn grade_ordinal(anchors: (f64, f64), target: f64, answer: OrdinalAnswer) -> bool {
    answer == ordinal_truth(anchors.0, anchors.1, target)
}

/// Truth label for a binary question; callers guarantee
/// `target != base`.
pub fn binary_truth(base: f64, target: f64) -> BinaryAnswer {
    if target > base {
        BinaryAnswer::Higher
    } else {
        BinaryAnswer::Lower
    }
}

pub fn grade_binary(base: f64, target: f64, answer: BinaryAnswer) -> bool {
    answer == binary_truth(base, target)
}

/// Correct iff the width matches exactly and the interval contains
/// the truth.
pub fn grade_interval(true_score: f64, lo: i64, hi: i64, required_width: u32) -> bool {
    hi - lo == required_width as i64 && lo as f64 <= true_score && true_score <= hi as f64
}

/// Kind of game question, used for invalid-answer bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionKind {
    Ordinal,
    Binary,
    Scalar,
    Interval,
}

/// Host feedback after a graded question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackMessage {
    pub correct: bool,
    /// The correct answer label: an ordinal or binary word, or a
    /// canonical correct interval rendered as `lo-hi`.
    pub label: String,
    /// The target's true score.
    pub score: f64,
}

impl FeedbackMessage {
    pub fn render(&self) -> Result<String, PromptError> {
        render(
            FEEDBACK,
            &[
                (
                    "verdict",
                    if self.correct { "correct" } else { "incorrect" },
                ),
                ("label", &self.label),
                ("score", &format_score(self.score)),
            ],
        )
    }
}

/// Outcome of one question within an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionResult {
    pub label: String,
    pub kind: QuestionKind,
    pub target_id: u64,
    /// Final reply text (the retry's reply when a re-prompt fired).
    pub reply: String,
    pub parsed: ParsedAnswer,
    pub reprompted: bool,
    /// None for the scalar question, which has no binary verdict.
    pub correct: Option<bool>,
    /// Some for a valid scalar answer: |prediction - truth|.
    pub distance: Option<f64>,
    pub calls: Vec<CallMeta>,
}

impl QuestionResult {
    pub fn is_invalid(&self) -> bool {
        matches!(self.parsed, ParsedAnswer::Invalid(_))
    }
}

/// Everything recorded about one played episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub index: usize,
    /// Cast record ids in role order.
    pub cast_ids: Vec<u64>,
    pub questions: Vec<QuestionResult>,
    /// Adaptive mode: one running conversation. Static mode: one
    /// isolated conversation per question, in question order.
    pub transcripts: Vec<Transcript>,
}

/// Per-kind counts of answers that stayed unparseable after the
/// re-prompt.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InvalidCounts {
    pub ordinal: usize,
    pub binary: usize,
    pub scalar: usize,
    pub interval: usize,
}

impl InvalidCounts {
    fn bump(&mut self, kind: QuestionKind) {
        match kind {
            QuestionKind::Ordinal => self.ordinal += 1,
            QuestionKind::Binary => self.binary += 1,
            QuestionKind::Scalar => self.scalar += 1,
            QuestionKind::Interval => self.interval += 1,
        }
    }
}

/// Aggregated outcome of one (model, seed, mode) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameReport {
    pub model: String,
    pub seed: u64,
    pub feedback_mode: FeedbackMode,
    pub episode_count: usize,
    /// Round accuracies in percent.
    pub round1: f64,
    pub round2: f64,
    pub bonus: f64,
    /// `(2*round1 + 2*round2 + 3*bonus) / 7`.
    pub overall: f64,
    /// Mean |Q5 prediction - truth| over valid Q5 answers; None when
    /// every Q5 reply was invalid.
    pub avg_distance_r3: Option<f64>,
    pub invalid: InvalidCounts,
    pub episodes: Vec<EpisodeResult>,
}

/// Question-count weighting: Round 1 and 2 carry two questions each,
/// the bonus round three.
pub fn weighted_overall(round1: f64, round2: f64, bonus: f64) -> f64 {
    (2.0 * round1 + 2.0 * round2 + 3.0 * bonus) / 7.0
}

struct QuestionPlan {
    label: &'static str,
    kind: QuestionKind,
    target_id: u64,
    text: String,
    reprompt: String,
    truth: QuestionTruth,
}

fn build_plans(spec: &EpisodeSpec) -> Result<Vec<QuestionPlan>, PromptError> {
    let (anchor_a, anchor_b) = (&spec.anchors.0, &spec.anchors.1);
    let anchor_lo = anchor_a.score.min(anchor_b.score);
    let anchor_hi = anchor_a.score.max(anchor_b.score);

    let ordinal =
        |label: &'static str, target: &MiseryRecord| -> Result<QuestionPlan, PromptError> {
            Ok(QuestionPlan {
                label,
                kind: QuestionKind::Ordinal,
                target_id: target.id,
                text: render(
                    ORDINAL_QUESTION,
                    &[
                        ("anchor_a", &anchor_a.statement),
                        ("anchor_a_score", &format_score(anchor_a.score)),
                        ("anchor_b", &anchor_b.statement),
                        ("anchor_b_score", &format_score(anchor_b.score)),
                        ("target", &target.statement),
                    ],
                )?,
                reprompt: REPROMPT_ORDINAL.to_string(),
                truth: QuestionTruth::Ordinal {
                    anchor_lo,
                    anchor_hi,
                    truth: target.score,
                },
            })
        };
    let binary = |label: &'static str,
                  base: &MiseryRecord,
                  target: &MiseryRecord|
     -> Result<QuestionPlan, PromptError> {
        Ok(QuestionPlan {
            label,
            kind: QuestionKind::Binary,
            target_id: target.id,
            text: render(
                BINARY_QUESTION,
                &[
                    ("base", &base.statement),
                    ("base_score", &format_score(base.score)),
                    ("target", &target.statement),
                ],
            )?,
            reprompt: REPROMPT_BINARY.to_string(),
            truth: QuestionTruth::Binary {
                base: base.score,
                truth: target.score,
            },
        })
    };
    let interval = |label: &'static str,
                    target: &MiseryRecord,
                    width: u32|
     -> Result<QuestionPlan, PromptError> {
        let width_text = format!("{width}");
        Ok(QuestionPlan {
            label,
            kind: QuestionKind::Interval,
            target_id: target.id,
            text: render(
                INTERVAL_QUESTION,
                &[("target", &target.statement), ("width", &width_text)],
            )?,
            reprompt: render(REPROMPT_INTERVAL, &[("width", &width_text)])?,
            truth: QuestionTruth::Interval {
                truth: target.score,
                width,
            },
        })
    };

    Ok(vec![
        ordinal("q1", &spec.r1_targets.0)?,
        ordinal("q2", &spec.r1_targets.1)?,
        binary("q3", &spec.r2_pairs.0 .0, &spec.r2_pairs.0 .1)?,
        binary("q4", &spec.r2_pairs.1 .0, &spec.r2_pairs.1 .1)?,
        QuestionPlan {
            label: "q5",
            kind: QuestionKind::Scalar,
            target_id: spec.r3_target.id,
            text: render(SCALAR_QUESTION, &[("target", &spec.r3_target.statement)])?,
            reprompt: REPROMPT_SCALAR.to_string(),
            truth: QuestionTruth::Scalar {
                truth: spec.r3_target.score,
            },
        },
        interval("q6", &spec.bonus_targets.0, BONUS_WIDTHS[0])?,
        interval("q7", &spec.bonus_targets.1, BONUS_WIDTHS[1])?,
        interval("q8", &spec.bonus_targets.2, BONUS_WIDTHS[2])?,
    ])
}

fn parse_reply(kind: QuestionKind, reply: &str) -> Option<ParsedAnswer> {
    match kind {
        QuestionKind::Ordinal => parse_ordinal(reply).map(ParsedAnswer::Ordinal),
        QuestionKind::Binary => parse_binary(reply).map(ParsedAnswer::Binary),
        QuestionKind::Scalar => parse_scalar(reply, 1.0, 100.0).map(ParsedAnswer::Scalar),
        QuestionKind::Interval => {
            parse_interval(reply).map(|(lo, hi)| ParsedAnswer::Interval { lo, hi })
        }
    }
}

/// Grades a parsed answer against the question truth. `None` for the
/// scalar question; invalid answers grade as incorrect.
fn grade(truth: &QuestionTruth, parsed: &ParsedAnswer) -> Option<bool> {
    match *truth {
        QuestionTruth::Scalar { .. } => None,
        QuestionTruth::Ordinal {
            anchor_lo,
            anchor_hi,
            truth,
        } => Some(match parsed {
            ParsedAnswer::Ordinal(ans) => grade_ordinal((anchor_lo, anchor_hi), truth, *ans),
            _ => false,
        }),
        QuestionTruth::Binary { base, truth } => Some(match parsed {
            ParsedAnswer::Binary(ans) => grade_binary(base, truth, *ans),
            _ => false,
        }),
        QuestionTruth::Interval { truth, width } => Some(match parsed {
            ParsedAnswer::Interval { lo, hi } => grade_interval(truth, *lo, *hi, width),
            _ => false,
        }),
    }
}

/// The revealed correct answer for feedback: truth label, or a
/// canonical correct interval.
fn correct_label(truth: &QuestionTruth) -> Option<(String, f64)> {
    match *truth {
        QuestionTruth::Scalar { .. } => None,
        QuestionTruth::Ordinal {
            anchor_lo,
            anchor_hi,
            truth,
        } => Some((
            ordinal_truth(anchor_lo, anchor_hi, truth).to_string(),
            truth,
        )),
        QuestionTruth::Binary { base, truth } => {
            Some((binary_truth(base, truth).to_string(), truth))
        }
        QuestionTruth::Interval { truth, width } => {
            let (lo, hi) = canonical_interval(truth, width);
            Some((format!("{lo}-{hi}"), truth))
        }
    }
}

/// Asks one question on `conversation`, retrying once with the
/// stricter re-prompt when the reply fails to parse. Appends every
/// exchanged turn to the conversation.
fn ask_question(
    contestant: &mut Contestant,
    conversation: &mut Transcript,
    plan: &QuestionPlan,
    calls: &mut Vec<CallMeta>,
) -> Result<(String, ParsedAnswer, bool), GameError> {
    conversation.push(ChatTurn::user(plan.text.clone()));
    let mut reply = contestant.respond(&conversation.turns, &plan.truth)?;
    calls.push(reply.meta.clone());
    conversation.push(ChatTurn::assistant(reply.text.clone()));

    let mut reprompted = false;
    let mut parsed = parse_reply(plan.kind, &reply.text);
    for _ in 0..REPROMPT_BUDGET {
        if parsed.is_some() {
            break;
        }
        reprompted = true;
        conversation.push(ChatTurn::user(plan.reprompt.clone()));
        reply = contestant.respond(&conversation.turns, &plan.truth)?;
        calls.push(reply.meta.clone());
        conversation.push(ChatTurn::assistant(reply.text.clone()));
        parsed = parse_reply(plan.kind, &reply.text);
    }

    let parsed = parsed.unwrap_or_else(|| ParsedAnswer::Invalid(reply.text.clone()));
    Ok((reply.text, parsed, reprompted))
}

/// Plays one episode. Transport failures abort the episode; a reply
/// that stays unparseable after the re-prompt becomes an invalid
/// answer and the episode continues.
pub fn run_episode(
    spec: &EpisodeSpec,
    contestant: &mut Contestant,
    mode: FeedbackMode,
    index: usize,
) -> Result<EpisodeResult, GameError> {
    let plans = build_plans(spec)?;
    let mut questions = Vec::with_capacity(plans.len());
    let mut transcripts = Vec::new();

    let mut running = Transcript::new();
    if mode == FeedbackMode::Adaptive {
        running.push(ChatTurn::system(GAME_SYSTEM));
    }

    for plan in &plans {
        let mut calls = Vec::new();
        let (reply, parsed, reprompted) = match mode {
            FeedbackMode::Adaptive => ask_question(contestant, &mut running, plan, &mut calls)?,
            FeedbackMode::Static => {
                let mut isolated = Transcript::new();
                isolated.push(ChatTurn::system(GAME_SYSTEM));
                let outcome = ask_question(contestant, &mut isolated, plan, &mut calls)?;
                transcripts.push(isolated);
                outcome
            }
        };

        let correct = grade(&plan.truth, &parsed);
        let distance = match (&plan.truth, &parsed) {
            (QuestionTruth::Scalar { truth }, ParsedAnswer::Scalar(v)) => Some((v - truth).abs()),
            _ => None,
        };

        if mode == FeedbackMode::Adaptive {
            if let (Some(correct), Some((label, score))) = (correct, correct_label(&plan.truth)) {
                let message = FeedbackMessage {
                    correct,
                    label,
                    score,
                };
                running.push(ChatTurn::feedback(message.render()?));
            }
        }

        questions.push(QuestionResult {
            label: plan.label.to_string(),
            kind: plan.kind,
            target_id: plan.target_id,
            reply,
            parsed,
            reprompted,
            correct,
            distance,
            calls,
        });
    }

    if mode == FeedbackMode::Adaptive {
        transcripts.push(running);
    }

    Ok(EpisodeResult {
        index,
        cast_ids: spec.cast().iter().map(|r| r.id).collect(),
        questions,
        transcripts,
    })
}

/// Folds played episodes into round accuracies, the weighted overall,
/// and the Round-3 distance statistic.
pub fn aggregate(
    model: &str,
    seed: u64,
    mode: FeedbackMode,
    episodes: Vec<EpisodeResult>,
) -> Result<GameReport, GameError> {
    if episodes.is_empty() {
        return Err(GameError::NoEpisodes);
    }
    let mut round_hits = [0usize; 3];
    let mut round_totals = [0usize; 3];
    let mut distances = Vec::new();
    let mut invalid = InvalidCounts::default();

    for episode in &episodes {
        for question in &episode.questions {
            if question.is_invalid() {
                invalid.bump(question.kind);
            }
            let bucket = match question.label.as_str() {
                "q1" | "q2" => Some(0),
                "q3" | "q4" => Some(1),
                "q6" | "q7" | "q8" => Some(2),
                _ => None,
            };
            if let Some(bucket) = bucket {
                round_totals[bucket] += 1;
                if question.correct == Some(true) {
                    round_hits[bucket] += 1;
                }
            }
            if let Some(distance) = question.distance {
                distances.push(distance);
            }
        }
    }

    let pct = |hits: usize, total: usize| 100.0 * hits as f64 / total as f64;
    let round1 = pct(round_hits[0], round_totals[0]);
    let round2 = pct(round_hits[1], round_totals[1]);
    let bonus = pct(round_hits[2], round_totals[2]);
    let avg_distance_r3 = if distances.is_empty() {
        None
    } else {
        Some(distances.iter().sum::<f64>() / distances.len() as f64)
    };

    Ok(GameReport {
        model: model.to_string(),
        seed,
        feedback_mode: mode,
        episode_count: episodes.len(),
        round1,
        round2,
        bonus,
        overall: weighted_overall(round1, round2, bonus),
        avg_distance_r3,
        invalid,
        episodes,
    })
}

/// Settings for one (model, seed, mode) run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub episode_count: usize,
    pub mode: FeedbackMode,
}

/// Samples and plays a full run, then aggregates it.
pub fn run_game(
    records: &[MiseryRecord],
    contestant: &mut Contestant,
    config: &RunConfig,
    model_label: &str,
) -> Result<GameReport, GameError> {
    let specs = sample_episodes(records, config.episode_count, config.seed)?;
    let mut episodes = Vec::with_capacity(specs.len());
    for (index, spec) in specs.iter().enumerate() {
        episodes.push(run_episode(spec, contestant, config.mode, index)?);
    }
    aggregate(model_label, config.seed, config.mode, episodes)
}

/// Builds a fresh contestant per (seed, mode) run.
pub trait ContestantFactory {
    fn model_label(&self) -> String;
    fn make(&self, seed: u64, mode: FeedbackMode) -> Result<Contestant, BackendError>;
}

/// Execution status of one run in a tournament, mirroring a
/// completed/failed matrix cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStatus {
    pub model: String,
    pub seed: u64,
    pub mode: FeedbackMode,
    pub completed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Default)]
pub struct TournamentOutcome {
    pub reports: Vec<GameReport>,
    pub statuses: Vec<RunStatus>,
}

/// Plays every (model, seed, mode) combination. A failed run records
/// an error status and never aborts sibling runs.
pub fn run_tournament(
    records: &[MiseryRecord],
    factories: &[&dyn ContestantFactory],
    seeds: &[u64],
    modes: &[FeedbackMode],
    episode_count: usize,
) -> Result<TournamentOutcome, GameError> {
    if factories.is_empty() || seeds.is_empty() || modes.is_empty() {
        return Err(GameError::EmptyTournament);
    }
    let mut outcome = TournamentOutcome::default();
    for factory in factories {
        let model = factory.model_label();
        for &seed in seeds {
            for &mode in modes {
                let config = RunConfig {
                    seed,
                    episode_count,
                    mode,
                };
                let result = factory
                    .make(seed, mode)
                    .map_err(GameError::from)
                    .and_then(|mut contestant| run_game(records, &mut contestant, &config, &model));
                match result {
                    Ok(report) => {
                        outcome.statuses.push(RunStatus {
                            model: model.clone(),
                            seed,
                            mode,
                            completed: true,
                            error: None,
                        });
                        outcome.reports.push(report);
                    }
                    Err(err) => outcome.statuses.push(RunStatus {
                        model: model.clone(),
                        seed,
                        mode,
                        completed: false,
                        error: Some(err.to_string()),
                    }),
                }
            }
        }
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::ScriptedBackend;
    use crate::chat::Role;

    fn rec(id: u64, score: f64) -> MiseryRecord {
        MiseryRecord {
            id,
            statement: format!("misfortune number {id}"),
            score,
            category: None,
        }
    }

    fn distinct_dataset(n: u64) -> Vec<MiseryRecord> {
        (1..=n).map(|i| rec(i, (i * 7 % 89 + 5) as f64)).collect()
    }

    #[test]
    fn ordinal_grading_examples() {
        assert!(grade_ordinal((30.0, 70.0), 50.0, OrdinalAnswer::Between));
        assert!(!grade_ordinal((30.0, 70.0), 80.0, OrdinalAnswer::Between));
        assert!(grade_ordinal((70.0, 30.0), 30.0, OrdinalAnswer::Between));
        assert!(grade_ordinal((30.0, 70.0), 20.0, OrdinalAnswer::Below));
        assert!(grade_ordinal((30.0, 70.0), 80.0, OrdinalAnswer::Above));
    }

    #[test]
    fn ordinal_grading_exhaustive() {
        // Anchors 30/70; targets forcing each truth label.
        let cases = [
            (20.0, OrdinalAnswer::Below),
            (50.0, OrdinalAnswer::Between),
            (80.0, OrdinalAnswer::Above),
        ];
        let answers = [
            OrdinalAnswer::Above,
            OrdinalAnswer::Below,
            OrdinalAnswer::Between,
        ];
        for (target, truth_label) in cases {
            for answer in answers {
                assert_eq!(
                    grade_ordinal((30.0, 70.0), target, answer),
                    answer == truth_label,
                    "target {target}, answer {answer}"
                );
            }
        }
    }

    #[test]
    fn binary_grading_exhaustive() {
        let cases = [(60.0, BinaryAnswer::Higher), (20.0, BinaryAnswer::Lower)];
        let answers = [BinaryAnswer::Higher, BinaryAnswer::Lower];
        for (target, truth_label) in cases {
            for answer in answers {
                assert_eq!(
                    grade_binary(40.0, target, answer),
                    answer == truth_label,
                    "target {target}, answer {answer}"
                );
            }
        }
    }

    #[test]
    fn interval_grading_examples() {
        assert!(grade_interval(56.0, 41, 71, 30));
        assert!(!grade_interval(56.0, 57, 77, 20));
        assert!(!grade_interval(50.0, 40, 49, 10));
        assert!(grade_interval(50.0, 50, 60, 10), "boundary containment");
        assert!(grade_interval(60.0, 50, 60, 10), "boundary containment");
    }

    #[test]
    fn episode_sampling_uses_all_of_a_12_record_dataset() {
        let records = distinct_dataset(12);
        let mut rng = SplitMix64::new(12);
        let spec = sample_episode(&records, &mut rng).unwrap();
        assert!(spec.check_invariants());
        let mut ids: Vec<u64> = spec.cast().iter().map(|r| r.id).collect();
        ids.sort_unstable();
        assert_eq!(ids, (1..=12).collect::<Vec<u64>>());
    }

    #[test]
    fn episode_sampling_rejects_small_datasets() {
        let records = distinct_dataset(11);
        let mut rng = SplitMix64::new(1);
        assert_eq!(
            sample_episode(&records, &mut rng).unwrap_err(),
            GameError::DatasetTooSmall {
                needed: 12,
                got: 11
            }
        );
    }

    #[test]
    fn episode_sampling_rejects_all_equal_scores() {
        let records: Vec<MiseryRecord> = (1..=15).map(|i| rec(i, 50.0)).collect();
        let mut rng = SplitMix64::new(1);
        assert_eq!(
            sample_episode(&records, &mut rng).unwrap_err(),
            GameError::InsufficientScoreVariety
        );
    }

    #[test]
    fn episode_sampling_is_seed_deterministic() {
        let records = distinct_dataset(40);
        let a = sample_episodes(&records, 5, 12).unwrap();
        let b = sample_episodes(&records, 5, 12).unwrap();
        assert_eq!(a, b);
        let c = sample_episodes(&records, 5, 123).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn episode_invariants_hold_across_many_seeds() {
        let records = distinct_dataset(40);
        for seed in 0..500 {
            let mut rng = SplitMix64::new(seed);
            let spec = sample_episode(&records, &mut rng).unwrap();
            assert!(spec.check_invariants(), "seed {seed}");
        }
    }

    #[test]
    fn oracle_zero_noise_is_perfect_in_both_modes() {
        let records = distinct_dataset(30);
        for mode in [FeedbackMode::Static, FeedbackMode::Adaptive] {
            let mut contestant = Contestant::oracle(0.0, SplitMix64::new(99));
            let config = RunConfig {
                seed: 12,
                episode_count: 3,
                mode,
            };
            let report = run_game(&records, &mut contestant, &config, "oracle").unwrap();
            assert_eq!(report.round1, 100.0, "{mode:?}");
            assert_eq!(report.round2, 100.0);
            assert_eq!(report.bonus, 100.0);
            assert_eq!(report.overall, 100.0);
            assert_eq!(report.avg_distance_r3, Some(0.0));
            assert_eq!(report.invalid, InvalidCounts::default());
        }
    }

    #[test]
    fn constant_between_gets_reprompted_then_invalid() {
        let records = distinct_dataset(20);
        let spec = {
            let mut rng = SplitMix64::new(7);
            sample_episode(&records, &mut rng).unwrap()
        };
        let mut contestant = Contestant::scripted(ScriptedBackend::constant("between"));
        let episode = run_episode(&spec, &mut contestant, FeedbackMode::Static, 0).unwrap();

        for q in &episode.questions[..2] {
            assert!(!q.reprompted, "{}", q.label);
            assert_eq!(q.parsed, ParsedAnswer::Ordinal(OrdinalAnswer::Between));
            let label = ordinal_truth(
                spec.anchors.0.score,
                spec.anchors.1.score,
                records.iter().find(|r| r.id == q.target_id).unwrap().score,
            );
            assert_eq!(q.correct, Some(label == OrdinalAnswer::Between));
        }
        for q in &episode.questions[2..] {
            assert!(q.reprompted, "{}", q.label);
            assert!(q.is_invalid(), "{}", q.label);
            assert_eq!(q.calls.len(), 2);
        }
        let report = aggregate("scripted", 7, FeedbackMode::Static, vec![episode]).unwrap();
        assert_eq!(report.invalid.binary, 2);
        assert_eq!(report.invalid.scalar, 1);
        assert_eq!(report.invalid.interval, 3);
        assert_eq!(report.round2, 0.0);
        assert_eq!(report.bonus, 0.0);
        assert_eq!(report.avg_distance_r3, None);
    }

    #[test]
    fn static_mode_isolates_questions() {
        let records = distinct_dataset(20);
        let spec = {
            let mut rng = SplitMix64::new(3);
            sample_episode(&records, &mut rng).unwrap()
        };
        let mut contestant = Contestant::oracle(0.0, SplitMix64::new(1));
        let episode = run_episode(&spec, &mut contestant, FeedbackMode::Static, 0).unwrap();
        assert_eq!(episode.transcripts.len(), 8);
        for transcript in &episode.transcripts {
            assert_eq!(transcript.turns[0].role, Role::System);
            assert!(
                transcript.turns.iter().all(|t| t.role != Role::Feedback),
                "static conversations never contain feedback"
            );
            // system + question + answer, with no carryover.
            assert_eq!(transcript.turns.len(), 3);
        }
    }

    #[test]
    fn adaptive_mode_runs_one_conversation_with_feedback() {
        let records = distinct_dataset(20);
        let spec = {
            let mut rng = SplitMix64::new(3);
            sample_episode(&records, &mut rng).unwrap()
        };
        let mut contestant = Contestant::oracle(0.0, SplitMix64::new(1));
        let episode = run_episode(&spec, &mut contestant, FeedbackMode::Adaptive, 0).unwrap();
        assert_eq!(episode.transcripts.len(), 1);
        let turns = &episode.transcripts[0].turns;
        let feedback_count = turns.iter().filter(|t| t.role == Role::Feedback).count();
        // Q1-Q4 and Q6-Q8 are graded; the scalar question is not.
        assert_eq!(feedback_count, 7);
        assert!(turns
            .iter()
            .filter(|t| t.role == Role::Feedback)
            .all(|t| t.content.contains("Your previous answer was correct")));
        // Feedback follows the graded answer before the next question.
        let last = turns.last().unwrap();
        assert_eq!(last.role, Role::Feedback);
    }

    fn feedback_game_spec() -> EpisodeSpec {
        // Anchors 40/60; every hidden target lands between them or
        // compares "higher", so the learner's defaults are always
        // wrong and an echoed label is always right.
        EpisodeSpec {
            anchors: (rec(1, 40.0), rec(2, 60.0)),
            r1_targets: (rec(3, 60.0), rec(4, 40.0)),
            r2_pairs: ((rec(5, 40.0), rec(6, 60.0)), (rec(7, 40.0), rec(8, 60.0))),
            r3_target: rec(9, 60.0),
            bonus_targets: (rec(10, 40.0), rec(11, 60.0), rec(12, 40.0)),
        }
    }

    #[test]
    fn feedback_learner_gains_only_with_feedback() {
        let spec = feedback_game_spec();
        assert!(spec.check_invariants());

        let mut adaptive =
            Contestant::Chat(alloc::boxed::Box::new(crate::backend::FeedbackLearner));
        let adaptive_episode =
            run_episode(&spec, &mut adaptive, FeedbackMode::Adaptive, 0).unwrap();
        let by_label = |ep: &EpisodeResult, label: &str| {
            ep.questions
                .iter()
                .find(|q| q.label == label)
                .unwrap()
                .correct
        };
        assert_eq!(by_label(&adaptive_episode, "q1"), Some(false));
        assert_eq!(
            by_label(&adaptive_episode, "q2"),
            Some(true),
            "echoed ordinal"
        );
        assert_eq!(by_label(&adaptive_episode, "q3"), Some(false));
        assert_eq!(
            by_label(&adaptive_episode, "q4"),
            Some(true),
            "echoed binary"
        );

        let mut static_run =
            Contestant::Chat(alloc::boxed::Box::new(crate::backend::FeedbackLearner));
        let static_episode = run_episode(&spec, &mut static_run, FeedbackMode::Static, 0).unwrap();
        for label in ["q1", "q2", "q3", "q4"] {
            assert_eq!(by_label(&static_episode, label), Some(false), "{label}");
        }
    }

    #[test]
    fn aggregate_reproduces_reference_overall_rows() {
        assert!((weighted_overall(57.08, 76.25, 55.28) - 61.79).abs() < 0.01);
        assert!((weighted_overall(38.16, 77.63, 50.88) - 54.89).abs() < 0.01);
        assert!((weighted_overall(100.0, 100.0, 100.0) - 100.0).abs() < 1e-9);
    }

    #[test]
    fn aggregate_counts_and_weights() {
        let records = distinct_dataset(30);
        let mut contestant = Contestant::oracle(0.0, SplitMix64::new(5));
        let config = RunConfig {
            seed: 12,
            episode_count: 4,
            mode: FeedbackMode::Static,
        };
        let report = run_game(&records, &mut contestant, &config, "oracle").unwrap();
        assert_eq!(report.episode_count, 4);
        assert!(
            (report.overall - weighted_overall(report.round1, report.round2, report.bonus)).abs()
                < 1e-9
        );
        assert_eq!(report.seed, 12);
        assert_eq!(report.model, "oracle");
    }

    #[test]
    fn aggregate_requires_episodes() {
        assert_eq!(
            aggregate("m", 1, FeedbackMode::Static, vec![]).unwrap_err(),
            GameError::NoEpisodes
        );
    }

    #[test]
    fn identical_runs_serialize_identically() {
        let records = distinct_dataset(25);
        let run = || {
            let mut contestant = Contestant::scripted(ScriptedBackend::constant("between"));
            let config = RunConfig {
                seed: 123,
                episode_count: 3,
                mode: FeedbackMode::Adaptive,
            };
            let report = run_game(&records, &mut contestant, &config, "scripted").unwrap();
            serde_json::to_string(&report).unwrap()
        };
        assert_eq!(run(), run());
    }

    struct ScriptedFactory {
        fail: bool,
    }

    impl ContestantFactory for ScriptedFactory {
        fn model_label(&self) -> String {
            if self.fail {
                "broken".to_string()
            } else {
                "scripted".to_string()
            }
        }

        fn make(&self, _seed: u64, _mode: FeedbackMode) -> Result<Contestant, BackendError> {
            if self.fail {
                // An empty queue fails on the first question.
                Ok(Contestant::scripted(ScriptedBackend::new(
                    Vec::<String>::new(),
                )))
            } else {
                Ok(Contestant::scripted(ScriptedBackend::constant("between")))
            }
        }
    }

    #[test]
    fn tournament_isolates_run_failures() {
        let records = distinct_dataset(30);
        let good = ScriptedFactory { fail: false };
        let bad = ScriptedFactory { fail: true };
        let outcome = run_tournament(
            &records,
            &[&good, &bad],
            &[12, 123, 1234],
            &[FeedbackMode::Static],
            2,
        )
        .unwrap();
        assert_eq!(outcome.statuses.len(), 6);
        assert_eq!(outcome.reports.len(), 3);
        let good_statuses: Vec<_> = outcome
            .statuses
            .iter()
            .filter(|s| s.model == "scripted")
            .collect();
        assert!(good_statuses.iter().all(|s| s.completed));
        let bad_statuses: Vec<_> = outcome
            .statuses
            .iter()
            .filter(|s| s.model == "broken")
            .collect();
        assert_eq!(bad_statuses.len(), 3);
        assert!(bad_statuses
            .iter()
            .all(|s| !s.completed && s.error.is_some()));
    }

    #[test]
    fn tournament_rejects_empty_axes() {
        let records = distinct_dataset(20);
        assert_eq!(
            run_tournament(&records, &[], &[12], &[FeedbackMode::Static], 1).unwrap_err(),
            GameError::EmptyTournament
        );
    }
}
