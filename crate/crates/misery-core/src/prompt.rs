//! Prompt construction for the five scoring strategies and exemplar
//! selection for the few-shot variants.
//!
//! Wording lives in `templates/*.txt` so prompt experiments never
//! touch engine code. Placeholders use `{name}` syntax and are
//! substituted in a single pass; substituted values are inserted
//! verbatim.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::chat::ChatTurn;
use crate::dataset::{format_score, MiseryRecord};
use crate::embed::{cosine_similarity, EmbedError, Embedder, EmbeddingVector};
use crate::rng::{IndexSampler, SplitMix64};

pub(crate) const SCORE_SYSTEM: &str = include_str!("../templates/score_system.txt");
const ZERO_SHOT_USER: &str = include_str!("../templates/zero_shot_user.txt");
const FEW_SHOT_USER: &str = include_str!("../templates/few_shot_user.txt");
const FEW_SHOT_EXAMPLE: &str = include_str!("../templates/few_shot_example.txt");
const COT_STAGE1_SYSTEM: &str = include_str!("../templates/cot_stage1_system.txt");
const COT_STAGE1_USER: &str = include_str!("../templates/cot_stage1_user.txt");
const COT_STAGE2_USER: &str = include_str!("../templates/cot_stage2_user.txt");

/// How scoring prompts are built. `k` is the exemplar count for the
/// few-shot kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptStrategy {
    ZeroShot,
    CotTwoStage,
    FewShotFixed { k: usize },
    FewShotRandom { k: usize },
    FewShotEmbedding { k: usize },
}

impl PromptStrategy {
    pub fn exemplar_count(&self) -> Option<usize> {
        match *self {
            PromptStrategy::ZeroShot | PromptStrategy::CotTwoStage => None,
            PromptStrategy::FewShotFixed { k }
            | PromptStrategy::FewShotRandom { k }
            | PromptStrategy::FewShotEmbedding { k } => Some(k),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PromptError {
    #[error("statement is empty")]
    EmptyStatement,
    #[error("stage-1 reasoning is empty")]
    EmptyReasoning,
    #[error("few-shot prompt needs at least one exemplar")]
    NoExemplars,
    #[error("need {k} exemplars but only {available} are eligible")]
    PoolTooSmall { k: usize, available: usize },
    #[error("fixed strategy requires a configured exemplar order")]
    FixedOrderMissing,
    #[error("fixed exemplar order names unknown record id {0}")]
    UnknownExemplarId(u64),
    #[error("strategy takes no exemplars")]
    StrategyTakesNoExemplars,
    #[error("template references unknown placeholder `{0}`")]
    UnknownPlaceholder(String),
    #[error("template has an unterminated placeholder")]
    UnterminatedPlaceholder,
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

/// Records eligible as in-context examples, with optional precomputed
/// embeddings and the configured order for the fixed strategy.
#[derive(Debug, Clone)]
pub struct ExemplarPool {
    records: Vec<MiseryRecord>,
    embeddings: BTreeMap<u64, EmbeddingVector>,
    fixed_order: Option<Vec<u64>>,
}

impl ExemplarPool {
    pub fn new(records: Vec<MiseryRecord>) -> Self {
        Self {
            records,
            embeddings: BTreeMap::new(),
            fixed_order: None,
        }
    }

    pub fn records(&self) -> &[MiseryRecord] {
        &self.records
    }

    /// Installs the ordered id list the fixed strategy reads from.
    pub fn set_fixed_order(&mut self, order: Vec<u64>) {
        self.fixed_order = Some(order);
    }

    pub fn fixed_order(&self) -> Option<&[u64]> {
        self.fixed_order.as_deref()
    }

    /// A seeded shuffle of all pool ids, the default source for
    /// [`Self::set_fixed_order`]. Recorded in reports so fixed runs
    /// are reproducible.
    pub fn seeded_order(&self, seed: u64) -> Vec<u64> {
        let mut rng = SplitMix64::derive(seed, 0xF1DE);
        let mut sampler = IndexSampler::new(self.records.len());
        let mut order = Vec::with_capacity(self.records.len());
        while let Some(idx) = sampler.draw(&mut rng) {
            order.push(self.records[idx].id);
        }
        order
    }

    pub fn set_embedding(&mut self, id: u64, vector: EmbeddingVector) {
        self.embeddings.insert(id, vector);
    }

    pub fn embedding(&self, id: u64) -> Option<&EmbeddingVector> {
        self.embeddings.get(&id)
    }

    fn eligible<'a>(&'a self, test: &MiseryRecord) -> Vec<&'a MiseryRecord> {
        self.records
            .iter()
            .filter(|r| r.id != test.id && r.statement != test.statement)
            .collect()
    }
}

/// Picks the in-context examples for one test record. Fixed mode reads
/// the pool's configured order and is identical across test records
/// (minus the leave-one-out drop); random mode draws from `rng`, which
/// callers derive per instance; embedding mode ranks by cosine
/// similarity, descending, ties broken by lower id. The test record is
/// never returned.
pub fn select_exemplars(
    strategy: PromptStrategy,
    pool: &ExemplarPool,
    test: &MiseryRecord,
    rng: &mut SplitMix64,
    embedder: &dyn Embedder,
) -> Result<Vec<MiseryRecord>, PromptError> {
    let k = strategy
        .exemplar_count()
        .ok_or(PromptError::StrategyTakesNoExemplars)?;
    let eligible = pool.eligible(test);
    if k > eligible.len() {
        return Err(PromptError::PoolTooSmall {
            k,
            available: eligible.len(),
        });
    }

    match strategy {
        PromptStrategy::FewShotFixed { .. } => {
            let order = pool.fixed_order().ok_or(PromptError::FixedOrderMissing)?;
            let mut picked = Vec::with_capacity(k);
            for &id in order {
                let record = pool
                    .records()
                    .iter()
                    .find(|r| r.id == id)
                    .ok_or(PromptError::UnknownExemplarId(id))?;
                if record.id == test.id || record.statement == test.statement {
                    continue;
                }
                picked.push(record.clone());
                if picked.len() == k {
                    return Ok(picked);
                }
            }
            Err(PromptError::PoolTooSmall {
                k,
                available: picked.len(),
            })
        }
        PromptStrategy::FewShotRandom { .. } => {
            let mut sampler = IndexSampler::new(eligible.len());
            let mut picked = Vec::with_capacity(k);
            for _ in 0..k {
                let idx = sampler.draw(rng).expect("k <= eligible checked above");
                picked.push(eligible[idx].clone());
            }
            Ok(picked)
        }
        PromptStrategy::FewShotEmbedding { .. } => {
            let test_vec = match pool.embedding(test.id) {
                Some(v) => v.clone(),
                None => embedder
                    .embed(&[&test.statement])?
                    .pop()
                    .ok_or_else(|| EmbedError::Provider("empty batch reply".into()))?,
            };
            let mut scored = Vec::with_capacity(eligible.len());
            for record in eligible {
                let vector = match pool.embedding(record.id) {
                    Some(v) => v.clone(),
                    None => embedder
                        .embed(&[&record.statement])?
                        .pop()
                        .ok_or_else(|| EmbedError::Provider("empty batch reply".into()))?,
                };
                let sim = cosine_similarity(&test_vec, &vector)?;
                scored.push((sim, record));
            }
            scored.sort_by(|a, b| {
                b.0.partial_cmp(&a.0)
                    .expect("similarities are finite")
                    .then(a.1.id.cmp(&b.1.id))
            });
            Ok(scored.into_iter().take(k).map(|(_, r)| r.clone()).collect())
        }
        PromptStrategy::ZeroShot | PromptStrategy::CotTwoStage => {
            Err(PromptError::StrategyTakesNoExemplars)
        }
    }
}

/// System turn with the scale plus one user turn carrying the
/// statement; no examples.
pub fn build_zero_shot(statement: &str) -> Result<Vec<ChatTurn>, PromptError> {
    require_statement(statement)?;
    Ok(alloc::vec![
        ChatTurn::system(SCORE_SYSTEM),
        ChatTurn::user(render(ZERO_SHOT_USER, &[("statement", statement)])?),
    ])
}

/// Stage 1 of the two-stage reasoning strategy: asks why the event is
/// distressing and deliberately requests no rating.
pub fn build_cot_stage1(statement: &str) -> Result<Vec<ChatTurn>, PromptError> {
    require_statement(statement)?;
    Ok(alloc::vec![
        ChatTurn::system(COT_STAGE1_SYSTEM),
        ChatTurn::user(render(COT_STAGE1_USER, &[("statement", statement)])?),
    ])
}

/// Stage 2: a fresh conversation embedding the stage-1 reasoning
/// verbatim and demanding a score-only reply.
pub fn build_cot_stage2(statement: &str, reasoning: &str) -> Result<Vec<ChatTurn>, PromptError> {
    require_statement(statement)?;
    if reasoning.trim().is_empty() {
        return Err(PromptError::EmptyReasoning);
    }
    Ok(alloc::vec![
        ChatTurn::system(SCORE_SYSTEM),
        ChatTurn::user(render(
            COT_STAGE2_USER,
            &[("statement", statement), ("reasoning", reasoning)],
        )?),
    ])
}

/// Few-shot prompt: exemplars rendered as statement/score pairs in
/// the given order, test statement last.
pub fn build_few_shot(
    statement: &str,
    exemplars: &[MiseryRecord],
) -> Result<Vec<ChatTurn>, PromptError> {
    require_statement(statement)?;
    if exemplars.is_empty() {
        return Err(PromptError::NoExemplars);
    }
    let mut examples = String::new();
    for (i, exemplar) in exemplars.iter().enumerate() {
        if i > 0 {
            examples.push_str("\n\n");
        }
        examples.push_str(&render(
            FEW_SHOT_EXAMPLE,
            &[
                ("statement", &exemplar.statement),
                ("score", &format_score(exemplar.score)),
            ],
        )?);
    }
    Ok(alloc::vec![
        ChatTurn::system(SCORE_SYSTEM),
        ChatTurn::user(render(
            FEW_SHOT_USER,
            &[("examples", &examples), ("statement", statement)],
        )?),
    ])
}

fn require_statement(statement: &str) -> Result<(), PromptError> {
    if statement.trim().is_empty() {
        return Err(PromptError::EmptyStatement);
    }
    Ok(())
}

/// Substitutes `{name}` placeholders. Every placeholder in the
/// template must have a binding; values are not re-scanned.
pub(crate) fn render(template: &str, vars: &[(&str, &str)]) -> Result<String, PromptError> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let close = after
            .find('}')
            .ok_or(PromptError::UnterminatedPlaceholder)?;
        let name = &after[..close];
        let value = vars
            .iter()
            .find(|(k, _)| *k == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| PromptError::UnknownPlaceholder(name.into()))?;
        out.push_str(value);
        rest = &after[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}
