//! Leave-one-out benchmark over the conventional regression task: for
//! every dataset record, build the strategy's prompt from the
//! remaining records, query the model, parse a scalar, and score the
//! run with the full metric set.

use std::collections::BTreeMap;

use misery_core::answer::parse_scalar;
use misery_core::backend::{Contestant, QuestionTruth};
use misery_core::dataset::Dataset;
use misery_core::embed::{Embedder, EmbeddingVector};
use misery_core::metrics::{self, MetricError, PredictionSet};
use misery_core::prompt::{
    build_cot_stage1, build_cot_stage2, build_few_shot, build_zero_shot, select_exemplars,
    ExemplarPool, PromptError, PromptStrategy,
};
use misery_core::rng::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::config::ModelEntry;
use crate::fleet::build_contestant;
use crate::Result;

/// Scalar replies are accepted anywhere on the score scale.
const SCALE: (f64, f64) = (0.0, 100.0);

/// Failure rate is only enforced after this many records, so one
/// early flake cannot kill a run.
const MIN_PROCESSED_BEFORE_ABORT: usize = 8;

/// Metric values for one cell. A metric is `None` when it is
/// undefined for the collected pairs (too few, or a constant side),
/// which keeps defined metrics reportable: a constant predictor still
/// has an MAE even though its Pearson does not exist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchMetrics {
    /// Pairs kept (valid prediction + truth).
    pub count: usize,
    /// Replies with no parseable in-range scalar.
    pub invalid_count: usize,
    pub mae: Option<f64>,
    pub rmse: Option<f64>,
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    pub r_squared: Option<f64>,
}

impl BenchMetrics {
    fn compute(outcomes: Vec<(Option<f64>, f64)>) -> Result<Self> {
        let set = PredictionSet::from_outcomes(outcomes)?;
        let pairs = set.pairs();
        Ok(Self {
            count: pairs.len(),
            invalid_count: set.invalid_count(),
            mae: defined(metrics::mae(pairs))?,
            rmse: defined(metrics::rmse(pairs))?,
            pearson: defined(metrics::pearson(pairs))?,
            spearman: defined(metrics::spearman(pairs))?,
            r_squared: defined(metrics::r_squared(pairs))?,
        })
    }
}

/// Maps "metric undefined for this data" to None and keeps real
/// failures as errors.
fn defined(result: std::result::Result<f64, MetricError>) -> Result<Option<f64>> {
    match result {
        Ok(v) => Ok(Some(v)),
        Err(
            MetricError::Empty
            | MetricError::TooFewPairs { .. }
            | MetricError::ConstantPredictions
            | MetricError::ConstantTruths,
        ) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// One (model, strategy) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub model: String,
    pub strategy: PromptStrategy,
    /// Records attempted (the whole dataset unless aborted).
    pub processed: usize,
    /// Backend failures (transport, protocol, replay exhaustion).
    pub failures: usize,
    /// True when the failure rate crossed the configured threshold
    /// and the cell stopped early; collected pairs are still scored.
    pub aborted: bool,
    /// Set when the contestant could not even be constructed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Most recent backend failure message, kept for diagnosis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_failure: Option<String>,
    pub metrics: BenchMetrics,
}

impl BenchCell {
    /// A cell counts as successful when it ran to completion and
    /// scored at least one prediction.
    pub fn succeeded(&self) -> bool {
        !self.aborted && self.error.is_none() && self.metrics.mae.is_some()
    }
}

/// Full benchmark output: the grid of cells plus everything needed to
/// reproduce the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub seed: u64,
    pub dataset_len: usize,
    /// Identity of the embedding provider used for retrieval cells.
    pub embedding_provider: String,
    /// The seeded exemplar order that fixed few-shot cells read from.
    pub fixed_order: Vec<u64>,
    pub cells: Vec<BenchCell>,
}

enum OneOutcome {
    Parsed(f64),
    Unparsed,
    Failed(String),
}

fn predict_one(
    contestant: &mut Contestant,
    strategy: PromptStrategy,
    pool: &ExemplarPool,
    record: &misery_core::dataset::MiseryRecord,
    rng: &mut SplitMix64,
    embedder: &dyn Embedder,
) -> Result<OneOutcome> {
    let truth = QuestionTruth::Scalar {
        truth: record.score,
    };
    let turns = match strategy {
        PromptStrategy::ZeroShot => build_zero_shot(&record.statement)?,
        PromptStrategy::CotTwoStage => {
            let stage1 = build_cot_stage1(&record.statement)?;
            let reasoning = match contestant.respond(&stage1, &truth) {
                Ok(reply) => reply.text,
                Err(e) => return Ok(OneOutcome::Failed(e.to_string())),
            };
            match build_cot_stage2(&record.statement, &reasoning) {
                Ok(turns) => turns,
                // A blank reasoning pass is a bad model output, not a
                // configuration problem.
                Err(PromptError::EmptyReasoning) => return Ok(OneOutcome::Unparsed),
                Err(e) => return Err(e.into()),
            }
        }
        PromptStrategy::FewShotFixed { .. }
        | PromptStrategy::FewShotRandom { .. }
        | PromptStrategy::FewShotEmbedding { .. } => {
            let exemplars = select_exemplars(strategy, pool, record, rng, embedder)?;
            build_few_shot(&record.statement, &exemplars)?
        }
    };
    let reply = match contestant.respond(&turns, &truth) {
        Ok(reply) => reply.text,
        Err(e) => return Ok(OneOutcome::Failed(e.to_string())),
    };
    Ok(match parse_scalar(&reply, SCALE.0, SCALE.1) {
        Some(value) => OneOutcome::Parsed(value),
        None => OneOutcome::Unparsed,
    })
}

fn run_cell(
    dataset: &Dataset,
    entry: &ModelEntry,
    strategy: PromptStrategy,
    seed: u64,
    abort_ratio: f64,
    embedder: &dyn Embedder,
    embeddings: Option<&BTreeMap<u64, EmbeddingVector>>,
) -> Result<BenchCell> {
    let mut pool = ExemplarPool::new(dataset.records().to_vec());
    pool.set_fixed_order(pool.seeded_order(seed));
    if let Some(map) = embeddings {
        for (&id, vector) in map {
            pool.set_embedding(id, vector.clone());
        }
    }

    let mut cell = BenchCell {
        model: entry.name.clone(),
        strategy,
        processed: 0,
        failures: 0,
        aborted: false,
        error: None,
        last_failure: None,
        metrics: BenchMetrics {
            count: 0,
            invalid_count: 0,
            mae: None,
            rmse: None,
            pearson: None,
            spearman: None,
            r_squared: None,
        },
    };

    let mut contestant = match build_contestant(entry, seed) {
        Ok(c) => c,
        Err(e) => {
            cell.error = Some(e.to_string());
            return Ok(cell);
        }
    };

    let mut outcomes: Vec<(Option<f64>, f64)> = Vec::with_capacity(dataset.len());
    for record in dataset.records() {
        let mut rng = SplitMix64::derive(seed, record.id);
        cell.processed += 1;
        match predict_one(&mut contestant, strategy, &pool, record, &mut rng, embedder)? {
            OneOutcome::Parsed(value) => outcomes.push((Some(value), record.score)),
            OneOutcome::Unparsed => outcomes.push((None, record.score)),
            OneOutcome::Failed(message) => {
                cell.failures += 1;
                cell.last_failure = Some(message);
            }
        }
        if cell.processed >= MIN_PROCESSED_BEFORE_ABORT
            && cell.failures as f64 / cell.processed as f64 > abort_ratio
        {
            cell.aborted = true;
            break;
        }
    }

    cell.metrics = BenchMetrics::compute(outcomes)?;
    Ok(cell)
}

/// Runs the whole (model x strategy) grid over the dataset.
pub fn run_bench(
    dataset: &Dataset,
    entries: &[ModelEntry],
    grid: &[PromptStrategy],
    seed: u64,
    abort_ratio: f64,
    embedder: &dyn Embedder,
    embeddings: Option<&BTreeMap<u64, EmbeddingVector>>,
) -> Result<BenchReport> {
    let pool = ExemplarPool::new(dataset.records().to_vec());
    let mut report = BenchReport {
        seed,
        dataset_len: dataset.len(),
        embedding_provider: embedder.id(),
        fixed_order: pool.seeded_order(seed),
        cells: Vec::with_capacity(entries.len() * grid.len()),
    };
    for entry in entries {
        for &strategy in grid {
            report.cells.push(run_cell(
                dataset,
                entry,
                strategy,
                seed,
                abort_ratio,
                embedder,
                embeddings,
            )?);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use misery_core::backend::BackendKind;
    use misery_core::dataset::MiseryRecord;
    use misery_core::embed::HashEmbedder;

    use crate::http::AuthStyle;

    fn dataset(n: usize) -> Dataset {
        let records: Vec<MiseryRecord> = (1..=n as u64)
            .map(|i| MiseryRecord {
                id: i,
                statement: format!("test event number {i}"),
                score: (i * 7 % 90) as f64 + 5.0,
                category: None,
            })
            .collect();
        Dataset::new(records).unwrap()
    }

    fn entry(backend: BackendKind, name: &str) -> ModelEntry {
        ModelEntry {
            backend,
            name: name.into(),
            endpoint: None,
            credential_env: None,
            auth_style: AuthStyle::default(),
            temperature: 0.0,
            max_attempts: 3,
            initial_backoff_ms: None,
            noise_sd: None,
            replies: None,
            constant: None,
        }
    }

    fn full_grid() -> Vec<PromptStrategy> {
        vec![
            PromptStrategy::ZeroShot,
            PromptStrategy::CotTwoStage,
            PromptStrategy::FewShotFixed { k: 2 },
            PromptStrategy::FewShotRandom { k: 2 },
            PromptStrategy::FewShotEmbedding { k: 2 },
        ]
    }

    #[test]
    fn zero_noise_oracle_is_perfect_on_every_strategy() {
        let data = dataset(10);
        let embedder = HashEmbedder::new(16).unwrap();
        let report = run_bench(
            &data,
            &[entry(BackendKind::Oracle, "oracle-0")],
            &full_grid(),
            12,
            0.25,
            &embedder,
            None,
        )
        .unwrap();
        assert_eq!(report.cells.len(), 5);
        for cell in &report.cells {
            assert!(cell.succeeded(), "cell {:?} failed", cell.strategy);
            assert_eq!(cell.metrics.count, 10);
            assert_eq!(cell.metrics.invalid_count, 0);
            assert_eq!(cell.metrics.mae, Some(0.0));
            assert_eq!(cell.metrics.rmse, Some(0.0));
            assert!((cell.metrics.pearson.unwrap() - 1.0).abs() < 1e-12);
            assert!((cell.metrics.spearman.unwrap() - 1.0).abs() < 1e-12);
            assert!((cell.metrics.r_squared.unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_predictor_keeps_mae_but_loses_correlations() {
        let data = dataset(10);
        let mut scripted = entry(BackendKind::Scripted, "always-56");
        scripted.constant = Some("56".into());
        let embedder = HashEmbedder::new(16).unwrap();
        let report = run_bench(
            &data,
            &[scripted],
            &[PromptStrategy::ZeroShot],
            12,
            0.25,
            &embedder,
            None,
        )
        .unwrap();
        let cell = &report.cells[0];
        let expected: f64 = data
            .records()
            .iter()
            .map(|r| (56.0 - r.score).abs())
            .sum::<f64>()
            / data.len() as f64;
        assert_eq!(cell.metrics.mae, Some(expected));
        assert_eq!(cell.metrics.pearson, None);
        assert_eq!(cell.metrics.spearman, None);
        assert!(cell.metrics.r_squared.is_some());
        assert!(cell.succeeded());
    }

    #[test]
    fn unparseable_replies_are_counted_not_scored() {
        let data = dataset(6);
        let mut scripted = entry(BackendKind::Scripted, "mute");
        scripted.constant = Some("no idea".into());
        let embedder = HashEmbedder::new(16).unwrap();
        let report = run_bench(
            &data,
            &[scripted],
            &[PromptStrategy::ZeroShot],
            12,
            0.25,
            &embedder,
            None,
        )
        .unwrap();
        let cell = &report.cells[0];
        assert_eq!(cell.metrics.count, 0);
        assert_eq!(cell.metrics.invalid_count, 6);
        assert_eq!(cell.metrics.mae, None);
        assert!(!cell.succeeded());
        assert!(!cell.aborted);
    }

    #[test]
    fn failing_backend_aborts_at_threshold() {
        let data = dataset(20);
        let mut scripted = entry(BackendKind::Scripted, "drained");
        scripted.replies = Some(vec![]);
        let embedder = HashEmbedder::new(16).unwrap();
        let report = run_bench(
            &data,
            &[scripted],
            &[PromptStrategy::ZeroShot],
            12,
            0.25,
            &embedder,
            None,
        )
        .unwrap();
        let cell = &report.cells[0];
        assert!(cell.aborted);
        assert_eq!(cell.processed, MIN_PROCESSED_BEFORE_ABORT);
        assert_eq!(cell.failures, MIN_PROCESSED_BEFORE_ABORT);
        assert!(!cell.succeeded());
    }

    #[test]
    fn single_late_failure_stays_under_threshold() {
        let data = dataset(20);
        let mut scripted = entry(BackendKind::Scripted, "one-flake");
        // The queue covers 19 of 20 records, so exactly the last one
        // fails: 1/20 is inside a 0.25 budget.
        scripted.replies = Some(vec!["56".to_string(); 19]);
        let embedder = HashEmbedder::new(16).unwrap();
        let report = run_bench(
            &data,
            &[scripted],
            &[PromptStrategy::ZeroShot],
            12,
            0.25,
            &embedder,
            None,
        )
        .unwrap();
        let cell = &report.cells[0];
        assert!(!cell.aborted);
        assert_eq!(cell.failures, 1);
        assert_eq!(cell.processed, 20);
        assert_eq!(cell.metrics.count, 19);
    }

    #[test]
    fn prewarmed_embeddings_match_direct_embedding() {
        let data = dataset(8);
        let embedder = HashEmbedder::new(16).unwrap();
        let map: BTreeMap<u64, EmbeddingVector> = data
            .records()
            .iter()
            .map(|r| (r.id, embedder.embed_one(&r.statement)))
            .collect();
        let grid = [PromptStrategy::FewShotEmbedding { k: 3 }];
        let oracle = entry(BackendKind::Oracle, "oracle-0");

        let with_map = run_bench(
            &data,
            std::slice::from_ref(&oracle),
            &grid,
            12,
            0.25,
            &embedder,
            Some(&map),
        )
        .unwrap();
        let without = run_bench(&data, &[oracle], &grid, 12, 0.25, &embedder, None).unwrap();
        assert_eq!(with_map, without);
    }

    #[test]
    fn bench_report_is_deterministic() {
        let data = dataset(10);
        let embedder = HashEmbedder::new(16).unwrap();
        let entries = [entry(BackendKind::Oracle, "oracle-0")];
        let a = run_bench(&data, &entries, &full_grid(), 12, 0.25, &embedder, None).unwrap();
        let b = run_bench(&data, &entries, &full_grid(), 12, 0.25, &embedder, None).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn broken_construction_is_recorded_not_fatal() {
        let data = dataset(6);
        let mut bad = entry(BackendKind::Scripted, "no-source");
        bad.replies = None;
        bad.constant = None;
        let embedder = HashEmbedder::new(16).unwrap();
        let report = run_bench(
            &data,
            &[bad, entry(BackendKind::Oracle, "oracle-0")],
            &[PromptStrategy::ZeroShot],
            12,
            0.25,
            &embedder,
            None,
        )
        .unwrap();
        assert!(report.cells[0].error.is_some());
        assert!(!report.cells[0].succeeded());
        assert!(report.cells[1].succeeded());
    }

    #[test]
    fn noisy_oracle_mae_tracks_folded_normal() {
        let data = dataset(200);
        let mut noisy = entry(BackendKind::Oracle, "oracle-5");
        noisy.noise_sd = Some(5.0);
        let embedder = HashEmbedder::new(16).unwrap();
        let report = run_bench(
            &data,
            &[noisy],
            &[PromptStrategy::ZeroShot],
            12,
            0.25,
            &embedder,
            None,
        )
        .unwrap();
        let mae = report.cells[0].metrics.mae.unwrap();
        // E|N(0,5)| = 5 * sqrt(2/pi) = 3.989...; 200 samples keep the
        // sample mean within a loose unit band.
        assert!((mae - 3.989).abs() < 1.0, "mae {mae}");
    }
}
