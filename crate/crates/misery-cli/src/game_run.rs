//! Drives game-show tournaments from config entries and persists
//! every artifact: one report per (model, seed, mode) run, one
//! transcript file per episode, a cross-run summary with the means the
//! renderer reads back verbatim, and the run status matrix.

use std::path::{Path, PathBuf};

use misery_core::chat::Transcript;
use misery_core::dataset::Dataset;
use misery_core::game::{run_tournament, ContestantFactory, FeedbackMode, GameReport, RunStatus};
use serde::{Deserialize, Serialize};

use crate::config::ModelEntry;
use crate::files;
use crate::fleet::ConfigFactory;
use crate::Result;

/// Mean scores for one (model, mode) pair over its completed seeds.
/// Persisted so table renderers display stored values instead of
/// re-deriving them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: String,
    pub mode: FeedbackMode,
    /// Seeds whose runs completed and entered the means.
    pub seeds: Vec<u64>,
    pub round1: f64,
    pub round2: f64,
    pub bonus: f64,
    pub overall: f64,
    /// Mean of the per-run scalar distances; None when no completed
    /// run produced one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avg_distance_r3: Option<f64>,
}

/// One episode's conversations plus enough identity to read them
/// without the report open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptFile {
    pub model: String,
    pub seed: u64,
    pub mode: FeedbackMode,
    pub episode: usize,
    pub cast_ids: Vec<u64>,
    pub conversations: Vec<Transcript>,
}

/// Everything a tournament produced, with the paths the reports were
/// written to.
#[derive(Debug)]
pub struct GameArtifacts {
    pub reports: Vec<GameReport>,
    pub statuses: Vec<RunStatus>,
    pub summary: Vec<SummaryRow>,
    pub report_paths: Vec<PathBuf>,
}

impl GameArtifacts {
    pub fn any_completed(&self) -> bool {
        self.statuses.iter().any(|s| s.completed)
    }
}

/// Groups completed reports by (model, mode) in first-appearance order
/// and averages each group's scores.
pub fn summarize(reports: &[GameReport]) -> Vec<SummaryRow> {
    let mut rows: Vec<SummaryRow> = Vec::new();
    for report in reports {
        let row = match rows
            .iter_mut()
            .find(|r| r.model == report.model && r.mode == report.feedback_mode)
        {
            Some(row) => row,
            None => {
                rows.push(SummaryRow {
                    model: report.model.clone(),
                    mode: report.feedback_mode,
                    seeds: Vec::new(),
                    round1: 0.0,
                    round2: 0.0,
                    bonus: 0.0,
                    overall: 0.0,
                    avg_distance_r3: None,
                });
                rows.last_mut().expect("just pushed")
            }
        };
        row.seeds.push(report.seed);
        row.round1 += report.round1;
        row.round2 += report.round2;
        row.bonus += report.bonus;
        row.overall += report.overall;
    }
    for row in &mut rows {
        let n = row.seeds.len() as f64;
        row.round1 /= n;
        row.round2 /= n;
        row.bonus /= n;
        row.overall /= n;
        let distances: Vec<f64> = reports
            .iter()
            .filter(|r| r.model == row.model && r.feedback_mode == row.mode)
            .filter_map(|r| r.avg_distance_r3)
            .collect();
        if !distances.is_empty() {
            row.avg_distance_r3 = Some(distances.iter().sum::<f64>() / distances.len() as f64);
        }
    }
    rows
}

/// Completion matrix as CSV: one row per (seed, mode), one column per
/// model, check for completed and cross for failed.
pub fn status_matrix_csv(statuses: &[RunStatus]) -> String {
    let mut models: Vec<&str> = Vec::new();
    for status in statuses {
        if !models.contains(&status.model.as_str()) {
            models.push(&status.model);
        }
    }
    let mut rows: Vec<(u64, FeedbackMode)> = Vec::new();
    for status in statuses {
        if !rows.contains(&(status.seed, status.mode)) {
            rows.push((status.seed, status.mode));
        }
    }

    let mut out = String::from("seed,mode");
    for model in &models {
        out.push(',');
        out.push_str(model);
    }
    out.push('\n');
    for (seed, mode) in rows {
        out.push_str(&format!("{seed},{}", files::mode_tag(mode)));
        for model in &models {
            let cell = statuses
                .iter()
                .find(|s| s.seed == seed && s.mode == mode && s.model.as_str() == *model)
                .map(|s| if s.completed { "\u{2713}" } else { "\u{00d7}" })
                .unwrap_or("-");
            out.push(',');
            out.push_str(cell);
        }
        out.push('\n');
    }
    out
}

fn write_artifacts(
    out_dir: &Path,
    reports: &[GameReport],
    statuses: &[RunStatus],
    summary: &[SummaryRow],
) -> Result<Vec<PathBuf>> {
    let mut report_paths = Vec::with_capacity(reports.len());
    for report in reports {
        let path = files::report_path(out_dir, &report.model, report.seed, report.feedback_mode);
        files::save_json(&path, report)?;
        report_paths.push(path);

        for episode in &report.episodes {
            let t = TranscriptFile {
                model: report.model.clone(),
                seed: report.seed,
                mode: report.feedback_mode,
                episode: episode.index,
                cast_ids: episode.cast_ids.clone(),
                conversations: episode.transcripts.clone(),
            };
            let path = files::transcript_path(
                out_dir,
                &report.model,
                report.seed,
                report.feedback_mode,
                episode.index,
            );
            files::save_json(&path, &t)?;
        }
    }
    files::save_json(&out_dir.join("summary.json"), &summary)?;
    files::save_json(&out_dir.join("status.json"), &statuses)?;
    files::write_string(
        &out_dir.join("status_matrix.csv"),
        &status_matrix_csv(statuses),
    )?;
    Ok(report_paths)
}

/// Plays every (model, seed, mode) run and writes all artifacts under
/// `out_dir`.
pub fn run_gameshow(
    dataset: &Dataset,
    entries: &[ModelEntry],
    seeds: &[u64],
    modes: &[FeedbackMode],
    episodes: usize,
    out_dir: &Path,
) -> Result<GameArtifacts> {
    let factories: Vec<ConfigFactory> = entries
        .iter()
        .map(|entry| ConfigFactory::new(entry.clone()))
        .collect();
    let refs: Vec<&dyn ContestantFactory> = factories
        .iter()
        .map(|f| f as &dyn ContestantFactory)
        .collect();
    let outcome = run_tournament(dataset.records(), &refs, seeds, modes, episodes)?;
    let summary = summarize(&outcome.reports);
    let report_paths = write_artifacts(out_dir, &outcome.reports, &outcome.statuses, &summary)?;
    Ok(GameArtifacts {
        reports: outcome.reports,
        statuses: outcome.statuses,
        summary,
        report_paths,
    })
}
