//! Plain-text table rendering for benchmark and game artifacts.
//!
//! Every value printed here is read straight out of a report struct
//! (or the persisted summary rows); nothing is recomputed at render
//! time, so the tables always agree with the JSON on disk.

use misery_core::game::{FeedbackMode, GameReport, RunStatus};
use misery_core::prompt::PromptStrategy;

use crate::bench::{BenchCell, BenchReport};
use crate::files::mode_tag;
use crate::game_run::SummaryRow;

/// Column header for one prompting strategy.
pub fn strategy_label(strategy: PromptStrategy) -> String {
    match strategy {
        PromptStrategy::ZeroShot => "Zero-Shot".to_string(),
        PromptStrategy::CotTwoStage => "2-Stage CoT".to_string(),
        PromptStrategy::FewShotFixed { k } => format!("Fixed k={k}"),
        PromptStrategy::FewShotRandom { k } => format!("Random k={k}"),
        PromptStrategy::FewShotEmbedding { k } => format!("Embedding k={k}"),
    }
}

fn fmt_pct(v: f64) -> String {
    format!("{v:.2}")
}

fn fmt_opt_pct(v: Option<f64>) -> String {
    v.map(fmt_pct).unwrap_or_else(|| "n/a".to_string())
}

fn fmt_metric(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.4}"),
        None => "n/a".to_string(),
    }
}

/// Fixed-width text table with a title line.
struct TextTable {
    title: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl TextTable {
    fn new(title: impl Into<String>, header: Vec<String>) -> Self {
        Self {
            title: title.into(),
            header,
            rows: Vec::new(),
        }
    }

    fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    fn render(&self) -> String {
        let cols = self.header.len();
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                widths[i] = widths[i].max(cell.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let mut s = String::from("|");
            for i in 0..cols {
                let cell = &cells[i];
                let pad = widths[i] - cell.chars().count();
                s.push(' ');
                s.push_str(cell);
                s.push_str(&" ".repeat(pad));
                s.push_str(" |");
            }
            s.push('\n');
            s
        };
        let mut out = String::new();
        out.push_str(&self.title);
        out.push('\n');
        out.push_str(&line(&self.header));
        let mut sep = String::from("|");
        for w in &widths {
            sep.push_str(&"-".repeat(w + 2));
            sep.push('|');
        }
        sep.push('\n');
        out.push_str(&sep);
        for row in &self.rows {
            out.push_str(&line(row));
        }
        out
    }
}

fn metric_row(
    label: &str,
    cells: &[&BenchCell],
    pick: impl Fn(&BenchCell) -> Option<f64>,
) -> Vec<String> {
    let mut row = vec![label.to_string()];
    row.extend(cells.iter().map(|c| fmt_metric(pick(c))));
    row
}

/// One metric-by-strategy grid per model, with notes for aborted or
/// broken cells.
pub fn benchmark_tables(report: &BenchReport) -> String {
    let mut models: Vec<&str> = Vec::new();
    for cell in &report.cells {
        if !models.contains(&cell.model.as_str()) {
            models.push(&cell.model);
        }
    }
    let mut out = String::new();
    for model in models {
        let cells: Vec<&BenchCell> = report.cells.iter().filter(|c| c.model == model).collect();
        let mut header = vec!["Metric".to_string()];
        header.extend(cells.iter().map(|c| strategy_label(c.strategy)));
        let mut table = TextTable::new(
            format!(
                "Benchmark: model {model}, seed {}, {} records, embeddings {}",
                report.seed, report.dataset_len, report.embedding_provider
            ),
            header,
        );
        table.row(metric_row("MAE", &cells, |c| c.metrics.mae));
        table.row(metric_row("RMSE", &cells, |c| c.metrics.rmse));
        table.row(metric_row("Pearson", &cells, |c| c.metrics.pearson));
        table.row(metric_row("Spearman", &cells, |c| c.metrics.spearman));
        table.row(metric_row("R-squared", &cells, |c| c.metrics.r_squared));
        let mut counts = vec!["Valid pairs".to_string()];
        counts.extend(cells.iter().map(|c| c.metrics.count.to_string()));
        table.row(counts);
        let mut invalid = vec!["Invalid replies".to_string()];
        invalid.extend(cells.iter().map(|c| c.metrics.invalid_count.to_string()));
        table.row(invalid);
        out.push_str(&table.render());
        for cell in &cells {
            if let Some(error) = &cell.error {
                out.push_str(&format!(
                    "note: {} could not run: {error}\n",
                    strategy_label(cell.strategy)
                ));
            } else if cell.aborted {
                out.push_str(&format!(
                    "note: {} aborted after {} records ({} failures){}\n",
                    strategy_label(cell.strategy),
                    cell.processed,
                    cell.failures,
                    cell.last_failure
                        .as_deref()
                        .map(|m| format!(", last: {m}"))
                        .unwrap_or_default()
                ));
            }
        }
        out.push('\n');
    }
    out
}

/// Two-column comparison of one model+seed pair run in both modes.
pub fn feedback_table(without: &GameReport, with: &GameReport) -> String {
    let mut table = TextTable::new(
        format!(
            "Feedback comparison: model {}, seed {}",
            without.model, without.seed
        ),
        vec![
            String::new(),
            "Without_Feedback".to_string(),
            "With_Feedback".to_string(),
        ],
    );
    table.row(vec![
        "Round_1".to_string(),
        fmt_pct(without.round1),
        fmt_pct(with.round1),
    ]);
    table.row(vec![
        "Round_2".to_string(),
        fmt_pct(without.round2),
        fmt_pct(with.round2),
    ]);
    table.row(vec![
        "Bonus_Round".to_string(),
        fmt_pct(without.bonus),
        fmt_pct(with.bonus),
    ]);
    table.row(vec![
        "Overall".to_string(),
        fmt_pct(without.overall),
        fmt_pct(with.overall),
    ]);
    table.row(vec![
        "Avg_Distance_in_Round_3".to_string(),
        fmt_opt_pct(without.avg_distance_r3),
        fmt_opt_pct(with.avg_distance_r3),
    ]);
    table.render()
}

fn grid_header() -> Vec<String> {
    vec![
        "Model".to_string(),
        "Round 1 Accuracy (%)".to_string(),
        "Round 2 Accuracy (%)".to_string(),
        "Bonus Round Accuracy (%)".to_string(),
        "Overall Accuracy (%)".to_string(),
        "Avg. Distance in Round 3".to_string(),
    ]
}

/// Per-model score grid for one feedback mode: a row per seed plus the
/// stored mean row.
pub fn model_grid(mode: FeedbackMode, reports: &[GameReport], summary: &[SummaryRow]) -> String {
    let mut table = TextTable::new(
        format!("Per-model scores, {} mode", mode_tag(mode)),
        grid_header(),
    );
    for report in reports.iter().filter(|r| r.feedback_mode == mode) {
        table.row(vec![
            format!("{} (seed {})", report.model, report.seed),
            fmt_pct(report.round1),
            fmt_pct(report.round2),
            fmt_pct(report.bonus),
            fmt_pct(report.overall),
            fmt_opt_pct(report.avg_distance_r3),
        ]);
    }
    for row in summary.iter().filter(|r| r.mode == mode) {
        table.row(vec![
            format!("{} (mean of {} seeds)", row.model, row.seeds.len()),
            fmt_pct(row.round1),
            fmt_pct(row.round2),
            fmt_pct(row.bonus),
            fmt_pct(row.overall),
            fmt_opt_pct(row.avg_distance_r3),
        ]);
    }
    table.render()
}

/// Completion matrix, one row per (seed, mode).
pub fn status_table(statuses: &[RunStatus]) -> String {
    let mut models: Vec<&str> = Vec::new();
    for status in statuses {
        if !models.contains(&status.model.as_str()) {
            models.push(&status.model);
        }
    }
    let mut header = vec!["seed".to_string(), "mode".to_string()];
    header.extend(models.iter().map(|m| m.to_string()));
    let mut table = TextTable::new("Run status", header);
    let mut keys: Vec<(u64, FeedbackMode)> = Vec::new();
    for status in statuses {
        if !keys.contains(&(status.seed, status.mode)) {
            keys.push((status.seed, status.mode));
        }
    }
    for (seed, mode) in keys {
        let mut row = vec![seed.to_string(), mode_tag(mode).to_string()];
        for model in &models {
            let cell = statuses
                .iter()
                .find(|s| s.seed == seed && s.mode == mode && s.model.as_str() == *model)
                .map(|s| if s.completed { "\u{2713}" } else { "\u{00d7}" })
                .unwrap_or("-");
            row.push(cell.to_string());
        }
        table.row(row);
    }
    table.render()
}

/// Composes every table the stored artifacts support: benchmark grids,
/// per-mode score grids, feedback comparisons for each model+seed run
/// in both modes, and the status matrix.
pub fn render_all(
    bench: Option<&BenchReport>,
    reports: &[GameReport],
    summary: &[SummaryRow],
    statuses: &[RunStatus],
) -> String {
    let mut out = String::new();
    if let Some(bench) = bench {
        out.push_str(&benchmark_tables(bench));
    }
    let modes = [FeedbackMode::Static, FeedbackMode::Adaptive];
    for mode in modes {
        if reports.iter().any(|r| r.feedback_mode == mode) {
            out.push_str(&model_grid(mode, reports, summary));
            out.push('\n');
        }
    }
    let mut pairs: Vec<(&str, u64)> = Vec::new();
    for report in reports {
        if !pairs.contains(&(report.model.as_str(), report.seed)) {
            pairs.push((report.model.as_str(), report.seed));
        }
    }
    for (model, seed) in pairs {
        let find = |mode| {
            reports
                .iter()
                .find(|r| r.model == model && r.seed == seed && r.feedback_mode == mode)
        };
        if let (Some(without), Some(with)) =
            (find(FeedbackMode::Static), find(FeedbackMode::Adaptive))
        {
            out.push_str(&feedback_table(without, with));
            out.push('\n');
        }
    }
    if !statuses.is_empty() {
        out.push_str(&status_table(statuses));
    }
    out
}
