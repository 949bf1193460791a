//! `misery`: benchmark, game-show, and reporting commands over
//! misery-score datasets.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use misery_cli::bench::{run_bench, BenchReport};
use misery_cli::cache::{pool_embeddings, EmbeddingCache};
use misery_cli::config::{expand_strategy_grid, Config, FeedbackChoice, StrategyName};
use misery_cli::files;
use misery_cli::fleet::build_embedder;
use misery_cli::game_run::{run_gameshow, SummaryRow};
use misery_cli::render;
use misery_cli::{CliError, Result};
use misery_core::game::{GameReport, RunStatus};
use misery_core::prompt::PromptStrategy;

#[derive(Parser)]
#[command(
    name = "misery",
    version,
    about = "Evaluate misery-score prediction: benchmark strategies, play the game show, render reports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the leave-one-out scalar benchmark over the dataset.
    Bench(BenchArgs),
    /// Play the four-round game-show tournament.
    Game(GameArgs),
    /// Render tables from previously written artifacts.
    Report(ReportArgs),
}

#[derive(Args)]
struct BenchArgs {
    /// TOML config file.
    #[arg(long)]
    config: PathBuf,
    /// Run a single strategy instead of the configured grid.
    #[arg(long, value_enum)]
    strategy: Option<StrategyName>,
    /// Shot count for the single strategy; overrides the configured k
    /// grid.
    #[arg(long)]
    k: Option<usize>,
    /// Run only the named model.
    #[arg(long)]
    model: Option<String>,
    /// Print the planned grid and exit without querying any backend.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args)]
struct GameArgs {
    /// TOML config file.
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated seed list; overrides the configured seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Feedback gating: on (adaptive), off (static), or both.
    #[arg(long, value_enum)]
    feedback: Option<FeedbackChoice>,
    /// Episodes per run; overrides the configured count.
    #[arg(long)]
    episodes: Option<usize>,
    /// Run only the named model.
    #[arg(long)]
    model: Option<String>,
    /// Print the planned runs and exit without querying any backend.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding the artifacts of earlier runs.
    #[arg(long = "in")]
    input: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Bench(args) => cmd_bench(args),
        Command::Game(args) => cmd_game(args),
        Command::Report(args) => cmd_report(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Writes to stdout, exiting quietly if the reader hung up (e.g. the
/// output is piped into `head`).
fn emit(text: std::fmt::Arguments<'_>) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if out.write_fmt(text).is_err() {
        std::process::exit(0);
    }
}

macro_rules! say {
    ($($arg:tt)*) => { emit(format_args!("{}\n", format_args!($($arg)*))) };
}

macro_rules! say_raw {
    ($($arg:tt)*) => { emit(format_args!($($arg)*)) };
}

/// The strategy grid a bench invocation asks for: either the config's
/// full grid or the one strategy (and optional k) from the flags.
fn bench_grid(config: &Config, args: &BenchArgs) -> Result<Vec<PromptStrategy>> {
    if let Some(0) = args.k {
        return Err(CliError::Config {
            path: args.config.clone(),
            message: "--k must be at least 1".into(),
        });
    }
    Ok(match args.strategy {
        None => expand_strategy_grid(&config.bench.strategies, &config.bench.k),
        Some(name) if !name.takes_k() => vec![name.with_k(1)],
        Some(name) => match args.k {
            Some(k) => vec![name.with_k(k)],
            None => config.bench.k.iter().map(|&k| name.with_k(k)).collect(),
        },
    })
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode> {
    let config = files::load_config(&args.config)?;
    let dataset = files::load_dataset(&config.resolved_dataset(&args.config))?;
    let entries = config.select_models(args.model.as_deref(), &args.config)?;
    let grid = bench_grid(&config, &args)?;
    let out_dir = config.resolved_output_dir(&args.config);

    if args.dry_run {
        say!(
            "bench plan: {} records, seed {}, abort ratio {}",
            dataset.len(),
            config.bench.seed,
            config.bench.abort_failure_ratio
        );
        for entry in &entries {
            for &strategy in &grid {
                say!("  {} / {}", entry.name, render::strategy_label(strategy));
            }
        }
        say!(
            "would write {}",
            out_dir.join("bench_report.json").display()
        );
        return Ok(ExitCode::SUCCESS);
    }

    let embedder = build_embedder(&config.embedding)?;
    let needs_embeddings = grid
        .iter()
        .any(|s| matches!(s, PromptStrategy::FewShotEmbedding { .. }));
    let embeddings = if needs_embeddings {
        let map = match config.resolved_cache(&args.config) {
            Some(sidecar) => {
                let cache = EmbeddingCache::load(&sidecar)?;
                pool_embeddings(
                    embedder.as_ref(),
                    dataset.records(),
                    Some((&cache, &sidecar)),
                )?
            }
            None => pool_embeddings(embedder.as_ref(), dataset.records(), None)?,
        };
        Some(map)
    } else {
        None
    };

    let report = run_bench(
        &dataset,
        &entries,
        &grid,
        config.bench.seed,
        config.bench.abort_failure_ratio,
        embedder.as_ref(),
        embeddings.as_ref(),
    )?;
    let report_path = out_dir.join("bench_report.json");
    files::save_json(&report_path, &report)?;
    say_raw!("{}", render::benchmark_tables(&report));
    say!("wrote {}", report_path.display());

    if report.cells.iter().any(|c| c.succeeded()) {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::FAILURE)
    }
}

fn cmd_game(args: GameArgs) -> Result<ExitCode> {
    let config = files::load_config(&args.config)?;
    let dataset = files::load_dataset(&config.resolved_dataset(&args.config))?;
    let entries = config.select_models(args.model.as_deref(), &args.config)?;
    let seeds = args
        .seeds
        .clone()
        .unwrap_or_else(|| config.game.seeds.clone());
    let modes = args.feedback.unwrap_or(config.game.feedback).modes();
    let episodes = args.episodes.unwrap_or(config.game.episodes);
    let out_dir = config.resolved_output_dir(&args.config);
    if seeds.is_empty() {
        return Err(CliError::Config {
            path: args.config.clone(),
            message: "--seeds must name at least one seed".into(),
        });
    }
    if episodes == 0 {
        return Err(CliError::Config {
            path: args.config.clone(),
            message: "--episodes must be at least 1".into(),
        });
    }

    if args.dry_run {
        say!("game plan: {episodes} episodes per run");
        for entry in &entries {
            for &seed in &seeds {
                for &mode in &modes {
                    say!(
                        "  {} / seed {} / {}",
                        entry.name,
                        seed,
                        files::mode_tag(mode)
                    );
                }
            }
        }
        say!("would write reports under {}", out_dir.display());
        return Ok(ExitCode::SUCCESS);
    }

    let artifacts = run_gameshow(&dataset, &entries, &seeds, &modes, episodes, &out_dir)?;
    say_raw!(
        "{}",
        render::render_all(
            None,
            &artifacts.reports,
            &artifacts.summary,
            &artifacts.statuses
        )
    );
    for path in &artifacts.report_paths {
        say!("wrote {}", path.display());
    }
    if artifacts.any_completed() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::FAILURE)
    }
}

fn cmd_report(args: ReportArgs) -> Result<ExitCode> {
    let dir = &args.input;
    let mut reports: Vec<GameReport> = Vec::new();
    for path in files::list_reports(dir)? {
        reports.push(files::load_json(&path)?);
    }
    let bench: Option<BenchReport> = load_optional(&dir.join("bench_report.json"))?;
    let summary: Vec<SummaryRow> = load_optional(&dir.join("summary.json"))?.unwrap_or_default();
    let statuses: Vec<RunStatus> = load_optional(&dir.join("status.json"))?.unwrap_or_default();

    if reports.is_empty() && bench.is_none() {
        return Err(CliError::NoReports(dir.clone()));
    }
    say_raw!(
        "{}",
        render::render_all(bench.as_ref(), &reports, &summary, &statuses)
    );
    Ok(ExitCode::SUCCESS)
}

fn load_optional<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Option<T>> {
    if !path.is_file() {
        return Ok(None);
    }
    files::load_json(path).map(Some)
}
