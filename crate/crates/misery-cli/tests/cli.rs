//! End-to-end tests of the `misery` binary: exit codes, dry runs,
//! artifact layout, determinism, and report rendering. Every run here
//! uses scripted backends, so the suite needs no network.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn misery() -> Command {
    Command::new(env!("CARGO_BIN_EXE_misery"))
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Writes a 24-record dataset and a scripted-model config into `dir`,
/// returning the config path.
fn write_fixture(dir: &Path) -> PathBuf {
    let mut csv = String::from("statement,score\n");
    for i in 0..24 {
        csv.push_str(&format!("Tiny misfortune number {i},{}\n", 20 + 2 * i));
    }
    std::fs::write(dir.join("data.csv"), csv).unwrap();

    let config = "\
dataset = \"data.csv\"
output_dir = \"out\"

[game]
seeds = [12]
episodes = 2
feedback = \"both\"

[bench]
strategies = [\"zero_shot\", \"few_shot_fixed\"]
k = [2]
seed = 12
abort_failure_ratio = 0.25

[[models]]
backend = \"scripted\"
name = \"always-56\"
constant = \"56\"
";
    let path = dir.join("run.toml");
    std::fs::write(&path, config).unwrap();
    path
}

#[test]
fn bench_dry_run_prints_plan_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_fixture(dir.path());
    let out = misery()
        .args(["bench", "--config"])
        .arg(&config)
        .arg("--dry-run")
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("bench plan: 24 records, seed 12"), "{text}");
    assert!(text.contains("always-56 / Zero-Shot"), "{text}");
    assert!(text.contains("always-56 / Fixed k=2"), "{text}");
    assert!(text.contains("would write"), "{text}");
    assert!(
        !dir.path().join("out").exists(),
        "dry run created artifacts"
    );
}

#[test]
fn game_dry_run_prints_runs_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_fixture(dir.path());
    let out = misery()
        .args(["game", "--config"])
        .arg(&config)
        .arg("--dry-run")
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("game plan: 2 episodes per run"), "{text}");
    assert!(text.contains("always-56 / seed 12 / static"), "{text}");
    assert!(text.contains("always-56 / seed 12 / adaptive"), "{text}");
    assert!(
        !dir.path().join("out").exists(),
        "dry run created artifacts"
    );
}

#[test]
fn game_run_writes_artifacts_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_fixture(dir.path());
    let out = misery()
        .args(["game", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    let out_dir = dir.path().join("out");
    for name in [
        "report_always-56_s12_static.json",
        "report_always-56_s12_adaptive.json",
        "transcripts/always-56_s12_static_ep000.json",
        "transcripts/always-56_s12_adaptive_ep001.json",
        "summary.json",
        "status.json",
        "status_matrix.csv",
    ] {
        assert!(out_dir.join(name).is_file(), "missing artifact {name}");
    }
    let text = stdout(&out);
    assert!(text.contains("Per-model scores, static mode"), "{text}");
    assert!(text.contains("Per-model scores, adaptive mode"), "{text}");
    assert!(text.contains("wrote "), "{text}");
}

#[test]
fn identical_configs_produce_byte_identical_reports() {
    let dirs = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&dirs.0, &dirs.1] {
        let config = write_fixture(dir.path());
        let out = misery()
            .args(["game", "--config"])
            .arg(&config)
            .output()
            .unwrap();
        assert!(out.status.success(), "stderr: {}", stderr(&out));
    }
    for name in [
        "report_always-56_s12_static.json",
        "report_always-56_s12_adaptive.json",
        "summary.json",
        "status_matrix.csv",
    ] {
        let a = std::fs::read(dirs.0.path().join("out").join(name)).unwrap();
        let b = std::fs::read(dirs.1.path().join("out").join(name)).unwrap();
        assert!(!a.is_empty(), "{name} is empty");
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn report_command_renders_written_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_fixture(dir.path());
    let run = misery()
        .args(["game", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(run.status.success());

    let out = misery()
        .args(["report", "--in"])
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("Per-model scores, static mode"), "{text}");
    assert!(text.contains("always-56 (seed 12)"), "{text}");
    assert!(text.contains("Run status"), "{text}");
}

#[test]
fn report_on_empty_directory_fails_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let out = misery()
        .args(["report", "--in"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("no reports found under"), "{err}");
}

#[test]
fn unknown_model_name_fails_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_fixture(dir.path());
    let out = misery()
        .args(["game", "--config"])
        .arg(&config)
        .args(["--model", "nope"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("no model named `nope`"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn bench_run_writes_report_json() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_fixture(dir.path());
    let out = misery()
        .args(["bench", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    let report_path = dir.path().join("out/bench_report.json");
    assert!(report_path.is_file());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    let cells = report["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 2);
    for cell in cells {
        assert_eq!(cell["model"], "always-56");
        assert_eq!(cell["processed"], 24);
        assert_eq!(cell["aborted"], false);
        // A constant predictor keeps MAE but has no correlation.
        assert!(cell["metrics"]["mae"].is_f64() || cell["metrics"]["mae"].is_i64());
        assert!(cell["metrics"]["pearson"].is_null());
    }
    let text = stdout(&out);
    assert!(text.contains("Benchmark: model always-56"), "{text}");
    assert!(text.contains("wrote "), "{text}");
}

#[test]
fn game_seed_override_changes_artifact_names() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_fixture(dir.path());
    let out = misery()
        .args(["game", "--config"])
        .arg(&config)
        .args(["--seeds", "7,8", "--feedback", "off", "--episodes", "1"])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let out_dir = dir.path().join("out");
    assert!(out_dir.join("report_always-56_s7_static.json").is_file());
    assert!(out_dir.join("report_always-56_s8_static.json").is_file());
    assert!(!out_dir.join("report_always-56_s7_adaptive.json").exists());
    assert!(!out_dir.join("report_always-56_s12_static.json").exists());
}
