//! End to end tests for the `ergodia` binary: exit codes, report files,
//! config generation, and determinism of everything but the timestamp.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ergodia_core::report::Report;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ergodia"))
}

/// Fresh scratch directory per test so parallel tests never collide.
fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    if dir.exists() {
        fs::remove_dir_all(&dir).unwrap();
    }
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn run_reports_pass_for_a_fixture_suite() {
    let dir = scratch("run_pass");
    let report_path = dir.join("report.json");
    let output = bin()
        .args(["run", "--fixture", "skew2", "--suite", "transfer"])
        .arg("--report")
        .arg(&report_path)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));
    assert!(stdout_of(&output).contains("aggregate: PASS"));

    let report = Report::from_json(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert!(report.aggregate_pass);
    assert_eq!(report.environment.fixture, "skew2");
    assert!(report.generated_at.is_some());
    assert!(report.checks.iter().any(|c| c.name == "transfer_adjoint_gap"));
}

#[test]
fn missing_and_malformed_configs_exit_with_usage_errors() {
    let dir = scratch("bad_configs");

    let output = bin()
        .args(["run", "--config"])
        .arg(dir.join("absent.toml"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("cannot read config"));

    let malformed = dir.join("broken.toml");
    fs::write(&malformed, "fixture = [unclosed").unwrap();
    let output = bin()
        .args(["run", "--config"])
        .arg(&malformed)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("invalid TOML"));

    let unsupported = dir.join("scenario.yaml");
    fs::write(&unsupported, "fixture: skew2").unwrap();
    let output = bin()
        .args(["run", "--config"])
        .arg(&unsupported)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("unsupported extension"));

    let output = bin().arg("run").output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("--config or --fixture"));
}

#[test]
fn generated_configs_run_clean() {
    let dir = scratch("gen_named");
    let config = dir.join("golden.toml");
    let output = bin()
        .args(["gen", "golden", "--out"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));
    let text = fs::read_to_string(&config).unwrap();
    assert!(text.contains("admissibility"), "explicit model expected:\n{text}");

    let output = bin()
        .args(["run", "--config"])
        .arg(&config)
        .args(["--suite", "structure"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));
    assert!(stdout_of(&output).contains("aggregate: PASS"));
}

#[test]
fn random_configs_are_seed_reproducible() {
    let dir = scratch("gen_random");
    let first = dir.join("a.toml");
    let second = dir.join("b.toml");
    let other = dir.join("c.toml");
    for (path, seed) in [(&first, "11"), (&second, "11"), (&other, "12")] {
        let output = bin()
            .args(["gen", "random", "--seed", seed, "--out"])
            .arg(path)
            .output()
            .unwrap();
        assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));
    }
    assert_eq!(
        fs::read_to_string(&first).unwrap(),
        fs::read_to_string(&second).unwrap()
    );
    assert_ne!(
        fs::read_to_string(&first).unwrap(),
        fs::read_to_string(&other).unwrap()
    );

    let output = bin()
        .args(["run", "--config"])
        .arg(&first)
        .args(["--suite", "markovian"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));
}

#[test]
fn reports_are_deterministic_up_to_timestamp() {
    let dir = scratch("determinism");
    let mut reports = Vec::new();
    for name in ["one", "two"] {
        let report_path = dir.join(format!("{name}.json"));
        let csv_dir = dir.join(name);
        let output = bin()
            .args(["run", "--fixture", "golden", "--suite", "markovian"])
            .arg("--report")
            .arg(&report_path)
            .arg("--csv")
            .arg(&csv_dir)
            .output()
            .unwrap();
        assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));
        let mut value: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
        assert!(value.get("generated_at").is_some());
        value["generated_at"] = serde_json::Value::Null;
        reports.push(value);
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(
        fs::read_to_string(dir.join("one/checks.csv")).unwrap(),
        fs::read_to_string(dir.join("two/checks.csv")).unwrap()
    );
}

#[test]
fn mismatched_banks_fail_the_run() {
    let output = bin()
        .args([
            "run", "--fixture", "skew2", "--suite", "cuntz", "--bank", "selector",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stdout = stdout_of(&output);
    assert!(stdout.contains("FAIL named_bank_verifies"), "{stdout}");
    assert!(stdout.contains("aggregate: FAIL"));
}

#[test]
fn export_round_trips_the_checks_table() {
    let dir = scratch("export");
    let report_path = dir.join("report.json");
    let run_csv = dir.join("from_run");
    let output = bin()
        .args(["run", "--fixture", "uniform2", "--suite", "filters"])
        .arg("--report")
        .arg(&report_path)
        .arg("--csv")
        .arg(&run_csv)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));

    let export_csv = dir.join("from_export");
    let output = bin()
        .arg("export")
        .arg("--report")
        .arg(&report_path)
        .arg("--csv")
        .arg(&export_csv)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));
    assert_eq!(
        fs::read_to_string(run_csv.join("checks.csv")).unwrap(),
        fs::read_to_string(export_csv.join("checks.csv")).unwrap()
    );

    let output = bin()
        .arg("export")
        .arg("--report")
        .arg(dir.join("from_run/checks.csv"))
        .arg("--csv")
        .arg(&export_csv)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("not a report file"));
}

#[test]
fn tolerance_depth_and_seed_flags_land_in_the_environment() {
    let dir = scratch("flags");
    let report_path = dir.join("report.json");
    let output = bin()
        .args(["run", "--fixture", "uniform2", "--suite", "transfer"])
        .args(["--tol", "1e-8", "--depth", "4", "--seed", "21"])
        .arg("--report")
        .arg(&report_path)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));
    let report = Report::from_json(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report.environment.tolerance, 1e-8);
    assert_eq!(report.environment.depth, 4);
    assert_eq!(report.environment.seed, 21);
}
