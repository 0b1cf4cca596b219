//! Command line runner for the check suites.
//!
//! `ergodia run` resolves a scenario from a config file and flag
//! overrides, executes the requested suites, prints a summary, and exits
//! zero exactly when every check passed. `ergodia gen` writes canonical
//! scenario configs with every number spelled out, including a seeded
//! random Markov measure. `ergodia export` renders a previously written
//! report as CSV.
//!
//! Configs load from TOML or JSON, decided by file extension. Reports are
//! versioned JSON; the timestamp lives in its own field so that reports
//! from identical runs are otherwise byte-identical.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ergodia_core::config::{MeasureConfig, ModelConfig, Scenario};
use ergodia_core::fixtures::{random_measure, Fixture};
use ergodia_core::report::Report;
use ergodia_core::suites::{run as run_suites, RunOutput};
use ergodia_core::{MeasureKind, ShiftModel};

/// Scenario runner for shift-space operator checks.
#[derive(Parser)]
#[command(name = "ergodia", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run check suites and write a report.
    Run(RunArgs),
    /// Write a canonical scenario config.
    Gen(GenArgs),
    /// Render a report file as CSV.
    Export(ExportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario config file, TOML or JSON by extension.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named fixture: uniform2, skew2, or golden.
    #[arg(long)]
    fixture: Option<String>,
    /// Suite to run; repeatable. `all` selects every suite.
    #[arg(long = "suite")]
    suites: Vec<String>,
    /// Depth budget override.
    #[arg(long)]
    depth: Option<usize>,
    /// Tolerance override.
    #[arg(long = "tol")]
    tolerance: Option<f64>,
    /// Seed override for all randomized checks.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write CSV exports into this directory.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Named filter bank to check alongside the constructed one.
    #[arg(long)]
    bank: Option<String>,
}

#[derive(Args)]
struct GenArgs {
    /// Config to generate: uniform2, skew2, golden, or random.
    name: String,
    /// Seed for the random Markov measure.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Alphabet size for the random measure.
    #[arg(long, default_value_t = 2)]
    alphabet: usize,
    /// Output path; defaults to `<name>.toml` in the working directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    /// Report JSON produced by `run`.
    #[arg(long)]
    report: PathBuf,
    /// Directory to write CSV files into.
    #[arg(long)]
    csv: PathBuf,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run(args) => run_command(args),
        Command::Gen(args) => {
            gen_command(args)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Export(args) => {
            export_command(args)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run_command(args: RunArgs) -> Result<ExitCode> {
    let scenario = build_scenario(&args)?;
    let output = run_suites(&scenario).context("scenario failed to run")?;
    let mut report = output.report.clone();
    report.generated_at = Some(timestamp());

    if let Some(path) = args.report.as_ref().or(scenario.report.as_ref()) {
        let text = report.to_json()?;
        fs::write(path, text)
            .with_context(|| format!("cannot write report to {}", path.display()))?;
    }
    if let Some(dir) = args.csv.as_ref().or(scenario.csv.as_ref()) {
        write_csv_dir(dir, &report, &output)?;
    }

    print_summary(&report);
    Ok(if report.aggregate_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

/// Loads the config file when given and layers the flag overrides on top.
fn build_scenario(args: &RunArgs) -> Result<Scenario> {
    let mut scenario = match &args.config {
        Some(path) => load_config(path)?,
        None => {
            if args.fixture.is_none() {
                bail!("pass --config or --fixture so the scenario has a model");
            }
            Scenario::for_fixture(Fixture::Uniform2)
        }
    };
    if let Some(fixture) = &args.fixture {
        scenario.fixture = Some(fixture.clone());
        scenario.model = None;
        scenario.measure = None;
    }
    if !args.suites.is_empty() {
        scenario.suites = args.suites.clone();
    }
    if let Some(depth) = args.depth {
        scenario.depth = Some(depth);
    }
    if let Some(tolerance) = args.tolerance {
        scenario.tolerance = tolerance;
    }
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if let Some(bank) = &args.bank {
        scenario.bank = Some(bank.clone());
    }
    Ok(scenario)
}

fn load_config(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let extension = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    let scenario = match extension.as_str() {
        "toml" => toml::from_str(&text)
            .with_context(|| format!("invalid TOML in {}", path.display()))?,
        "json" => serde_json::from_str(&text)
            .with_context(|| format!("invalid JSON in {}", path.display()))?,
        other => bail!(
            "config {} has unsupported extension {other:?}; use .toml or .json",
            path.display()
        ),
    };
    Ok(scenario)
}

fn print_summary(report: &Report) {
    let environment = &report.environment;
    println!(
        "{} at depth {}, seed {}, tolerance {:.1e}: {} checks",
        environment.fixture,
        environment.depth,
        environment.seed,
        environment.tolerance,
        report.checks.len()
    );
    for check in &report.checks {
        if !check.pass {
            println!(
                "  FAIL {} (deviation {:.3e}, tolerance {:.3e})",
                check.name, check.deviation, check.tolerance
            );
        }
    }
    println!(
        "aggregate: {}",
        if report.aggregate_pass { "PASS" } else { "FAIL" }
    );
}

fn write_csv_dir(dir: &Path, report: &Report, output: &RunOutput) -> Result<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create CSV directory {}", dir.display()))?;
    let checks = dir.join("checks.csv");
    fs::write(&checks, report.checks_csv())
        .with_context(|| format!("cannot write {}", checks.display()))?;
    for artifact in &output.artifacts {
        let path = dir.join(&artifact.name);
        fs::write(&path, &artifact.csv)
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn gen_command(args: GenArgs) -> Result<()> {
    let mut scenario = match args.name.as_str() {
        "random" => random_scenario(args.seed, args.alphabet)?,
        name => Scenario::explicit_fixture(Fixture::parse(name)?),
    };
    scenario.seed = args.seed;
    let path = args
        .out
        .unwrap_or_else(|| PathBuf::from(format!("{}.toml", args.name)));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .with_context(|| format!("cannot create {}", parent.display()))?;
    }
    let extension = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    let text = match extension.as_str() {
        "json" => {
            let mut text = serde_json::to_string_pretty(&scenario)?;
            text.push('\n');
            text
        }
        _ => toml::to_string_pretty(&scenario)?,
    };
    fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// A scenario around a seeded strictly positive random Markov measure on
/// the full shift.
fn random_scenario(seed: u64, alphabet: usize) -> Result<Scenario> {
    let model = ShiftModel::full_shift(alphabet, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let measure = random_measure(&model, &mut rng)?;
    let MeasureKind::Markov {
        initial,
        transition,
    } = measure.kind().clone()
    else {
        bail!("random measure generator returned an unexpected kind");
    };
    let mut scenario = Scenario::for_fixture(Fixture::Uniform2);
    scenario.fixture = None;
    scenario.seed = seed;
    scenario.model = Some(ModelConfig {
        alphabet,
        admissibility: None,
    });
    scenario.measure = Some(MeasureConfig::Markov {
        initial,
        transitions: transition,
    });
    Ok(scenario)
}

fn export_command(args: ExportArgs) -> Result<()> {
    let text = fs::read_to_string(&args.report)
        .with_context(|| format!("cannot read report {}", args.report.display()))?;
    let report = Report::from_json(&text)
        .with_context(|| format!("{} is not a report file", args.report.display()))?;
    fs::create_dir_all(&args.csv)
        .with_context(|| format!("cannot create CSV directory {}", args.csv.display()))?;
    let path = args.csv.join("checks.csv");
    fs::write(&path, report.checks_csv())
        .with_context(|| format!("cannot write {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Seconds since the Unix epoch, as a string.
fn timestamp() -> String {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs().to_string())
        .unwrap_or_else(|_| "0".to_owned())
}
