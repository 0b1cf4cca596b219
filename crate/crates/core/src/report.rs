//! Machine-readable reports for check suites.
//!
//! A [`Report`] collects named [`Check`] entries, each recording the
//! measured deviation, the tolerance it was compared against, and the
//! direction of the comparison. Reports serialize to versioned JSON with
//! entries sorted by name, so two runs of the same scenario with the same
//! seed produce byte-identical output. The optional timestamp lives in a
//! field that is skipped when absent and is the only part allowed to vary
//! between otherwise identical runs.
//!
//! Small CSV writers render check tables and complex matrices (row-major,
//! with interleaved real and imaginary columns) for spreadsheet import.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Current version of the report JSON layout.
pub const SCHEMA_VERSION: u32 = 1;

/// How a measured deviation relates to its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// The check passes when the deviation is at most the tolerance.
    Le,
    /// The check passes when the deviation is at least the tolerance;
    /// used for gaps that must stay visibly open.
    Ge,
    /// The value is recorded for inspection and never fails the run.
    Info,
}

/// One named check with its measured deviation and verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    /// Stable identifier, unique within a report.
    pub name: String,
    /// One-line statement of the identity or property being exercised.
    pub anchor: String,
    /// Measured deviation; exact counts are recorded as floats.
    pub deviation: f64,
    /// Threshold the deviation is compared against (zero for `Info`).
    pub tolerance: f64,
    /// Direction of the comparison.
    pub comparison: Comparison,
    /// Verdict of the comparison.
    pub pass: bool,
}

impl Check {
    /// A check passing when `deviation <= tolerance`.
    pub fn le(name: &str, anchor: &str, deviation: f64, tolerance: f64) -> Self {
        Check {
            name: name.to_owned(),
            anchor: anchor.to_owned(),
            deviation,
            tolerance,
            comparison: Comparison::Le,
            pass: deviation.is_finite() && deviation <= tolerance,
        }
    }

    /// A check passing when `deviation >= tolerance`, for gaps that must
    /// remain open.
    pub fn ge(name: &str, anchor: &str, deviation: f64, tolerance: f64) -> Self {
        Check {
            name: name.to_owned(),
            anchor: anchor.to_owned(),
            deviation,
            tolerance,
            comparison: Comparison::Ge,
            pass: deviation.is_finite() && deviation >= tolerance,
        }
    }

    /// An informational value that never fails the run.
    pub fn info(name: &str, anchor: &str, deviation: f64) -> Self {
        Check {
            name: name.to_owned(),
            anchor: anchor.to_owned(),
            deviation,
            tolerance: 0.0,
            comparison: Comparison::Info,
            pass: true,
        }
    }

    /// A check on an exact count that must be zero.
    pub fn exact(name: &str, anchor: &str, count: usize) -> Self {
        Check::le(name, anchor, count as f64, 0.0)
    }
}

/// The inputs a report was produced from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Environment {
    /// Fixture name, or a description of an explicit model and measure.
    pub fixture: String,
    /// Depth budget of the run.
    pub depth: usize,
    /// Seed fixing every randomized check.
    pub seed: u64,
    /// Default tolerance the suites compared against.
    pub tolerance: f64,
}

/// A full suite run: environment, sorted checks, and aggregate verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    /// Report layout version; currently [`SCHEMA_VERSION`].
    pub schema: u32,
    /// Inputs of the run.
    pub environment: Environment,
    /// All executed checks, sorted by name.
    pub checks: Vec<Check>,
    /// True when every non-informational check passed.
    pub aggregate_pass: bool,
    /// Optional wall-clock timestamp. Excluded from serialization when
    /// absent so that deterministic comparisons can ignore it.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub generated_at: Option<String>,
}

impl Report {
    /// Starts an empty report for the given environment.
    pub fn new(environment: Environment) -> Self {
        Report {
            schema: SCHEMA_VERSION,
            environment,
            checks: Vec::new(),
            aggregate_pass: true,
            generated_at: None,
        }
    }

    /// Appends a check and folds its verdict into the aggregate.
    pub fn push(&mut self, check: Check) {
        self.aggregate_pass &= check.pass;
        self.checks.push(check);
    }

    /// Sorts checks by name and recomputes the aggregate verdict.
    pub fn finalize(mut self) -> Self {
        self.checks.sort_by(|a, b| a.name.cmp(&b.name));
        self.aggregate_pass = self.checks.iter().all(|c| c.pass);
        self
    }

    /// The checks that failed.
    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("report serialization failed: {e}")))?;
        text.push('\n');
        Ok(text)
    }

    /// Parses a report from JSON.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("report parse failed: {e}")))
    }

    /// The check table as CSV, one row per check.
    pub fn checks_csv(&self) -> String {
        let mut out = String::from("name,anchor,deviation,tolerance,comparison,pass\n");
        for c in &self.checks {
            let comparison = match c.comparison {
                Comparison::Le => "le",
                Comparison::Ge => "ge",
                Comparison::Info => "info",
            };
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                csv_field(&c.name),
                csv_field(&c.anchor),
                c.deviation,
                c.tolerance,
                comparison,
                c.pass
            ));
        }
        out
    }
}

/// Quotes a CSV field when it contains a delimiter, quote, or newline.
fn csv_field(raw: &str) -> String {
    if raw.contains([',', '"', '\n']) {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw.to_owned()
    }
}

/// A complex matrix as CSV, row-major, with `re` and `im` columns
/// interleaved per entry.
pub fn complex_matrix_csv(m: &DMatrix<Complex64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .flat_map(|j| [m[(i, j)].re.to_string(), m[(i, j)].im.to_string()])
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// A real matrix given as rows, rendered as CSV.
pub fn real_matrix_csv(rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_environment() -> Environment {
        Environment {
            fixture: "uniform2".to_owned(),
            depth: 3,
            seed: 7,
            tolerance: 1e-10,
        }
    }

    #[test]
    fn verdicts_follow_the_comparison_direction() {
        assert!(Check::le("a", "x", 1e-12, 1e-10).pass);
        assert!(!Check::le("a", "x", 1e-8, 1e-10).pass);
        assert!(Check::ge("b", "x", 0.5, 0.4).pass);
        assert!(!Check::ge("b", "x", 0.3, 0.4).pass);
        assert!(Check::info("c", "x", 123.0).pass);
        assert!(Check::exact("d", "x", 0).pass);
        assert!(!Check::exact("d", "x", 2).pass);
        assert!(!Check::le("e", "x", f64::NAN, 1.0).pass);
    }

    #[test]
    fn finalize_sorts_checks_and_aggregates() {
        let mut report = Report::new(sample_environment());
        report.push(Check::le("zeta", "x", 0.0, 1e-10));
        report.push(Check::le("alpha", "x", 1.0, 1e-10));
        report.push(Check::info("midpoint", "x", 0.5));
        let report = report.finalize();
        let names: Vec<&str> = report.checks.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["alpha", "midpoint", "zeta"]);
        assert!(!report.aggregate_pass);
        assert_eq!(report.failures().len(), 1);
        assert_eq!(report.failures()[0].name, "alpha");
    }

    #[test]
    fn json_round_trips_and_skips_absent_timestamp() {
        let mut report = Report::new(sample_environment());
        report.push(Check::le("norm_gap", "transfer equals adjoint", 3.0e-15, 1e-10));
        let report = report.finalize();
        let text = report.to_json().unwrap();
        assert!(!text.contains("generated_at"));
        assert!(text.contains("\"schema\": 1"));
        let back = Report::from_json(&text).unwrap();
        assert_eq!(back.checks.len(), 1);
        assert_eq!(back.checks[0].deviation, 3.0e-15);
        assert_eq!(back.generated_at, None);

        let mut stamped = back.clone();
        stamped.generated_at = Some("2024-01-01T00:00:00Z".to_owned());
        assert!(stamped.to_json().unwrap().contains("generated_at"));
    }

    #[test]
    fn identical_runs_serialize_identically() {
        let build = || {
            let mut report = Report::new(sample_environment());
            report.push(Check::le("b", "x", 0.25, 1e-10));
            report.push(Check::ge("a", "y", 0.5, 0.4));
            report.finalize().to_json().unwrap()
        };
        assert_eq!(build(), build());
    }

    #[test]
    fn csv_escapes_delimiters_and_renders_matrices() {
        let mut report = Report::new(sample_environment());
        report.push(Check::info("note", "value, with comma and \"quote\"", 1.0));
        let csv = report.finalize().checks_csv();
        assert!(csv.starts_with("name,anchor,deviation"));
        assert!(csv.contains("\"value, with comma and \"\"quote\"\"\""));

        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(0.5, 0.25),
                Complex64::new(0.0, 0.0),
            ],
        );
        assert_eq!(complex_matrix_csv(&m), "1,0,0,-1\n0.5,0.25,0,0\n");
        assert_eq!(real_matrix_csv(&[vec![1.0, 2.0], vec![3.5, 4.0]]), "1,2\n3.5,4\n");
    }
}
