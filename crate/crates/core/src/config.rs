//! Scenario configuration for the check runner.
//!
//! A [`Scenario`] is the declarative input of a run: either a named
//! fixture or an explicit model and measure, the suites to execute, and
//! the knobs every suite shares (depth, tolerance, seed). Scenarios are
//! plain serde values, so they load from JSON or TOML files as well as
//! from command line flags; [`Scenario::resolve`] validates the
//! combination and builds the concrete objects once, up front, with
//! configuration mistakes reported as [`Error::Config`] rather than
//! surfacing later inside a suite.

use std::path::PathBuf;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixtures::{BankFixture, Fixture, DEFAULT_DEPTH};
use crate::symspace::{Measure, MeasureKind, ShiftModel};

/// Default seed when a scenario does not set one.
pub const DEFAULT_SEED: u64 = 7;

/// Default tolerance when a scenario does not set one.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// The named check suites, in canonical execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Suite {
    /// Composition, adjoint, and transfer operator identities.
    Transfer,
    /// Shift-compatible weights: certification, transport, powers.
    Markovian,
    /// Filter banks and the isometry relations they generate.
    Cuntz,
    /// Bank symmetries: loop actions, connectors, weight maps.
    Filters,
    /// Wold decomposition, exactness, and the extended shift model.
    Structure,
}

impl Suite {
    /// All suites, in canonical order.
    pub const ALL: [Suite; 5] = [
        Suite::Transfer,
        Suite::Markovian,
        Suite::Cuntz,
        Suite::Filters,
        Suite::Structure,
    ];

    /// The canonical suite name.
    pub fn name(&self) -> &'static str {
        match self {
            Suite::Transfer => "transfer",
            Suite::Markovian => "markovian",
            Suite::Cuntz => "cuntz",
            Suite::Filters => "filters",
            Suite::Structure => "structure",
        }
    }

    /// Parses one suite name; `operators` is accepted as an alias for
    /// `transfer`.
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "transfer" | "operators" => Ok(Suite::Transfer),
            "markovian" => Ok(Suite::Markovian),
            "cuntz" => Ok(Suite::Cuntz),
            "filters" => Ok(Suite::Filters),
            "structure" => Ok(Suite::Structure),
            other => Err(Error::Config(format!(
                "unknown suite {other:?}; expected all, transfer, markovian, cuntz, \
                 filters, or structure"
            ))),
        }
    }

    /// Parses a list of suite names into canonical order without
    /// duplicates; `all` (or an empty list) selects every suite.
    pub fn parse_list(names: &[String]) -> Result<Vec<Suite>> {
        if names.is_empty() || names.iter().any(|n| n == "all") {
            return Ok(Suite::ALL.to_vec());
        }
        let mut selected = Vec::new();
        for name in names {
            let suite = Suite::parse(name)?;
            if !selected.contains(&suite) {
                selected.push(suite);
            }
        }
        selected.sort();
        Ok(selected)
    }
}

/// An explicit shift model: alphabet size and optional admissibility
/// table (row-major, `alphabet²` entries; absent means the full shift).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Number of letters.
    pub alphabet: usize,
    /// Which two-letter transitions are admissible, row-major.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admissibility: Option<Vec<bool>>,
}

impl ModelConfig {
    fn build(&self, depth: usize) -> Result<ShiftModel> {
        match &self.admissibility {
            None => ShiftModel::full_shift(self.alphabet, depth),
            Some(table) => ShiftModel::with_admissibility(self.alphabet, table, depth),
        }
    }
}

/// An explicit measure on the model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureConfig {
    /// Product measure with one weight per letter.
    Bernoulli {
        /// Letter weights, summing to one.
        weights: Vec<f64>,
    },
    /// Markov measure from an initial distribution and a transition
    /// matrix.
    Markov {
        /// Initial letter distribution.
        initial: Vec<f64>,
        /// Row-stochastic transition matrix.
        transitions: Vec<Vec<f64>>,
    },
}

impl MeasureConfig {
    fn build(&self, model: &ShiftModel) -> Result<Measure> {
        let kind = match self {
            MeasureConfig::Bernoulli { weights } => MeasureKind::bernoulli(weights.clone()),
            MeasureConfig::Markov {
                initial,
                transitions,
            } => MeasureKind::markov(initial.clone(), transitions.clone()),
        };
        Measure::new(model, kind)
    }
}

/// Declarative description of a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Named fixture; mutually exclusive with `model`/`measure`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture: Option<String>,
    /// Explicit model, used together with `measure`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    /// Explicit measure, used together with `model`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureConfig>,
    /// Suite names to run; empty or `all` selects every suite.
    #[serde(default)]
    pub suites: Vec<String>,
    /// Depth budget; defaults to the fixture default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    /// Tolerance the suites compare against.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Seed fixing every randomized check.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Named filter bank for the bank-based suites on two-letter models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bank: Option<String>,
    /// Constant unitary to act with in the filters suite, row-major with
    /// `[re, im]` entries; defaults to a seeded random one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loop_matrix: Option<Vec<Vec<[f64; 2]>>>,
    /// Where to write the JSON report.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    /// Directory for CSV exports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl Scenario {
    /// A scenario running every suite on the named fixture with default
    /// knobs.
    pub fn for_fixture(fixture: Fixture) -> Self {
        Scenario {
            fixture: Some(fixture.name().to_owned()),
            model: None,
            measure: None,
            suites: vec!["all".to_owned()],
            depth: None,
            tolerance: DEFAULT_TOLERANCE,
            seed: DEFAULT_SEED,
            bank: None,
            loop_matrix: None,
            report: None,
            csv: None,
        }
    }

    /// A scenario spelling out the named fixture's model and measure as
    /// explicit configuration, so the generated file shows every number.
    pub fn explicit_fixture(fixture: Fixture) -> Self {
        let mut scenario = Scenario::for_fixture(fixture);
        scenario.fixture = None;
        match fixture {
            Fixture::Uniform2 => {
                scenario.model = Some(ModelConfig {
                    alphabet: 2,
                    admissibility: None,
                });
                scenario.measure = Some(MeasureConfig::Bernoulli {
                    weights: vec![0.5, 0.5],
                });
            }
            Fixture::Skew2 => {
                scenario.model = Some(ModelConfig {
                    alphabet: 2,
                    admissibility: None,
                });
                scenario.measure = Some(MeasureConfig::Markov {
                    initial: vec![1.0 / 3.0, 2.0 / 3.0],
                    transitions: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
                });
            }
            Fixture::Golden => {
                scenario.model = Some(ModelConfig {
                    alphabet: 2,
                    admissibility: Some(vec![true, true, true, false]),
                });
                scenario.measure = Some(MeasureConfig::Markov {
                    initial: vec![2.0 / 3.0, 1.0 / 3.0],
                    transitions: vec![vec![0.5, 0.5], vec![1.0, 0.0]],
                });
            }
        }
        scenario
    }

    /// Validates the scenario and builds the concrete run inputs.
    pub fn resolve(&self) -> Result<ResolvedScenario> {
        let depth = self.depth.unwrap_or(DEFAULT_DEPTH);
        if depth == 0 {
            return Err(Error::Config("depth must be at least 1".to_owned()));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::Config(format!(
                "tolerance must be positive and finite, got {}",
                self.tolerance
            )));
        }
        let (label, model, measure) = match (&self.fixture, &self.model, &self.measure) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(Error::Config(
                    "choose either a named fixture or an explicit model and measure, \
                     not both"
                        .to_owned(),
                ));
            }
            (Some(name), None, None) => {
                let fixture = Fixture::parse(name)?;
                let (model, measure) = fixture.build(depth)?;
                (fixture.name().to_owned(), model, measure)
            }
            (None, Some(model_cfg), Some(measure_cfg)) => {
                let model = model_cfg.build(depth)?;
                let measure = measure_cfg.build(&model)?;
                (format!("custom(alphabet={})", model.alphabet()), model, measure)
            }
            (None, _, _) => {
                return Err(Error::Config(
                    "a scenario needs a fixture name or both a model and a measure"
                        .to_owned(),
                ));
            }
        };
        let suites = Suite::parse_list(&self.suites)?;
        let bank = match &self.bank {
            None => None,
            Some(name) => Some(BankFixture::parse(name)?),
        };
        let loop_matrix = match &self.loop_matrix {
            None => None,
            Some(rows) => Some(parse_loop_matrix(rows)?),
        };
        let invariant = measure.invariance_deviation(&model)? <= 1e-12;
        Ok(ResolvedScenario {
            label,
            model,
            measure,
            invariant,
            suites,
            depth,
            tolerance: self.tolerance,
            seed: self.seed,
            bank,
            loop_matrix,
        })
    }
}

fn parse_loop_matrix(rows: &[Vec<[f64; 2]>]) -> Result<DMatrix<Complex64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config(
            "loop_matrix must be square with one row per filter".to_owned(),
        ));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

/// A validated scenario with its concrete model and measure.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    /// Fixture name, or a description of the explicit configuration.
    pub label: String,
    /// The shift model of the run.
    pub model: ShiftModel,
    /// The measure of the run.
    pub measure: Measure,
    /// Whether the measure is shift-invariant (at working precision).
    pub invariant: bool,
    /// Suites to execute, in canonical order.
    pub suites: Vec<Suite>,
    /// Depth budget.
    pub depth: usize,
    /// Tolerance the suites compare against.
    pub tolerance: f64,
    /// Seed fixing every randomized check.
    pub seed: u64,
    /// Named bank override for the bank-based suites.
    pub bank: Option<BankFixture>,
    /// Constant unitary override for the filters suite.
    pub loop_matrix: Option<DMatrix<Complex64>>,
}
