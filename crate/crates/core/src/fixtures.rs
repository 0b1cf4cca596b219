//! Canonical models, measures, and filter families for checks and the
//! command line runner.
//!
//! Three small fixtures cover the qualitatively different regimes:
//!
//! * `uniform2`: the full two-letter shift with the fair Bernoulli
//!   measure; invariant, with constant branch weights.
//! * `skew2`: the full two-letter shift with a Markov measure whose
//!   initial distribution disagrees with its stationary one; quasi-
//!   invariant but not invariant, so transfer and adjoint genuinely
//!   differ.
//! * `golden`: the two-letter subshift forbidding the repeated second
//!   letter, with its stationary Markov measure; invariant with variable
//!   branch counts.
//!
//! The named filter families (`selector`, `sign`) are the two standard
//! two-letter banks, both adapted to the uniform fixture. Seeded random
//! generators for measures complete the set.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::filters::FilterBank;
use crate::symspace::{CylFn, Measure, MeasureKind, ShiftModel};

/// Default depth budget for fixtures when a scenario does not set one.
pub const DEFAULT_DEPTH: usize = 3;

/// The named model-and-measure fixtures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fixture {
    /// Full two-letter shift, fair Bernoulli measure.
    Uniform2,
    /// Full two-letter shift, Markov measure started off stationarity.
    Skew2,
    /// Golden-mean subshift, stationary Markov measure.
    Golden,
}

impl Fixture {
    /// All fixtures, in canonical order.
    pub const ALL: [Fixture; 3] = [Fixture::Uniform2, Fixture::Skew2, Fixture::Golden];

    /// The name used on the command line and in reports.
    pub fn name(&self) -> &'static str {
        match self {
            Fixture::Uniform2 => "uniform2",
            Fixture::Skew2 => "skew2",
            Fixture::Golden => "golden",
        }
    }

    /// Looks a fixture up by name.
    pub fn parse(name: &str) -> Result<Self> {
        Fixture::ALL
            .into_iter()
            .find(|f| f.name() == name)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown fixture {name:?}; expected one of uniform2, skew2, golden"
                ))
            })
    }

    /// Whether the fixture measure is shift-invariant.
    pub fn invariant(&self) -> bool {
        !matches!(self, Fixture::Skew2)
    }

    /// Builds the model and measure at the given depth budget.
    pub fn build(&self, depth: usize) -> Result<(ShiftModel, Measure)> {
        match self {
            Fixture::Uniform2 => {
                let model = ShiftModel::full_shift(2, depth)?;
                let measure = Measure::new(&model, MeasureKind::bernoulli(vec![0.5, 0.5]))?;
                Ok((model, measure))
            }
            Fixture::Skew2 => {
                let model = ShiftModel::full_shift(2, depth)?;
                let measure = Measure::new(
                    &model,
                    MeasureKind::markov(
                        vec![1.0 / 3.0, 2.0 / 3.0],
                        vec![vec![0.5, 0.5], vec![0.5, 0.5]],
                    ),
                )?;
                Ok((model, measure))
            }
            Fixture::Golden => {
                let model = ShiftModel::with_admissibility(2, &[true, true, true, false], depth)?;
                let measure = Measure::new(
                    &model,
                    MeasureKind::markov(
                        vec![2.0 / 3.0, 1.0 / 3.0],
                        vec![vec![0.5, 0.5], vec![1.0, 0.0]],
                    ),
                )?;
                Ok((model, measure))
            }
        }
    }
}

/// The named two-letter filter families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BankFixture {
    /// `m_i = √2 · 1[x₁ = i]`: scaled branch selectors.
    Selector,
    /// `m_0 = 1`, `m_1 = (-1)^{x₁}`: the sign pair.
    Sign,
}

impl BankFixture {
    /// All named banks, in canonical order.
    pub const ALL: [BankFixture; 2] = [BankFixture::Selector, BankFixture::Sign];

    /// The name used on the command line and in reports.
    pub fn name(&self) -> &'static str {
        match self {
            BankFixture::Selector => "selector",
            BankFixture::Sign => "sign",
        }
    }

    /// Looks a bank up by name.
    pub fn parse(name: &str) -> Result<Self> {
        BankFixture::ALL
            .into_iter()
            .find(|b| b.name() == name)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown filter bank {name:?}; expected selector or sign"
                ))
            })
    }

    /// The raw filters on a two-letter model.
    pub fn filters(&self, model: &ShiftModel) -> Result<Vec<CylFn>> {
        if model.alphabet() != 2 {
            return Err(Error::Config(format!(
                "the {} bank is defined for two letters, model has {}",
                self.name(),
                model.alphabet()
            )));
        }
        let c = |re: f64| Complex64::new(re, 0.0);
        Ok(match self {
            BankFixture::Selector => {
                let r = 2.0f64.sqrt();
                vec![
                    CylFn::from_values(model, 1, vec![c(r), c(0.0)])?,
                    CylFn::from_values(model, 1, vec![c(0.0), c(r)])?,
                ]
            }
            BankFixture::Sign => vec![
                CylFn::one(),
                CylFn::from_values(model, 1, vec![c(1.0), c(-1.0)])?,
            ],
        })
    }

    /// Builds and verifies the bank in the unweighted class.
    ///
    /// Both named banks are adapted to the uniform fixture; over other
    /// measures the verification records an honest failure.
    pub fn build(&self, model: &ShiftModel, measure: &Measure, tol: f64) -> Result<FilterBank> {
        FilterBank::new_plain(model, measure, self.filters(model)?, tol)
    }
}

/// Draws a strictly positive Markov measure compatible with the model's
/// admissibility: inadmissible transitions get weight zero, admissible
/// ones a uniform draw normalized per row, and the initial distribution
/// an independent normalized draw.
pub fn random_measure(model: &ShiftModel, rng: &mut impl Rng) -> Result<Measure> {
    let n = model.alphabet();
    let mut initial: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..=1.8)).collect();
    let total: f64 = initial.iter().sum();
    for p in &mut initial {
        *p /= total;
    }
    let mut transitions = Vec::with_capacity(n);
    for a in 0..n {
        let mut row: Vec<f64> = (0..n)
            .map(|b| {
                if model.pair_admissible(a as u8, b as u8) {
                    rng.random_range(0.2..=1.8)
                } else {
                    0.0
                }
            })
            .collect();
        let total: f64 = row.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "letter {a} has no admissible successor"
            )));
        }
        for p in &mut row {
            *p /= total;
        }
        transitions.push(row);
    }
    Measure::new(model, MeasureKind::markov(initial, transitions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markovian::{is_markovian, random_markovian};
    use crate::operators::{adjoint_op, compose_op};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fixtures_build_and_report_invariance_correctly() {
        for fixture in Fixture::ALL {
            let (model, measure) = fixture.build(DEFAULT_DEPTH).unwrap();
            let deviation = measure.invariance_deviation(&model).unwrap();
            if fixture.invariant() {
                assert!(deviation < 1e-14, "{} should be invariant", fixture.name());
            } else {
                assert!(deviation > 0.1, "{} should not be invariant", fixture.name());
            }
        }
    }

    #[test]
    fn fixture_names_round_trip() {
        for fixture in Fixture::ALL {
            assert_eq!(Fixture::parse(fixture.name()).unwrap(), fixture);
        }
        assert!(matches!(
            Fixture::parse("unknown").unwrap_err(),
            Error::Config(_)
        ));
        for bank in BankFixture::ALL {
            assert_eq!(BankFixture::parse(bank.name()).unwrap(), bank);
        }
    }

    #[test]
    fn named_banks_verify_over_the_uniform_fixture() {
        let (model, measure) = Fixture::Uniform2.build(3).unwrap();
        for bank in BankFixture::ALL {
            let built = bank.build(&model, &measure, 1e-12).unwrap();
            assert!(built.is_verified(), "{} bank should pass", bank.name());
        }
    }

    #[test]
    fn named_banks_fail_honestly_off_their_measure() {
        let (model, measure) = Fixture::Skew2.build(3).unwrap();
        let built = BankFixture::Selector.build(&model, &measure, 1e-12).unwrap();
        assert!(!built.is_verified());
    }

    #[test]
    fn skew_fixture_masses_are_the_expected_fractions() {
        let (model, measure) = Fixture::Skew2.build(2).unwrap();
        let mass = measure.mass(1).unwrap();
        assert_relative_eq!(mass[0], 1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(mass[1], 2.0 / 3.0, max_relative = 1e-15);
        let _ = model;
    }

    #[test]
    fn random_measures_are_strictly_positive_and_consistent() {
        for fixture in Fixture::ALL {
            let (model, _) = fixture.build(3).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let measure = random_measure(&model, &mut rng).unwrap();
            for depth in 0..=3 {
                for &m in measure.mass(depth).unwrap() {
                    assert!(m > 0.0);
                }
            }
            let total: f64 = measure.mass(3).unwrap().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_measures_are_reproducible_for_a_fixed_seed() {
        let (model, _) = Fixture::Uniform2.build(3).unwrap();
        let mut rng1 = ChaCha8Rng::seed_from_u64(7);
        let mut rng2 = ChaCha8Rng::seed_from_u64(7);
        let a = random_measure(&model, &mut rng1).unwrap();
        let b = random_measure(&model, &mut rng2).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.mass(3).unwrap(), b.mass(3).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        /// Adjointness holds for every seeded random measure: the pairing
        /// `⟨S f, g⟩ = ⟨f, S* g⟩` is an identity of the weighted inner
        /// product, not a property of special fixtures.
        #[test]
        fn composition_and_adjoint_pair_for_random_measures(seed in 0u64..1024) {
            let (model, _) = Fixture::Uniform2.build(3).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let measure = random_measure(&model, &mut rng).unwrap();
            let f = CylFn::random_complex(&model, 2, &mut rng).unwrap();
            let g = CylFn::random_complex(&model, 3, &mut rng).unwrap();
            let s = compose_op(&model, 2).unwrap();
            let sstar = adjoint_op(&model, &measure, 3).unwrap();
            let lhs = measure.inner(&model, &s.apply(&model, &f).unwrap(), &g).unwrap();
            let rhs = measure
                .inner(&model, &f, &sstar.apply(&model, &g).unwrap())
                .unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }

        /// Random fiber-normalized weights certify against the measure
        /// they were normalized for.
        #[test]
        fn random_weights_certify_for_random_measures(seed in 0u64..1024) {
            let (model, _) = Fixture::Golden.build(3).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let measure = random_measure(&model, &mut rng).unwrap();
            let phi = random_markovian(&model, &measure, 2, &mut rng).unwrap();
            let cert = is_markovian(&model, &measure, &phi, 1e-10).unwrap();
            prop_assert!(cert.is_valid());
        }

        /// Promotion to the budget and exact reduction return the depth a
        /// cylinder function started at.
        #[test]
        fn promotion_then_reduction_is_stable(seed in 0u64..1024, depth in 0usize..=2) {
            let (model, _) = Fixture::Uniform2.build(3).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = CylFn::random_complex(&model, depth, &mut rng).unwrap();
            let back = f.promote(&model, 3).unwrap().reduce_depth(&model, 1e-12);
            prop_assert!(back.depth() <= depth);
            prop_assert!(back.sup_distance(&f, &model).unwrap() < 1e-12);
        }
    }
}
