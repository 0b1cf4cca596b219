//! Cylinder measures: strictly positive, depth-consistent mass assignments.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::cylfn::CylFn;
use super::model::ShiftModel;
use super::word::Word;

/// Absolute tolerance for validating user-supplied probability vectors.
const INPUT_TOL: f64 = 1e-9;

/// Absolute tolerance for the internal depth-consistency audit.
const CONSISTENCY_TOL: f64 = 1e-12;

/// Parameter form of a measure, as it appears in configuration files.
///
/// The JSON/TOML form is tagged by `kind`:
/// `{"kind": "bernoulli", "weights": […]}`,
/// `{"kind": "markov", "initial": […], "transition": [[…], …]}`, or
/// `{"kind": "density", "base": {…}, "density": {…}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MeasureKind {
    /// Product measure with one weight per letter. Requires the full shift,
    /// since a product of letter weights cannot be depth-consistent when
    /// some transitions are forbidden.
    Bernoulli {
        /// Letter weights; strictly positive, normalized to sum to one.
        weights: Vec<f64>,
    },
    /// First-letter distribution plus a transition matrix supported exactly
    /// on the admissible pairs.
    Markov {
        /// Distribution of the first letter; strictly positive entries.
        initial: Vec<f64>,
        /// Row-stochastic transition matrix, one row per letter.
        transition: Vec<Vec<f64>>,
    },
    /// A base measure reweighted by a strictly positive real density.
    ///
    /// The density is not renormalized, so the result is a finite measure
    /// with total mass equal to the integral of the density.
    Density {
        /// Parameters of the base measure.
        base: Box<MeasureKind>,
        /// Strictly positive real cylinder function.
        density: CylFn,
    },
}

impl MeasureKind {
    /// Convenience constructor for the Bernoulli kind.
    pub fn bernoulli(weights: Vec<f64>) -> Self {
        MeasureKind::Bernoulli { weights }
    }

    /// Convenience constructor for the Markov kind.
    pub fn markov(initial: Vec<f64>, transition: Vec<Vec<f64>>) -> Self {
        MeasureKind::Markov {
            initial,
            transition,
        }
    }

    /// Convenience constructor for the density kind.
    pub fn density(base: MeasureKind, density: CylFn) -> Self {
        MeasureKind::Density {
            base: Box::new(base),
            density,
        }
    }

    /// Feeds the parameters into a stable fingerprint.
    fn hash_into(&self, h: &mut Fnv) {
        match self {
            MeasureKind::Bernoulli { weights } => {
                h.byte(1);
                for &w in weights {
                    h.f64(w);
                }
            }
            MeasureKind::Markov {
                initial,
                transition,
            } => {
                h.byte(2);
                for &p in initial {
                    h.f64(p);
                }
                for row in transition {
                    h.byte(0xfe);
                    for &p in row {
                        h.f64(p);
                    }
                }
            }
            MeasureKind::Density { base, density } => {
                h.byte(3);
                base.hash_into(h);
                h.byte(0xfd);
                h.f64(density.depth() as f64);
                for v in density.values() {
                    h.f64(v.re);
                    h.f64(v.im);
                }
            }
        }
    }
}

/// FNV-1a accumulator; gives measures a stable, cheap identity.
struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }
    fn byte(&mut self, b: u8) {
        self.0 ^= b as u64;
        self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
    }
    fn f64(&mut self, x: f64) {
        for b in x.to_bits().to_le_bytes() {
            self.byte(b);
        }
    }
}

/// A validated measure on the cylinder algebra of one shift model.
///
/// Construction rejects any admissible cylinder of nonpositive mass and
/// audits Kolmogorov consistency (`mass(w) = Σ_b mass(w·b)` over admissible
/// extensions) at every depth. Masses for all depths up to the budget are
/// precomputed.
#[derive(Debug, Clone)]
pub struct Measure {
    kind: MeasureKind,
    masses: Vec<Vec<f64>>,
    fingerprint: u64,
}

impl Measure {
    /// Validates the parameters against `model` and tabulates all masses.
    pub fn new(model: &ShiftModel, kind: MeasureKind) -> Result<Self> {
        let kind = validate_kind(model, kind)?;
        let masses = tabulate(model, &kind)?;
        audit(model, &masses)?;
        let mut h = Fnv::new();
        kind.hash_into(&mut h);
        Ok(Measure {
            kind,
            masses,
            fingerprint: h.0,
        })
    }

    /// The (normalized) parameters this measure was built from.
    pub fn kind(&self) -> &MeasureKind {
        &self.kind
    }

    /// Stable identity of the measure parameters.
    ///
    /// Certificates and filter banks carry this value so that cross-measure
    /// use is caught instead of silently producing wrong numbers.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// The same measure tabulated for another model (typically a copy of the
    /// original with a larger depth budget).
    pub fn rebuild(&self, model: &ShiftModel) -> Result<Self> {
        Measure::new(model, self.kind.clone())
    }

    /// Cylinder masses at one depth, in canonical word order.
    pub fn mass(&self, depth: usize) -> Result<&[f64]> {
        self.masses.get(depth).map(Vec::as_slice).ok_or_else(|| {
            Error::DepthOverflow {
                requested: depth,
                budget: self.masses.len() - 1,
            }
        })
    }

    /// Mass of a single cylinder `[w]`.
    pub fn mass_of(&self, model: &ShiftModel, w: &Word) -> Result<f64> {
        let idx = model.index_of(w).ok_or_else(|| {
            Error::DimensionMismatch(format!("word {w} is not admissible in this model"))
        })?;
        Ok(self.mass(w.len())?[idx])
    }

    /// Masses of the pushforward `μ∘σ⁻ⁿ` at the given depth.
    ///
    /// `(μ∘σ⁻ⁿ)([w]) = Σ_{|u|=n} μ([u·w])`, so this needs `n + depth` within
    /// the budget.
    pub fn pushforward_mass(&self, model: &ShiftModel, n: usize, depth: usize) -> Result<Vec<f64>> {
        let total = n + depth;
        let fine = self.mass(total)?;
        let mut out = vec![0.0; model.dim(depth)?];
        for (v, &m) in model.words(total)?.iter().zip(fine) {
            let idx = model
                .index_of(&v.suffix(depth))
                .expect("suffix of an admissible word is admissible");
            out[idx] += m;
        }
        Ok(out)
    }

    /// How far the measure is from shift-invariance.
    ///
    /// Returns `max |(μ∘σ⁻¹)([w])/μ([w]) - 1|` over the deepest words at
    /// which the ratio is computable.
    pub fn invariance_deviation(&self, model: &ShiftModel) -> Result<f64> {
        let d = model.depth_budget() - 1;
        let pf = self.pushforward_mass(model, 1, d)?;
        let mass = self.mass(d)?;
        Ok(pf
            .iter()
            .zip(mass)
            .map(|(p, m)| (p / m - 1.0).abs())
            .fold(0.0, f64::max))
    }

    /// Inner product `⟨f, g⟩ = Σ_w f(w) g̅(w) μ([w])`, conjugate-linear in
    /// `g`, evaluated at the common promoted depth.
    pub fn inner(&self, model: &ShiftModel, f: &CylFn, g: &CylFn) -> Result<Complex64> {
        let depth = f.depth().max(g.depth());
        let fp = f.promote(model, depth)?;
        let gp = g.promote(model, depth)?;
        let mass = self.mass(depth)?;
        let mut acc = Complex64::ZERO;
        for ((x, y), &m) in fp.values().iter().zip(gp.values()).zip(mass) {
            acc += x * y.conj() * m;
        }
        Ok(acc)
    }

    /// Integral `∫ f dμ`.
    pub fn integral(&self, model: &ShiftModel, f: &CylFn) -> Result<Complex64> {
        self.inner(model, f, &CylFn::one())
    }

    /// Norm in `L²(μ)`.
    pub fn norm(&self, model: &ShiftModel, f: &CylFn) -> Result<f64> {
        Ok(self.inner(model, f, f)?.re.max(0.0).sqrt())
    }
}

/// Checks parameter shapes, positivity, and support; normalizes probability
/// vectors so that depth consistency holds to machine precision.
fn validate_kind(model: &ShiftModel, kind: MeasureKind) -> Result<MeasureKind> {
    let n = model.alphabet();
    match kind {
        MeasureKind::Bernoulli { weights } => {
            if model.admissibility().iter().any(|&ok| !ok) {
                return Err(Error::InvalidMeasure(
                    "a Bernoulli product measure needs the full shift; \
                     use a Markov kind on subshifts"
                        .into(),
                ));
            }
            if weights.len() != n {
                return Err(Error::InvalidMeasure(format!(
                    "need {n} letter weights, got {}",
                    weights.len()
                )));
            }
            if let Some(&bad) = weights.iter().find(|&&w| w <= 0.0) {
                return Err(Error::InvalidMeasure(format!(
                    "letter weights must be strictly positive, got {bad}"
                )));
            }
            let sum: f64 = weights.iter().sum();
            if (sum - 1.0).abs() > INPUT_TOL {
                return Err(Error::InvalidMeasure(format!(
                    "letter weights sum to {sum}, expected 1"
                )));
            }
            Ok(MeasureKind::Bernoulli {
                weights: weights.iter().map(|w| w / sum).collect(),
            })
        }
        MeasureKind::Markov {
            initial,
            transition,
        } => {
            if initial.len() != n || transition.len() != n {
                return Err(Error::InvalidMeasure(format!(
                    "need {n} initial weights and {n} transition rows, got {} and {}",
                    initial.len(),
                    transition.len()
                )));
            }
            if let Some(&bad) = initial.iter().find(|&&p| p <= 0.0) {
                return Err(Error::InvalidMeasure(format!(
                    "initial distribution must be strictly positive, got {bad}"
                )));
            }
            let init_sum: f64 = initial.iter().sum();
            if (init_sum - 1.0).abs() > INPUT_TOL {
                return Err(Error::InvalidMeasure(format!(
                    "initial distribution sums to {init_sum}, expected 1"
                )));
            }
            let mut rows = Vec::with_capacity(n);
            for (a, row) in transition.iter().enumerate() {
                if row.len() != n {
                    return Err(Error::InvalidMeasure(format!(
                        "transition row {a} has {} entries, expected {n}",
                        row.len()
                    )));
                }
                for (b, &p) in row.iter().enumerate() {
                    let admissible = model.pair_admissible(a as u8, b as u8);
                    if admissible && p <= 0.0 {
                        return Err(Error::InvalidMeasure(format!(
                            "transition {a}->{b} is admissible but has weight {p}"
                        )));
                    }
                    if !admissible && p != 0.0 {
                        return Err(Error::InvalidMeasure(format!(
                            "transition {a}->{b} is forbidden but has weight {p}"
                        )));
                    }
                }
                let row_sum: f64 = row.iter().sum();
                if (row_sum - 1.0).abs() > INPUT_TOL {
                    return Err(Error::InvalidMeasure(format!(
                        "transition row {a} sums to {row_sum}, expected 1"
                    )));
                }
                rows.push(row.iter().map(|p| p / row_sum).collect());
            }
            Ok(MeasureKind::Markov {
                initial: initial.iter().map(|p| p / init_sum).collect(),
                transition: rows,
            })
        }
        MeasureKind::Density { base, density } => {
            let base = validate_kind(model, *base)?;
            density.validate(model)?;
            let words = model.words(density.depth())?;
            for (w, v) in words.iter().zip(density.values()) {
                if v.im.abs() > 1e-12 || v.re <= 0.0 {
                    return Err(Error::InvalidMeasure(format!(
                        "density must be strictly positive and real, got {v} at word {w}"
                    )));
                }
            }
            Ok(MeasureKind::Density {
                base: Box::new(base),
                density,
            })
        }
    }
}

/// Computes the mass tables for all depths `0..=D`.
fn tabulate(model: &ShiftModel, kind: &MeasureKind) -> Result<Vec<Vec<f64>>> {
    let budget = model.depth_budget();
    match kind {
        MeasureKind::Bernoulli { weights } => {
            let mut masses = Vec::with_capacity(budget + 1);
            for d in 0..=budget {
                let level = model
                    .words(d)?
                    .iter()
                    .map(|w| w.letters().iter().map(|&a| weights[a as usize]).product())
                    .collect();
                masses.push(level);
            }
            Ok(masses)
        }
        MeasureKind::Markov {
            initial,
            transition,
        } => {
            let mut masses = Vec::with_capacity(budget + 1);
            for d in 0..=budget {
                let level = model
                    .words(d)?
                    .iter()
                    .map(|w| {
                        let letters = w.letters();
                        match letters.first() {
                            None => 1.0,
                            Some(&a) => {
                                let mut m = initial[a as usize];
                                for p in letters.windows(2) {
                                    m *= transition[p[0] as usize][p[1] as usize];
                                }
                                m
                            }
                        }
                    })
                    .collect();
                masses.push(level);
            }
            Ok(masses)
        }
        MeasureKind::Density { base, density } => {
            let base_masses = tabulate(model, base)?;
            let h_depth = density.depth();
            let mut masses = vec![Vec::new(); budget + 1];
            // At and above the density's depth the density is constant on
            // each cylinder; below, marginalize downward.
            for d in (0..=budget).rev() {
                if d >= h_depth {
                    let dens = density.promote(model, d)?;
                    masses[d] = dens
                        .values()
                        .iter()
                        .zip(&base_masses[d])
                        .map(|(h, m)| h.re * m)
                        .collect();
                } else {
                    let mut level = vec![0.0; model.dim(d)?];
                    for (w, &m) in model.words(d + 1)?.iter().zip(&masses[d + 1]) {
                        let idx = model
                            .index_of(&w.prefix(d))
                            .expect("prefix of an admissible word is admissible");
                        level[idx] += m;
                    }
                    masses[d] = level;
                }
            }
            Ok(masses)
        }
    }
}

/// Rejects nonpositive cylinders and depth-inconsistent tables.
fn audit(model: &ShiftModel, masses: &[Vec<f64>]) -> Result<()> {
    for (d, level) in masses.iter().enumerate() {
        for (w, &m) in model.words(d)?.iter().zip(level) {
            if m <= 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "cylinder [{w}] has nonpositive mass {m}"
                )));
            }
        }
    }
    for d in 0..masses.len() - 1 {
        let mut sums = vec![0.0; masses[d].len()];
        for (w, &m) in model.words(d + 1)?.iter().zip(&masses[d + 1]) {
            let idx = model
                .index_of(&w.prefix(d))
                .expect("prefix of an admissible word is admissible");
            sums[idx] += m;
        }
        for ((w, &m), s) in model.words(d)?.iter().zip(&masses[d]).zip(sums) {
            if (m - s).abs() > CONSISTENCY_TOL {
                return Err(Error::InvalidMeasure(format!(
                    "mass of [{w}] is {m} but its refinements sum to {s}"
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full2(depth: usize) -> ShiftModel {
        ShiftModel::full_shift(2, depth).unwrap()
    }

    fn golden(depth: usize) -> ShiftModel {
        ShiftModel::with_admissibility(2, &[true, true, true, false], depth).unwrap()
    }

    /// Markov measure on the full 2-shift with skewed initial distribution
    /// and uniform transitions; quasi-invariant but not invariant.
    fn skew(model: &ShiftModel) -> Measure {
        Measure::new(
            model,
            MeasureKind::markov(
                vec![1.0 / 3.0, 2.0 / 3.0],
                vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            ),
        )
        .unwrap()
    }

    #[test]
    fn bernoulli_mass_is_a_product() {
        let m = full2(3);
        let mu = Measure::new(&m, MeasureKind::bernoulli(vec![0.5, 0.5])).unwrap();
        assert_eq!(mu.mass_of(&m, &Word::new(vec![0, 1, 1])).unwrap(), 0.125);
        assert_eq!(mu.mass(0).unwrap(), &[1.0]);
    }

    #[test]
    fn skew_markov_mass_of_01() {
        let m = full2(3);
        let mu = skew(&m);
        let got = mu.mass_of(&m, &Word::new(vec![0, 1])).unwrap();
        assert!((got - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn golden_mean_markov_is_invariant() {
        let m = golden(3);
        let mu = Measure::new(
            &m,
            MeasureKind::markov(
                vec![2.0 / 3.0, 1.0 / 3.0],
                vec![vec![0.5, 0.5], vec![1.0, 0.0]],
            ),
        )
        .unwrap();
        assert!(mu.invariance_deviation(&m).unwrap() < 1e-12);
    }

    #[test]
    fn skew_markov_is_not_invariant() {
        let m = full2(3);
        assert!(skew(&m).invariance_deviation(&m).unwrap() > 0.4);
    }

    #[test]
    fn bernoulli_rejected_on_subshifts() {
        let err = Measure::new(&golden(2), MeasureKind::bernoulli(vec![0.5, 0.5]));
        assert!(matches!(err, Err(Error::InvalidMeasure(_))));
    }

    #[test]
    fn transitions_must_match_admissibility() {
        // Weight on the forbidden pair 11.
        let err = Measure::new(
            &golden(2),
            MeasureKind::markov(vec![0.5, 0.5], vec![vec![0.5, 0.5], vec![0.9, 0.1]]),
        );
        assert!(matches!(err, Err(Error::InvalidMeasure(_))));
        // Admissible pair 10 with zero weight.
        let err = Measure::new(
            &golden(2),
            MeasureKind::markov(vec![0.5, 0.5], vec![vec![0.5, 0.5], vec![0.0, 1.0]]),
        );
        assert!(matches!(err, Err(Error::InvalidMeasure(_))));
    }

    #[test]
    fn pushforward_sums_prefix_branches() {
        let m = full2(3);
        let mu = skew(&m);
        // (μ∘σ⁻¹)([w]) at depth 2 = Σ_a μ([a·w]) = (1/2)² = 1/4 for every w.
        let pf = mu.pushforward_mass(&m, 1, 2).unwrap();
        for p in pf {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn density_masses_follow_the_density() {
        let m = full2(3);
        let base = MeasureKind::bernoulli(vec![0.5, 0.5]);
        let h = CylFn::from_values(
            &m,
            1,
            vec![Complex64::new(0.5, 0.0), Complex64::new(1.5, 0.0)],
        )
        .unwrap();
        let nu = Measure::new(&m, MeasureKind::density(base, h)).unwrap();
        // ν([0]) = 0.5 · 0.5, ν([1]) = 1.5 · 0.5; total mass is not 1.
        assert!((nu.mass_of(&m, &Word::new(vec![0])).unwrap() - 0.25).abs() < 1e-15);
        assert!((nu.mass_of(&m, &Word::new(vec![1])).unwrap() - 0.75).abs() < 1e-15);
        assert!((nu.mass(0).unwrap()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fingerprints_separate_measures() {
        let m = full2(2);
        let a = Measure::new(&m, MeasureKind::bernoulli(vec![0.5, 0.5])).unwrap();
        let b = skew(&m);
        assert_ne!(a.fingerprint(), b.fingerprint());
        let a2 = Measure::new(&m, MeasureKind::bernoulli(vec![0.5, 0.5])).unwrap();
        assert_eq!(a.fingerprint(), a2.fingerprint());
    }

    #[test]
    fn inner_product_is_conjugate_linear_in_second_slot() {
        let m = full2(2);
        let mu = Measure::new(&m, MeasureKind::bernoulli(vec![0.5, 0.5])).unwrap();
        let f = CylFn::from_values(
            &m,
            1,
            vec![Complex64::new(0.0, 1.0), Complex64::new(2.0, 0.0)],
        )
        .unwrap();
        let g = CylFn::one();
        let fg = mu.inner(&m, &f, &g).unwrap();
        assert!((fg - Complex64::new(1.0, 0.5)).norm() < 1e-15);
        let gf = mu.inner(&m, &g, &f).unwrap();
        assert!((gf - fg.conj()).norm() < 1e-15);
    }
}
