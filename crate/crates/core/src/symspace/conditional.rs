//! Conditional measures of one-step preimage fibers.

use crate::error::{Error, Result};

use super::measure::Measure;
use super::model::ShiftModel;
use super::word::Word;

/// The system of conditional measures on the fibers `σ⁻¹(x)`, at one
/// quotient resolution.
///
/// At resolution `d`, each admissible word `w` of length `d` stands for a
/// point of the quotient, and its fiber carries one branch per letter `a`
/// with `a·w` admissible, weighted by `μ([a·w]) / Σ_b μ([b·w])`. The weights
/// of each fiber sum to one, and integrating them against the pushforward
/// `μ∘σ⁻¹` reconstructs the measure of any one-step-finer cylinder.
#[derive(Debug, Clone)]
pub struct ConditionalSystem {
    quotient_depth: usize,
    weights: Vec<Vec<(u8, f64)>>,
}

impl ConditionalSystem {
    /// Builds the fiber weights at quotient resolution `d`.
    ///
    /// Needs `d + 1` within the budget, since the weights read one-step-finer
    /// masses.
    pub fn new(model: &ShiftModel, measure: &Measure, d: usize) -> Result<Self> {
        if d + 1 > model.depth_budget() {
            return Err(Error::DepthRange {
                depth: d,
                operation: "fiber system",
                valid: format!("0..={}", model.depth_budget() - 1),
            });
        }
        let fine = measure.mass(d + 1)?;
        let mut weights = Vec::with_capacity(model.dim(d)?);
        for w in model.words(d)? {
            let branches: Vec<(u8, f64)> = model
                .prefix_letters(w)
                .into_iter()
                .map(|a| {
                    let idx = model
                        .index_of(&w.with_prefix(a))
                        .expect("prefix letters keep words admissible");
                    (a, fine[idx])
                })
                .collect();
            let total: f64 = branches.iter().map(|(_, m)| m).sum();
            weights.push(branches.into_iter().map(|(a, m)| (a, m / total)).collect());
        }
        Ok(ConditionalSystem {
            quotient_depth: d,
            weights,
        })
    }

    /// Resolution of the quotient this system was built at.
    pub fn quotient_depth(&self) -> usize {
        self.quotient_depth
    }

    /// Fiber weights `(letter, weight)` over the `i`-th quotient word.
    pub fn weights_at(&self, i: usize) -> &[(u8, f64)] {
        &self.weights[i]
    }

    /// Fiber weights over the quotient word `w`.
    pub fn weights_for(&self, model: &ShiftModel, w: &Word) -> Result<&[(u8, f64)]> {
        if w.len() != self.quotient_depth {
            return Err(Error::DimensionMismatch(format!(
                "fiber system is at resolution {}, asked about {w}",
                self.quotient_depth
            )));
        }
        let idx = model.index_of(w).ok_or_else(|| {
            Error::DimensionMismatch(format!("word {w} is not admissible in this model"))
        })?;
        Ok(&self.weights[idx])
    }

    /// Largest deviation in the measure-reconstruction identity.
    ///
    /// For every cylinder `B = [a·w]` one step finer than the quotient,
    /// the fiber weight of `a` over `w` times `(μ∘σ⁻¹)([w])` must equal
    /// `μ(B)`. Returns the worst absolute error.
    pub fn reconstruction_deviation(&self, model: &ShiftModel, measure: &Measure) -> Result<f64> {
        let d = self.quotient_depth;
        let pf = measure.pushforward_mass(model, 1, d)?;
        let fine = measure.mass(d + 1)?;
        let mut worst = 0.0f64;
        for (i, w) in model.words(d)?.iter().enumerate() {
            for &(a, weight) in &self.weights[i] {
                let idx = model
                    .index_of(&w.with_prefix(a))
                    .expect("prefix letters keep words admissible");
                worst = worst.max((weight * pf[i] - fine[idx]).abs());
            }
        }
        Ok(worst)
    }
}
