//! Shift model: alphabet, admissibility, and the cylinder depth budget.

use std::collections::HashMap;

use crate::error::{Error, Result};

use super::word::Word;

/// Hard cap on the basis size at any single depth.
///
/// Keeps accidental huge budgets from exhausting memory; the calculus is
/// meant for desk-scale models (a few thousand basis words).
const MAX_WORDS_PER_DEPTH: usize = 1 << 20;

/// A one-sided shift space with a finite cylinder resolution.
///
/// The model fixes an alphabet `{0, …, n-1}`, a relation saying which letter
/// pairs may be adjacent, and a depth budget `D`. Admissible words of length
/// `d` (for `0 ≤ d ≤ D`) are enumerated once, in lexicographic order, and
/// index the canonical basis of the depth-`d` cylinder space `V_d`.
#[derive(Debug, Clone)]
pub struct ShiftModel {
    alphabet: usize,
    admissible: Vec<bool>,
    depth_budget: usize,
    words: Vec<Vec<Word>>,
    index: Vec<HashMap<Word, usize>>,
}

impl ShiftModel {
    /// Builds the full shift on `alphabet` letters: every pair is admissible.
    pub fn full_shift(alphabet: usize, depth_budget: usize) -> Result<Self> {
        Self::with_admissibility(alphabet, &vec![true; alphabet * alphabet], depth_budget)
    }

    /// Builds a subshift of finite type from a row-major admissibility table.
    ///
    /// `admissible[a * alphabet + b]` says whether letter `b` may follow
    /// letter `a`. Every letter must have at least one admissible successor
    /// and one admissible predecessor, so that every admissible word extends
    /// in both directions.
    pub fn with_admissibility(
        alphabet: usize,
        admissible: &[bool],
        depth_budget: usize,
    ) -> Result<Self> {
        if alphabet < 2 {
            return Err(Error::InvalidModel(format!(
                "alphabet must have at least 2 letters, got {alphabet}"
            )));
        }
        if alphabet > u8::MAX as usize {
            return Err(Error::InvalidModel(format!(
                "alphabet larger than {} letters is not supported",
                u8::MAX
            )));
        }
        if depth_budget == 0 {
            return Err(Error::InvalidModel(
                "depth budget must be at least 1".into(),
            ));
        }
        if admissible.len() != alphabet * alphabet {
            return Err(Error::InvalidModel(format!(
                "admissibility table has {} entries, expected {}",
                admissible.len(),
                alphabet * alphabet
            )));
        }
        for a in 0..alphabet {
            if !(0..alphabet).any(|b| admissible[a * alphabet + b]) {
                return Err(Error::InvalidModel(format!(
                    "letter {a} has no admissible successor"
                )));
            }
            if !(0..alphabet).any(|b| admissible[b * alphabet + a]) {
                return Err(Error::InvalidModel(format!(
                    "letter {a} has no admissible predecessor"
                )));
            }
        }

        let mut model = ShiftModel {
            alphabet,
            admissible: admissible.to_vec(),
            depth_budget,
            words: Vec::with_capacity(depth_budget + 1),
            index: Vec::with_capacity(depth_budget + 1),
        };
        model.words.push(vec![Word::empty()]);
        for d in 1..=depth_budget {
            let mut next = Vec::new();
            if d == 1 {
                for a in 0..alphabet as u8 {
                    next.push(Word::new(vec![a]));
                }
            } else {
                for w in &model.words[d - 1] {
                    let last = *w.letters().last().expect("nonempty at depth >= 1");
                    for b in 0..alphabet as u8 {
                        if model.pair_admissible(last, b) {
                            let mut letters = w.letters().to_vec();
                            letters.push(b);
                            next.push(Word::new(letters));
                        }
                    }
                }
            }
            if next.len() > MAX_WORDS_PER_DEPTH {
                return Err(Error::InvalidModel(format!(
                    "depth {d} has {} admissible words, above the cap of {}",
                    next.len(),
                    MAX_WORDS_PER_DEPTH
                )));
            }
            model.words.push(next);
        }
        for list in &model.words {
            let map = list
                .iter()
                .enumerate()
                .map(|(i, w)| (w.clone(), i))
                .collect();
            model.index.push(map);
        }
        Ok(model)
    }

    /// A copy of this model with a different depth budget.
    pub fn with_depth(&self, depth_budget: usize) -> Result<Self> {
        Self::with_admissibility(self.alphabet, &self.admissible, depth_budget)
    }

    /// Number of alphabet letters.
    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    /// The cylinder depth budget `D`.
    pub fn depth_budget(&self) -> usize {
        self.depth_budget
    }

    /// Row-major admissibility table, as passed to the constructor.
    pub fn admissibility(&self) -> &[bool] {
        &self.admissible
    }

    /// Whether letter `b` may follow letter `a`.
    pub fn pair_admissible(&self, a: u8, b: u8) -> bool {
        self.admissible[a as usize * self.alphabet + b as usize]
    }

    /// Whether every adjacent pair in `w` is admissible.
    pub fn word_admissible(&self, w: &Word) -> bool {
        let letters = w.letters();
        if letters.iter().any(|&a| (a as usize) >= self.alphabet) {
            return false;
        }
        letters.windows(2).all(|p| self.pair_admissible(p[0], p[1]))
    }

    /// The admissible words of length `d`, in canonical (lexicographic) order.
    pub fn words(&self, d: usize) -> Result<&[Word]> {
        self.check_depth(d)?;
        Ok(&self.words[d])
    }

    /// Dimension of the depth-`d` cylinder space `V_d`.
    pub fn dim(&self, d: usize) -> Result<usize> {
        self.check_depth(d)?;
        Ok(self.words[d].len())
    }

    /// Position of `w` in the canonical basis at depth `w.len()`.
    pub fn index_of(&self, w: &Word) -> Option<usize> {
        self.index.get(w.len())?.get(w).copied()
    }

    /// Letters `a` such that `a · w` is admissible.
    ///
    /// For the empty word every letter qualifies. These are exactly the
    /// one-step preimage branches of the cylinder `[w]` under the shift.
    pub fn prefix_letters(&self, w: &Word) -> Vec<u8> {
        match w.first() {
            None => (0..self.alphabet as u8).collect(),
            Some(b) => (0..self.alphabet as u8)
                .filter(|&a| self.pair_admissible(a, b))
                .collect(),
        }
    }

    /// Number of one-step preimages of a point, if it is the same everywhere.
    ///
    /// The preimage count of `x` under the shift depends only on the first
    /// letter of `x`. When the count varies with that letter the model has no
    /// single branching number and this returns an error listing the counts.
    pub fn fiber_cardinality(&self) -> Result<usize> {
        let counts: Vec<usize> = (0..self.alphabet as u8)
            .map(|b| {
                (0..self.alphabet as u8)
                    .filter(|&a| self.pair_admissible(a, b))
                    .count()
            })
            .collect();
        if counts.windows(2).all(|c| c[0] == c[1]) {
            Ok(counts[0])
        } else {
            Err(Error::VariableFiberCardinality(format!(
                "preimage counts per leading letter: {counts:?}"
            )))
        }
    }

    /// Errors unless `d ≤ D`.
    pub fn check_depth(&self, d: usize) -> Result<()> {
        if d > self.depth_budget {
            Err(Error::DepthOverflow {
                requested: d,
                budget: self.depth_budget,
            })
        } else {
            Ok(())
        }
    }
}
