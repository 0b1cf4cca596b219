//! Cylinder functions: complex values on the admissible words of one depth.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::model::ShiftModel;
use super::word::Word;

/// A depth-`d` cylinder function: one complex value per admissible word of
/// length `d`, in canonical basis order.
///
/// The JSON form is `{"depth": d, "values": [[re, im], …]}` with values in
/// canonical order. Deserialized functions are validated against a model the
/// first time they are used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylFn {
    depth: usize,
    #[serde(with = "complex_pairs")]
    values: Vec<Complex64>,
}

/// Serializes complex vectors as `[re, im]` pairs.
mod complex_pairs {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect())
    }
}

impl CylFn {
    /// Builds a cylinder function from explicit values in canonical order.
    pub fn from_values(model: &ShiftModel, depth: usize, values: Vec<Complex64>) -> Result<Self> {
        let dim = model.dim(depth)?;
        if values.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "depth {depth} needs {dim} values, got {}",
                values.len()
            )));
        }
        Ok(CylFn { depth, values })
    }

    /// Builds a cylinder function by evaluating `f` on each basis word.
    pub fn from_fn(
        model: &ShiftModel,
        depth: usize,
        mut f: impl FnMut(&Word) -> Complex64,
    ) -> Result<Self> {
        let values = model.words(depth)?.iter().map(|w| f(w)).collect();
        Ok(CylFn { depth, values })
    }

    /// The constant function, at depth 0.
    pub fn constant(z: Complex64) -> Self {
        CylFn {
            depth: 0,
            values: vec![z],
        }
    }

    /// The constant function 1, at depth 0.
    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    /// The indicator of the cylinder `[w]`, at depth `w.len()`.
    pub fn indicator(model: &ShiftModel, w: &Word) -> Result<Self> {
        let dim = model.dim(w.len())?;
        let idx = model.index_of(w).ok_or_else(|| {
            Error::DimensionMismatch(format!("word {w} is not admissible in this model"))
        })?;
        let mut values = vec![Complex64::ZERO; dim];
        values[idx] = Complex64::ONE;
        Ok(CylFn {
            depth: w.len(),
            values,
        })
    }

    /// A real-valued function with entries drawn uniformly from `[lo, hi]`.
    pub fn random_real(
        model: &ShiftModel,
        depth: usize,
        lo: f64,
        hi: f64,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        Self::from_fn(model, depth, |_| {
            Complex64::new(rng.random_range(lo..=hi), 0.0)
        })
    }

    /// A complex-valued function with real and imaginary parts in `[-1, 1]`.
    pub fn random_complex(model: &ShiftModel, depth: usize, rng: &mut impl Rng) -> Result<Self> {
        Self::from_fn(model, depth, |_| {
            Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
        })
    }

    /// Depth of the function.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Values in canonical basis order.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Errors unless the value count matches the model's basis at this depth.
    ///
    /// Used to vet functions that arrived via deserialization.
    pub fn validate(&self, model: &ShiftModel) -> Result<()> {
        let dim = model.dim(self.depth)?;
        if self.values.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "cylinder function claims depth {} but carries {} values, expected {dim}",
                self.depth,
                self.values.len()
            )));
        }
        Ok(())
    }

    /// Value on the cylinder `[w]`, for any admissible `w` at least as deep
    /// as the function.
    pub fn value_at(&self, model: &ShiftModel, w: &Word) -> Result<Complex64> {
        if w.len() < self.depth {
            return Err(Error::DimensionMismatch(format!(
                "word {w} is shorter than the function depth {}",
                self.depth
            )));
        }
        let idx = model.index_of(&w.prefix(self.depth)).ok_or_else(|| {
            Error::DimensionMismatch(format!("word {w} is not admissible in this model"))
        })?;
        Ok(self.values[idx])
    }

    /// The same function expressed at a deeper resolution.
    ///
    /// Promotion is exact: the value at a word is the value at its prefix.
    pub fn promote(&self, model: &ShiftModel, depth: usize) -> Result<Self> {
        self.validate(model)?;
        if depth < self.depth {
            return Err(Error::DepthRange {
                depth,
                operation: "promote",
                valid: format!("{}..={}", self.depth, model.depth_budget()),
            });
        }
        if depth == self.depth {
            return Ok(self.clone());
        }
        let values = model
            .words(depth)?
            .iter()
            .map(|w| {
                let idx = model
                    .index_of(&w.prefix(self.depth))
                    .expect("prefix of an admissible word is admissible");
                self.values[idx]
            })
            .collect();
        Ok(CylFn { depth, values })
    }

    /// One exact depth-reduction step, if the values only depend on the
    /// shorter prefix.
    fn try_lower(&self, model: &ShiftModel, tol: f64) -> Option<Self> {
        if self.depth == 0 {
            return None;
        }
        let lower_dim = model.dim(self.depth - 1).ok()?;
        let mut lowered = vec![None; lower_dim];
        for (w, &v) in model.words(self.depth).ok()?.iter().zip(&self.values) {
            let parent = model
                .index_of(&w.prefix(self.depth - 1))
                .expect("prefix admissible");
            match lowered[parent] {
                None => lowered[parent] = Some(v),
                Some(seen) => {
                    if (seen - v).norm() > tol {
                        return None;
                    }
                }
            }
        }
        let values = lowered
            .into_iter()
            .map(|v| v.expect("every shorter word has an admissible extension"))
            .collect();
        Some(CylFn {
            depth: self.depth - 1,
            values,
        })
    }

    /// The lowest-depth exact representation of this function.
    ///
    /// Values are compared with absolute tolerance `tol`; a function is only
    /// lowered when it is constant on every refinement, so the result
    /// represents the same function.
    pub fn reduce_depth(&self, model: &ShiftModel, tol: f64) -> Self {
        let mut current = self.clone();
        while let Some(lower) = current.try_lower(model, tol) {
            current = lower;
        }
        current
    }

    /// Pointwise product, at the maximum of the two depths.
    pub fn pointwise_mul(&self, other: &Self, model: &ShiftModel) -> Result<Self> {
        let depth = self.depth.max(other.depth);
        let a = self.promote(model, depth)?;
        let b = other.promote(model, depth)?;
        let values = a.values.iter().zip(&b.values).map(|(x, y)| x * y).collect();
        Ok(CylFn { depth, values })
    }

    /// Pointwise sum, at the maximum of the two depths.
    pub fn add(&self, other: &Self, model: &ShiftModel) -> Result<Self> {
        let depth = self.depth.max(other.depth);
        let a = self.promote(model, depth)?;
        let b = other.promote(model, depth)?;
        let values = a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect();
        Ok(CylFn { depth, values })
    }

    /// Pointwise difference, at the maximum of the two depths.
    pub fn sub(&self, other: &Self, model: &ShiftModel) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)), model)
    }

    /// The function scaled by a complex constant.
    pub fn scale(&self, z: Complex64) -> Self {
        CylFn {
            depth: self.depth,
            values: self.values.iter().map(|v| v * z).collect(),
        }
    }

    /// Complex conjugate.
    pub fn conj(&self) -> Self {
        CylFn {
            depth: self.depth,
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }

    /// Pointwise squared modulus, as a real-valued function.
    pub fn abs_squared(&self) -> Self {
        CylFn {
            depth: self.depth,
            values: self
                .values
                .iter()
                .map(|v| Complex64::new(v.norm_sqr(), 0.0))
                .collect(),
        }
    }

    /// Pointwise square root of a nonnegative real function.
    ///
    /// Imaginary parts below `1e-12` and real parts above `-1e-12` are
    /// treated as roundoff and clamped; anything worse is an error.
    pub fn sqrt_nonneg(&self, model: &ShiftModel) -> Result<Self> {
        let words = model.words(self.depth)?;
        let mut values = Vec::with_capacity(self.values.len());
        for (w, v) in words.iter().zip(&self.values) {
            if v.im.abs() > 1e-12 || v.re < -1e-12 {
                return Err(Error::NotPositive {
                    context: "square root requires a nonnegative real function",
                    value: if v.im.abs() > 1e-12 { v.im } else { v.re },
                    word: w.to_string(),
                });
            }
            values.push(Complex64::new(v.re.max(0.0).sqrt(), 0.0));
        }
        Ok(CylFn {
            depth: self.depth,
            values,
        })
    }

    /// Pointwise reciprocal; errors on values within `1e-300` of zero.
    pub fn recip(&self, model: &ShiftModel) -> Result<Self> {
        let words = model.words(self.depth)?;
        let mut values = Vec::with_capacity(self.values.len());
        for (w, v) in words.iter().zip(&self.values) {
            if v.norm() < 1e-300 {
                return Err(Error::NotPositive {
                    context: "reciprocal of a zero value",
                    value: v.re,
                    word: w.to_string(),
                });
            }
            values.push(v.finv());
        }
        Ok(CylFn {
            depth: self.depth,
            values,
        })
    }

    /// Composition with the shift: `x ↦ f(σx)`, one depth higher.
    ///
    /// The value at `a · w` is the value at `w`, so this is exact but costs
    /// one unit of depth budget.
    pub fn precompose_shift(&self, model: &ShiftModel) -> Result<Self> {
        self.validate(model)?;
        let depth = self.depth + 1;
        let values = model
            .words(depth)?
            .iter()
            .map(|u| {
                let idx = model
                    .index_of(&u.tail().prefix(self.depth))
                    .expect("tail of an admissible word is admissible");
                self.values[idx]
            })
            .collect();
        Ok(CylFn { depth, values })
    }

    /// `n`-fold composition with the shift: `x ↦ f(σⁿx)`.
    pub fn precompose_shift_pow(&self, model: &ShiftModel, n: usize) -> Result<Self> {
        let mut current = self.clone();
        for _ in 0..n {
            current = current.precompose_shift(model)?;
        }
        Ok(current)
    }

    /// Largest modulus over all words.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Sup-norm distance, after promotion to a common depth.
    pub fn sup_distance(&self, other: &Self, model: &ShiftModel) -> Result<f64> {
        Ok(self.sub(other, model)?.sup_norm())
    }

    /// Largest absolute imaginary part; zero means real-valued.
    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    /// Real parts, after checking the function is real to within `tol`.
    pub fn real_values(&self, tol: f64) -> Result<Vec<f64>> {
        if self.max_imag() > tol {
            return Err(Error::NotPositive {
                context: "expected a real-valued function",
                value: self.max_imag(),
                word: "(imaginary part)".into(),
            });
        }
        Ok(self.values.iter().map(|v| v.re).collect())
    }
}
