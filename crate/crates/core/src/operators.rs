//! Composition and transfer operators on cylinder spaces.
//!
//! Operators here are linear maps between two cylinder depths, carried both
//! as evaluation formulas and as dense matrices in the canonical bases. The
//! depth bookkeeping is explicit: composing with the shift raises depth by
//! one, transfer-type operators lower it by one, and every constructor
//! states its `in_depth → out_depth` signature. Identity checks compare
//! matrices in the operator norm induced by the sup norm (largest absolute
//! row sum).
//!
//! The measure enters through two distinct one-step averages:
//!
//! * the adjoint `S*` of the composition operator, which weights preimage
//!   branches by `μ([a·w]) / μ([w])`, and
//! * the fiber transfer `R`, which weights them by the conditional fiber
//!   measures `μ([a·w]) / Σ_b μ([b·w])`.
//!
//! The two agree exactly when the measure is shift-invariant; in general
//! `M_ρ R = S*` where `ρ` is the backward Radon-Nikodym derivative carried
//! by [`RnData`].

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::symspace::{ConditionalSystem, CylFn, Measure, ShiftModel};

/// A linear map from depth `in_depth` to depth `out_depth` cylinder
/// functions, materialized as a dense matrix in the canonical bases.
#[derive(Debug, Clone)]
pub struct DepthOp {
    name: String,
    in_depth: usize,
    out_depth: usize,
    matrix: CMat,
}

/// Converts a cylinder function at exactly the expected depth to a vector.
fn to_cvec(f: &CylFn) -> CVec {
    CVec::from_column_slice(f.values())
}

/// Wraps a vector as a cylinder function at the given depth.
fn to_cylfn(model: &ShiftModel, depth: usize, v: &CVec) -> Result<CylFn> {
    CylFn::from_values(model, depth, v.iter().copied().collect())
}

impl DepthOp {
    /// Materializes a formula into a matrix by evaluating it on every basis
    /// vector of the input depth.
    ///
    /// The formula may return values at a shallower depth than `out_depth`
    /// (they are promoted exactly); returning a deeper one is an error.
    pub fn from_fn(
        model: &ShiftModel,
        name: impl Into<String>,
        in_depth: usize,
        out_depth: usize,
        mut f: impl FnMut(&CylFn) -> Result<CylFn>,
    ) -> Result<Self> {
        let dim_in = model.dim(in_depth)?;
        let dim_out = model.dim(out_depth)?;
        let mut matrix = CMat::zeros(dim_out, dim_in);
        for j in 0..dim_in {
            let mut values = vec![Complex64::ZERO; dim_in];
            values[j] = Complex64::ONE;
            let basis = CylFn::from_values(model, in_depth, values)?;
            let image = f(&basis)?.promote(model, out_depth)?;
            for (i, v) in image.values().iter().enumerate() {
                matrix[(i, j)] = *v;
            }
        }
        Ok(DepthOp {
            name: name.into(),
            in_depth,
            out_depth,
            matrix,
        })
    }

    /// Builds an operator directly from its matrix.
    pub fn from_matrix(
        model: &ShiftModel,
        name: impl Into<String>,
        in_depth: usize,
        out_depth: usize,
        matrix: DMatrix<Complex64>,
    ) -> Result<Self> {
        if matrix.nrows() != model.dim(out_depth)? || matrix.ncols() != model.dim(in_depth)? {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, expected {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                model.dim(out_depth)?,
                model.dim(in_depth)?
            )));
        }
        Ok(DepthOp {
            name: name.into(),
            in_depth,
            out_depth,
            matrix,
        })
    }

    /// The identity on `V_depth`.
    pub fn identity(model: &ShiftModel, depth: usize) -> Result<Self> {
        let dim = model.dim(depth)?;
        Ok(DepthOp {
            name: "I".into(),
            in_depth: depth,
            out_depth: depth,
            matrix: linalg::identity(dim),
        })
    }

    /// The exact inclusion `V_from ⊂ V_to`.
    pub fn promotion(model: &ShiftModel, from: usize, to: usize) -> Result<Self> {
        DepthOp::from_fn(model, format!("incl[{from}->{to}]"), from, to, |f| {
            f.promote(model, to)
        })
    }

    /// Display name.
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Input depth.
    pub fn in_depth(&self) -> usize {
        self.in_depth
    }

    /// Output depth.
    pub fn out_depth(&self) -> usize {
        self.out_depth
    }

    /// Matrix in canonical bases; rows index the output depth.
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Applies the operator; shallower inputs are promoted exactly.
    pub fn apply(&self, model: &ShiftModel, f: &CylFn) -> Result<CylFn> {
        let x = f.promote(model, self.in_depth)?;
        let y = &self.matrix * to_cvec(&x);
        to_cylfn(model, self.out_depth, &y)
    }

    /// Composition `self ∘ inner`, inserting an exact promotion when the
    /// inner output is shallower than this operator's input.
    pub fn compose(&self, model: &ShiftModel, inner: &DepthOp) -> Result<DepthOp> {
        let matrix = if inner.out_depth == self.in_depth {
            &self.matrix * &inner.matrix
        } else if inner.out_depth < self.in_depth {
            let glue = DepthOp::promotion(model, inner.out_depth, self.in_depth)?;
            &self.matrix * (&glue.matrix * &inner.matrix)
        } else {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose {} (in {}) after {} (out {})",
                self.name, self.in_depth, inner.name, inner.out_depth
            )));
        };
        Ok(DepthOp {
            name: format!("{} ∘ {}", self.name, inner.name),
            in_depth: inner.in_depth,
            out_depth: self.out_depth,
            matrix,
        })
    }

    /// The adjoint with respect to the `μ`-weighted inner products on both
    /// depths: `A* = W_in⁻¹ A† W_out`.
    pub fn adjoint(&self, model: &ShiftModel, measure: &Measure) -> Result<DepthOp> {
        let w_in = measure.mass(self.in_depth)?;
        let w_out = measure.mass(self.out_depth)?;
        let _ = model.dim(self.in_depth)?;
        let mut matrix = self.matrix.adjoint();
        for i in 0..matrix.nrows() {
            for j in 0..matrix.ncols() {
                matrix[(i, j)] *= Complex64::new(w_out[j] / w_in[i], 0.0);
            }
        }
        Ok(DepthOp {
            name: format!("{}*", self.name),
            in_depth: self.out_depth,
            out_depth: self.in_depth,
            matrix,
        })
    }

    /// Entrywise difference; depths must match.
    pub fn sub(&self, other: &DepthOp) -> Result<DepthOp> {
        if self.in_depth != other.in_depth || self.out_depth != other.out_depth {
            return Err(Error::DimensionMismatch(format!(
                "cannot subtract {} ({}->{}) from {} ({}->{})",
                other.name,
                other.in_depth,
                other.out_depth,
                self.name,
                self.in_depth,
                self.out_depth
            )));
        }
        Ok(DepthOp {
            name: format!("{} - {}", self.name, other.name),
            in_depth: self.in_depth,
            out_depth: self.out_depth,
            matrix: &self.matrix - &other.matrix,
        })
    }

    /// Operator norm induced by the sup norm (largest absolute row sum).
    pub fn op_norm(&self) -> f64 {
        linalg::op_inf_norm(&self.matrix)
    }

    /// `‖self - other‖` in the induced operator norm.
    pub fn deviation_from(&self, other: &DepthOp) -> Result<f64> {
        Ok(self.sub(other)?.op_norm())
    }

    /// `‖self - I‖`; the operator must be square in depth.
    pub fn deviation_from_identity(&self, model: &ShiftModel) -> Result<f64> {
        self.deviation_from(&DepthOp::identity(model, self.in_depth)?)
    }

    /// `‖self∘self - self‖`, the failure of idempotence.
    pub fn projection_deviation(&self, model: &ShiftModel) -> Result<f64> {
        self.compose(model, self)?.deviation_from(self)
    }

    /// `‖self - self*‖`, the failure of self-adjointness.
    pub fn self_adjoint_deviation(&self, model: &ShiftModel, measure: &Measure) -> Result<f64> {
        self.deviation_from(&self.adjoint(model, measure)?)
    }

    /// Numerical rank, with singular values measured in the weighted metric.
    pub fn rank(&self, measure: &Measure, tol: f64) -> Result<usize> {
        let w_out = measure.mass(self.out_depth)?;
        let w_in = measure.mass(self.in_depth)?;
        // Rank is metric-independent; the scaling just keeps singular
        // values O(1) so the absolute threshold is meaningful.
        let tilde = linalg::to_tilde(&self.matrix, w_out);
        let mut scaled = tilde.clone();
        for j in 0..scaled.ncols() {
            let s = Complex64::new(w_in[j].sqrt(), 0.0);
            for i in 0..scaled.nrows() {
                scaled[(i, j)] /= s;
            }
        }
        Ok(linalg::rank(&scaled, tol))
    }

    /// How far the operator is from being isometric `(V_in, μ) → (V_out, μ)`.
    ///
    /// Returns `‖Ã†Ã - I‖_max` where `Ã` is the matrix in the weighted
    /// orthonormal coordinates of both spaces, so a `0` means
    /// `⟨Af, Ag⟩ = ⟨f, g⟩` for all inputs.
    pub fn isometry_deviation(&self, measure: &Measure) -> Result<f64> {
        let w_out = measure.mass(self.out_depth)?;
        let w_in = measure.mass(self.in_depth)?;
        let mut tilde = linalg::to_tilde(&self.matrix, w_out);
        for j in 0..tilde.ncols() {
            let s = Complex64::new(w_in[j].sqrt(), 0.0);
            for i in 0..tilde.nrows() {
                tilde[(i, j)] /= s;
            }
        }
        let gram = tilde.adjoint() * &tilde;
        Ok(linalg::max_abs(&(gram - linalg::identity(self.matrix.ncols()))))
    }
}

/// `f ↦ f∘σ` as a formula; exact, one depth deeper.
pub fn apply_shift(model: &ShiftModel, f: &CylFn) -> Result<CylFn> {
    f.precompose_shift(model)
}

/// Adjoint of the shift composition as a formula:
/// `(S*g)(w) = Σ_a g(a·w) · μ([a·w]) / μ([w])`, one depth shallower.
pub fn apply_shift_adjoint(model: &ShiftModel, measure: &Measure, g: &CylFn) -> Result<CylFn> {
    let d = g.depth();
    if d == 0 {
        return Err(Error::DepthRange {
            depth: 0,
            operation: "shift adjoint",
            valid: format!("1..={}", model.depth_budget()),
        });
    }
    let fine_mass = measure.mass(d)?;
    let coarse_mass = measure.mass(d - 1)?;
    let mut acc = vec![Complex64::ZERO; model.dim(d - 1)?];
    for ((u, &v), &m) in model.words(d)?.iter().zip(g.values()).zip(fine_mass) {
        let idx = model
            .index_of(&u.tail())
            .expect("tail of an admissible word is admissible");
        acc[idx] += v * m;
    }
    for (a, &m) in acc.iter_mut().zip(coarse_mass) {
        *a /= m;
    }
    CylFn::from_values(model, d - 1, acc)
}

/// Fiber-averaged transfer as a formula:
/// `(Rg)(w) = Σ_a g(a·w) · μ([a·w]) / Σ_b μ([b·w])`, one depth shallower.
///
/// `R1 = 1` holds by construction for every quasi-invariant measure.
pub fn apply_rokhlin(model: &ShiftModel, measure: &Measure, g: &CylFn) -> Result<CylFn> {
    let d = g.depth();
    if d == 0 {
        return Err(Error::DepthRange {
            depth: 0,
            operation: "fiber transfer",
            valid: format!("1..={}", model.depth_budget()),
        });
    }
    let fine_mass = measure.mass(d)?;
    let mut acc = vec![Complex64::ZERO; model.dim(d - 1)?];
    let mut pf = vec![0.0; model.dim(d - 1)?];
    for ((u, &v), &m) in model.words(d)?.iter().zip(g.values()).zip(fine_mass) {
        let idx = model
            .index_of(&u.tail())
            .expect("tail of an admissible word is admissible");
        acc[idx] += v * m;
        pf[idx] += m;
    }
    for (a, &m) in acc.iter_mut().zip(&pf) {
        *a /= m;
    }
    CylFn::from_values(model, d - 1, acc)
}

/// Composition operator `S: f ↦ f∘σ`, depth `in_depth → in_depth + 1`.
pub fn compose_op(model: &ShiftModel, in_depth: usize) -> Result<DepthOp> {
    model.check_depth(in_depth + 1)?;
    DepthOp::from_fn(model, "S", in_depth, in_depth + 1, |f| apply_shift(model, f))
}

/// Adjoint `S*` of the composition operator, depth `in_depth → in_depth - 1`.
pub fn adjoint_op(model: &ShiftModel, measure: &Measure, in_depth: usize) -> Result<DepthOp> {
    if in_depth == 0 {
        return Err(Error::DepthRange {
            depth: 0,
            operation: "shift adjoint",
            valid: format!("1..={}", model.depth_budget()),
        });
    }
    DepthOp::from_fn(model, "S*", in_depth, in_depth - 1, |g| {
        apply_shift_adjoint(model, measure, g)
    })
}

/// Fiber transfer `R`, depth `in_depth → in_depth - 1`.
///
/// Weights each preimage branch by the conditional measures of
/// [`ConditionalSystem`]; see the module docs for how `R` relates to `S*`.
pub fn rokhlin_transfer(model: &ShiftModel, measure: &Measure, in_depth: usize) -> Result<DepthOp> {
    if in_depth == 0 {
        return Err(Error::DepthRange {
            depth: 0,
            operation: "fiber transfer",
            valid: format!("1..={}", model.depth_budget()),
        });
    }
    // Built once so the operator matches the published conditional weights.
    let system = ConditionalSystem::new(model, measure, in_depth - 1)?;
    let fine_words = model.words(in_depth)?;
    let dim_out = model.dim(in_depth - 1)?;
    let dim_in = fine_words.len();
    let mut matrix = CMat::zeros(dim_out, dim_in);
    for (i, w) in model.words(in_depth - 1)?.iter().enumerate() {
        for &(a, weight) in system.weights_at(i) {
            let j = model
                .index_of(&w.with_prefix(a))
                .expect("prefix letters keep words admissible");
            matrix[(i, j)] = Complex64::new(weight, 0.0);
        }
    }
    DepthOp::from_matrix(model, "R", in_depth, in_depth - 1, matrix)
}

/// Multiplication by `t`, depth `in_depth → max(in_depth, t.depth())`.
pub fn multiplication_op(model: &ShiftModel, t: &CylFn, in_depth: usize) -> Result<DepthOp> {
    let out = in_depth.max(t.depth());
    DepthOp::from_fn(model, "M", in_depth, out, |f| f.pointwise_mul(t, model))
}

/// Weighted composition `f ↦ t · (f∘σ)`, depth
/// `in_depth → max(in_depth + 1, t.depth())`.
pub fn weighted_compose(model: &ShiftModel, t: &CylFn, in_depth: usize) -> Result<DepthOp> {
    let out = (in_depth + 1).max(t.depth());
    model.check_depth(out)?;
    DepthOp::from_fn(model, "S_t", in_depth, out, |f| {
        apply_shift(model, f)?.pointwise_mul(t, model)
    })
}

/// Adjoint of the weighted composition: `g ↦ S*(t̅ · g)`, depth
/// `in_depth → max(in_depth, t.depth()) - 1`.
pub fn weighted_adjoint(
    model: &ShiftModel,
    measure: &Measure,
    t: &CylFn,
    in_depth: usize,
) -> Result<DepthOp> {
    let lifted = in_depth.max(t.depth());
    if lifted == 0 {
        return Err(Error::DepthRange {
            depth: 0,
            operation: "weighted adjoint",
            valid: format!("1..={}", model.depth_budget()),
        });
    }
    let conj_t = t.conj();
    DepthOp::from_fn(model, "S_t*", in_depth, lifted - 1, |g| {
        apply_shift_adjoint(model, measure, &g.pointwise_mul(&conj_t, model)?)
    })
}

/// The conditional expectation onto shift-pulled-back functions, computed
/// through the fiber measures: `E = S ∘ R`, depth `in_depth → in_depth`.
///
/// Works for every quasi-invariant measure, invariant or not, and is a
/// self-adjoint projection with range `{g∘σ}`.
pub fn fiber_expectation(model: &ShiftModel, measure: &Measure, in_depth: usize) -> Result<DepthOp> {
    let r = rokhlin_transfer(model, measure, in_depth)?;
    let s = compose_op(model, in_depth - 1)?;
    let mut e = s.compose(model, &r)?;
    e.name = "E".into();
    Ok(e)
}

/// Conditional expectation in product form.
///
/// With `phi = None` this is `S S*`, which is the conditional expectation
/// exactly when the measure is shift-invariant; non-invariant measures are
/// rejected. With a Markovian weight `phi` it is `S_√φ S_√φ*`, the
/// projection onto `√φ · {g∘σ}`; passing the forward derivative `ω` of a
/// quasi-invariant measure recovers the conditional expectation there.
pub fn cond_expect(
    model: &ShiftModel,
    measure: &Measure,
    phi: Option<&CylFn>,
    in_depth: usize,
    tol: f64,
) -> Result<DepthOp> {
    match phi {
        None => {
            let dev = measure.invariance_deviation(model)?;
            if dev > tol {
                return Err(Error::NotInvariant {
                    deviation: dev,
                    operation: "conditional expectation in S S* form",
                });
            }
            if in_depth == 0 {
                return Err(Error::DepthRange {
                    depth: 0,
                    operation: "conditional expectation",
                    valid: format!("1..={}", model.depth_budget()),
                });
            }
            let sstar = adjoint_op(model, measure, in_depth)?;
            let s = compose_op(model, in_depth - 1)?;
            let mut e = s.compose(model, &sstar)?;
            e.name = "E".into();
            Ok(e)
        }
        Some(phi) => {
            if in_depth < phi.depth().max(1) {
                return Err(Error::DepthRange {
                    depth: in_depth,
                    operation: "conditional expectation with a weight",
                    valid: format!("{}..={}", phi.depth().max(1), model.depth_budget()),
                });
            }
            let lifted = phi.promote(model, phi.depth().max(1))?;
            let averaged = apply_shift_adjoint(model, measure, &lifted)?;
            let dev = averaged.sup_distance(&CylFn::one(), model)?;
            if dev > tol {
                return Err(Error::NotMarkovian {
                    deviation: dev,
                    tolerance: tol,
                });
            }
            let root = phi.sqrt_nonneg(model)?;
            let sphi_star = weighted_adjoint(model, measure, &root, in_depth)?;
            let sphi = weighted_compose(model, &root, in_depth - 1)?;
            let mut e = sphi.compose(model, &sphi_star)?;
            e.name = "E_phi".into();
            Ok(e)
        }
    }
}

/// Radon-Nikodym data of a quasi-invariant measure.
///
/// `rho_n` is the derivative of the pushforward `μ∘σ⁻ⁿ` with respect to
/// `μ`, computed from pushforward masses at the deepest computable
/// resolution and then reduced to its exact minimal depth. `omega` is the
/// forward derivative; it satisfies `ω · (ρ∘σ) = 1` pointwise and is
/// measurable with respect to the one-step-coarser algebra.
#[derive(Debug, Clone)]
pub struct RnData {
    rho_n: Vec<CylFn>,
    omega: CylFn,
}

impl RnData {
    /// Backward derivative `ρ = ρ_1`.
    pub fn rho(&self) -> &CylFn {
        &self.rho_n[0]
    }

    /// Forward derivative `ω = 1 / (ρ∘σ)`.
    pub fn omega(&self) -> &CylFn {
        &self.omega
    }

    /// Largest pushforward order carried.
    pub fn n_max(&self) -> usize {
        self.rho_n.len()
    }

    /// Backward derivative of order `n`, for `1 ≤ n ≤ n_max`.
    pub fn rho_order(&self, n: usize) -> Result<&CylFn> {
        if n == 0 || n > self.rho_n.len() {
            return Err(Error::DepthRange {
                depth: n,
                operation: "backward derivative order",
                valid: format!("1..={}", self.rho_n.len()),
            });
        }
        Ok(&self.rho_n[n - 1])
    }

    /// Forward derivative of order `n`: `ω_n = (1/ρ_n)∘σⁿ`, the density
    /// implementing `∫ (f∘σⁿ) ω_n dμ = ∫ f dμ`.
    pub fn omega_order(&self, model: &ShiftModel, n: usize) -> Result<CylFn> {
        let rho = self.rho_order(n)?;
        rho.recip(model)?.precompose_shift_pow(model, n)
    }

    /// Worst deviation in the chain rule
    /// `ρ_{n+m} = (dμ∘σ⁻⁽ⁿ⁺ᵐ⁾ / dμ∘σ⁻ⁿ) · ρ_n` over all orders carried.
    ///
    /// The middle factor is a derivative of pushforward against pushforward,
    /// with no shift applied to either; this is the form that survives
    /// truncation-free. Compare [`RnData::shifted_cocycle_deviation`].
    pub fn chain_rule_deviation(&self, model: &ShiftModel, measure: &Measure) -> Result<f64> {
        let budget = model.depth_budget();
        let mut worst = 0.0f64;
        for n in 1..self.rho_n.len() {
            for m in 1..=(self.rho_n.len() - n) {
                let depth = budget - (n + m);
                let pf_nm = measure.pushforward_mass(model, n + m, depth)?;
                let pf_n = measure.pushforward_mass(model, n, depth)?;
                let mass = measure.mass(depth)?;
                let lhs = self.rho_order(n + m)?.promote(model, depth)?;
                for (((&a, &b), &m0), l) in
                    pf_nm.iter().zip(&pf_n).zip(mass).zip(lhs.values())
                {
                    let rhs = (a / b) * (b / m0);
                    worst = worst.max((l.re - rhs).abs().max(l.im.abs()));
                }
            }
        }
        Ok(worst)
    }

    /// Worst deviation in the shifted cocycle form
    /// `ρ_{n+m}(x) = ρ_m(σⁿx) · ρ_n(x)`.
    ///
    /// This identity can genuinely fail for non-invariant measures, because
    /// `ρ_m∘σⁿ` is not the derivative of pushforward against pushforward.
    /// Reported for diagnosis, never asserted.
    pub fn shifted_cocycle_deviation(&self, model: &ShiftModel) -> Result<f64> {
        let mut worst = 0.0f64;
        for n in 1..self.rho_n.len() {
            for m in 1..=(self.rho_n.len() - n) {
                let shifted = self.rho_order(m)?.precompose_shift_pow(model, n);
                let shifted = match shifted {
                    Ok(s) => s,
                    // Out of budget at this order; skip the pair.
                    Err(Error::DepthOverflow { .. }) => continue,
                    Err(e) => return Err(e),
                };
                let rhs = shifted.pointwise_mul(self.rho_order(n)?, model)?;
                worst = worst.max(self.rho_order(n + m)?.sup_distance(&rhs, model)?);
            }
        }
        Ok(worst)
    }
}

/// Computes backward derivatives up to order `n_max` and the forward
/// derivative, all from pushforward masses.
pub fn rn_data(model: &ShiftModel, measure: &Measure, n_max: usize) -> Result<RnData> {
    let budget = model.depth_budget();
    if n_max == 0 || n_max >= budget {
        return Err(Error::DepthRange {
            depth: n_max,
            operation: "pushforward order",
            valid: format!("1..={}", budget - 1),
        });
    }
    let mut rho_n = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let depth = budget - n;
        let pf = measure.pushforward_mass(model, n, depth)?;
        let mass = measure.mass(depth)?;
        let values = pf
            .iter()
            .zip(mass)
            .map(|(p, m)| Complex64::new(p / m, 0.0))
            .collect();
        let rho = CylFn::from_values(model, depth, values)?.reduce_depth(model, 1e-12);
        rho_n.push(rho);
    }
    let omega = rho_n[0].recip(model)?.precompose_shift(model)?;
    Ok(RnData { rho_n, omega })
}

/// Deviations between the fiber transfer and the shift adjoint, maximized
/// over every computable input depth.
#[derive(Debug, Clone)]
pub struct TransferIdentityReport {
    /// `max_d ‖R - S*‖`; zero exactly for shift-invariant measures.
    pub rokhlin_vs_adjoint: f64,
    /// `max_d ‖M_ρ R - S*‖`; zero for every quasi-invariant measure.
    pub weighted_rokhlin_vs_adjoint: f64,
}

/// Compares `R` with `S*` at every depth `1..=D`, and `M_ρ R` with `S*` at
/// every depth where the output algebra resolves `ρ`.
pub fn check_transfer_identities(
    model: &ShiftModel,
    measure: &Measure,
) -> Result<TransferIdentityReport> {
    let rn = rn_data(model, measure, 1)?;
    let mut plain = 0.0f64;
    let mut weighted = 0.0f64;
    for d in 1..=model.depth_budget() {
        let r = rokhlin_transfer(model, measure, d)?;
        let sstar = adjoint_op(model, measure, d)?;
        plain = plain.max(r.deviation_from(&sstar)?);
        if d > rn.rho().depth() {
            let m_rho = multiplication_op(model, rn.rho(), d - 1)?;
            let weighted_r = m_rho.compose(model, &r)?;
            weighted = weighted.max(weighted_r.deviation_from(&sstar)?);
        }
    }
    Ok(TransferIdentityReport {
        rokhlin_vs_adjoint: plain,
        weighted_rokhlin_vs_adjoint: weighted,
    })
}

/// Worst pull-out deviation `‖A((f∘σ)·g) - f·A(g)‖_sup` over random pairs.
///
/// `A` must lower depth by one; `f` is drawn at the output depth and `g` at
/// the input depth, both with entries in `[-1, 1]` plus unit imaginary
/// ranges.
pub fn pullout_deviation(
    model: &ShiftModel,
    op: &DepthOp,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    if op.out_depth() + 1 != op.in_depth() {
        return Err(Error::DimensionMismatch(format!(
            "pull-out needs a depth-lowering map, got {} -> {}",
            op.in_depth(),
            op.out_depth()
        )));
    }
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let f = CylFn::random_complex(model, op.out_depth(), rng)?;
        let g = CylFn::random_complex(model, op.in_depth(), rng)?;
        let lifted = f.precompose_shift(model)?.pointwise_mul(&g, model)?;
        let lhs = op.apply(model, &lifted)?;
        let rhs = f.pointwise_mul(&op.apply(model, &g)?, model)?;
        worst = worst.max(lhs.sup_distance(&rhs, model)?);
    }
    Ok(worst)
}

/// Worst deviation of `⟨A f, g⟩ = ⟨f, A* g⟩` over random pairs, checked with
/// the inner-product formula rather than the matrix identity.
pub fn adjoint_pair_deviation(
    model: &ShiftModel,
    measure: &Measure,
    op: &DepthOp,
    opstar: &DepthOp,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let f = CylFn::random_complex(model, op.in_depth(), rng)?;
        let g = CylFn::random_complex(model, opstar.in_depth(), rng)?;
        let lhs = measure.inner(model, &op.apply(model, &f)?, &g)?;
        let rhs = measure.inner(model, &f, &opstar.apply(model, &g)?)?;
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}
