//! Global structure diagnostics for a shift model and measure.
//!
//! Four complementary views of the long-run behavior, all at finite
//! cylinder resolution:
//!
//! * the *Wold decomposition* splits the deepest level into the part where
//!   the composition isometry acts unitarily and a stack of shift layers,
//! * *exactness* and *ergodicity* probes report the dimensions of
//!   coarse-measurable and shift-fixed subspaces,
//! * *recurrence partial sums* accumulate `(f∘σⁿ) ω_n` with the
//!   order-`n` pushforward correction, and
//! * the *solenoid* extends the model by a finite backward history, with
//!   the projection to the base carrying the extended measure onto the
//!   original one exactly.
//!
//! Everything here is diagnostic: the probes report finite-resolution
//! dimensions and deviations and make no claims about measurable limits.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::operators::{adjoint_op, compose_op, rn_data, rokhlin_transfer, DepthOp};
use crate::symspace::{CylFn, Measure, ShiftModel, Word};

/// Invariance gate for operations that need the composition operator to be
/// an isometry.
const INVARIANCE_TOL: f64 = 1e-12;

/// Rank-truncation threshold for subspace computations.
const RANK_TOL: f64 = 1e-10;

/// Largest combined depth the solenoid construction will enumerate.
pub const MAX_SOLENOID_DEPTH: usize = 14;

/// `Sⁿ` as a single operator from depth `from` to depth `from + steps`.
fn shift_power(model: &ShiftModel, from: usize, steps: usize) -> Result<DepthOp> {
    let mut op = DepthOp::identity(model, from)?;
    for d in from..from + steps {
        op = compose_op(model, d)?.compose(model, &op)?;
    }
    Ok(op)
}

/// Wold decomposition of the deepest level under the composition isometry.
///
/// The space splits as the part carrying a unitary restriction (functions
/// factoring through every power of the shift up to the probed depth) plus
/// one shift layer per power, each the image of an adjoint kernel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WoldReport {
    /// Dimension of the subspace where the isometry acts unitarily.
    pub dim_h_infinity: usize,
    /// Dimensions of the shift layers, outermost first.
    pub layer_dims: Vec<usize>,
    /// Dimension of the decomposed level.
    pub ambient_dim: usize,
    /// Whether the dimensions add up exactly.
    pub complete: bool,
    /// Largest principal-angle cosine between distinct summands.
    pub layer_orthogonality: f64,
    /// Matrix of the backward shift restricted to the unitary part, in an
    /// orthonormal basis, stored row-major as `[re, im]` pairs.
    pub unitary: Vec<Vec<[f64; 2]>>,
    /// `‖U†U - I‖` for the restricted matrix.
    pub unitary_deviation: f64,
    /// Orthonormal basis of the unitary part, as cylinder functions.
    pub h_infinity_basis: Vec<CylFn>,
}

/// Computes the Wold decomposition at the deepest level, probing shift
/// powers up to `depth`.
///
/// Requires a shift-invariant measure; without invariance the composition
/// operator is not an isometry and the decomposition does not apply.
pub fn wold(model: &ShiftModel, measure: &Measure, depth: usize) -> Result<WoldReport> {
    let budget = model.depth_budget();
    if depth == 0 || depth > budget {
        return Err(Error::DepthRange {
            depth,
            operation: "wold decomposition",
            valid: format!("1..={budget}"),
        });
    }
    let invariance = measure.invariance_deviation(model)?;
    if invariance > INVARIANCE_TOL {
        return Err(Error::NotInvariant {
            deviation: invariance,
            operation: "wold decomposition",
        });
    }
    let masses = measure.mass(budget)?;
    let ambient_dim = model.dim(budget)?;

    let mut range_frames = Vec::with_capacity(depth);
    for n in 1..=depth {
        let power = shift_power(model, budget - n, n)?;
        range_frames.push(linalg::weighted_onb(power.matrix(), masses, RANK_TOL));
    }
    let h_infinity = linalg::intersect_subspaces(&range_frames, masses, RANK_TOL);

    let mut layers = Vec::with_capacity(depth);
    for k in 0..depth {
        let sstar = adjoint_op(model, measure, budget - k)?;
        let kernel = linalg::weighted_kernel_onb(sstar.matrix(), measure.mass(budget - k)?, RANK_TOL);
        let pushed = if k == 0 {
            kernel
        } else {
            shift_power(model, budget - k, k)?.matrix() * kernel
        };
        layers.push(linalg::weighted_onb(&pushed, masses, RANK_TOL));
    }

    let mut summands = vec![&h_infinity];
    summands.extend(layers.iter());
    let mut layer_orthogonality = 0.0f64;
    for (i, a) in summands.iter().enumerate() {
        for b in summands.iter().skip(i + 1) {
            if a.ncols() == 0 || b.ncols() == 0 {
                continue;
            }
            if let Some(&c) = linalg::principal_cosines(a, b, masses).first() {
                layer_orthogonality = layer_orthogonality.max(c);
            }
        }
    }

    let backward = DepthOp::promotion(model, budget - 1, budget)?
        .compose(model, &adjoint_op(model, measure, budget)?)?;
    let restricted = linalg::to_tilde(&h_infinity, masses).adjoint()
        * linalg::to_tilde(&(backward.matrix() * &h_infinity), masses);
    let r = restricted.nrows();
    let unitary_deviation =
        linalg::max_abs(&(restricted.adjoint() * &restricted - linalg::identity(r)));
    let unitary = (0..r)
        .map(|i| {
            (0..r)
                .map(|j| [restricted[(i, j)].re, restricted[(i, j)].im])
                .collect()
        })
        .collect();

    let h_infinity_basis = (0..h_infinity.ncols())
        .map(|j| CylFn::from_values(model, budget, h_infinity.column(j).iter().copied().collect()))
        .collect::<Result<Vec<_>>>()?;

    let dim_h_infinity = h_infinity.ncols();
    let layer_dims: Vec<usize> = layers.iter().map(|q| q.ncols()).collect();
    let complete = dim_h_infinity + layer_dims.iter().sum::<usize>() == ambient_dim;
    Ok(WoldReport {
        dim_h_infinity,
        layer_dims,
        ambient_dim,
        complete,
        layer_orthogonality,
        unitary,
        unitary_deviation,
        h_infinity_basis,
    })
}

/// Dimensions of the subspaces of the deepest level that factor through
/// each power of the shift, `n = 0..=depth`.
///
/// The first entry is the full dimension; a final entry of `1` means only
/// constants survive at this resolution, the finite surrogate of exactness.
pub fn exactness_probe(model: &ShiftModel, depth: usize) -> Result<Vec<usize>> {
    let budget = model.depth_budget();
    model.check_depth(depth)?;
    let mut dims = Vec::with_capacity(depth + 1);
    dims.push(model.dim(budget)?);
    for n in 1..=depth {
        let power = shift_power(model, budget - n, n)?;
        dims.push(linalg::rank(power.matrix(), RANK_TOL));
    }
    Ok(dims)
}

/// Fixed-space dimensions reported by the ergodicity probe.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErgodicityReport {
    /// Dimension of `{f : f∘σ = f}` one level below the budget.
    pub fixed_dim: usize,
    /// Dimension of the eigenvalue-one space of the fiber-averaged
    /// transfer operator, an independent route to the same count.
    pub perron_dim: usize,
}

/// Counts shift-fixed functions and transfer-fixed functions.
///
/// A value of one for both means the model and measure see a single
/// ergodic component at this resolution; reducible models report the
/// number of components.
pub fn ergodicity_probe(model: &ShiftModel, measure: &Measure) -> Result<ErgodicityReport> {
    let budget = model.depth_budget();
    let coarse = model.dim(budget - 1)?;

    let fixed_map =
        compose_op(model, budget - 1)?.matrix() - DepthOp::promotion(model, budget - 1, budget)?.matrix();
    let fixed_dim = coarse - linalg::rank(&fixed_map, RANK_TOL);

    let around = rokhlin_transfer(model, measure, budget)?
        .compose(model, &DepthOp::promotion(model, budget - 1, budget)?)?;
    let perron_map = around.matrix() - linalg::identity(coarse);
    let perron_dim = coarse - linalg::rank(&perron_map, RANK_TOL);

    Ok(ErgodicityReport {
        fixed_dim,
        perron_dim,
    })
}

/// Partial sums `Σ_{n≤k} (f∘σⁿ) ω_n` for `k = 0..=n_max`, with `ω_n` the
/// order-`n` pushforward correction of the measure.
///
/// The summand must be nonnegative and shallow enough for `n_max` shift
/// compositions; the sums are diagnostics and carry no limit claim.
pub fn recurrence_partial_sums(
    model: &ShiftModel,
    measure: &Measure,
    f: &CylFn,
    n_max: usize,
) -> Result<Vec<CylFn>> {
    let values = f.real_values(1e-9)?;
    for (w, &v) in model.words(f.depth())?.iter().zip(&values) {
        if v < 0.0 {
            return Err(Error::NotPositive {
                context: "recurrence summand must be nonnegative",
                value: v,
                word: w.to_string(),
            });
        }
    }
    let budget = model.depth_budget();
    if f.depth() + n_max > budget {
        return Err(Error::DepthOverflow {
            requested: f.depth() + n_max,
            budget,
        });
    }
    let mut sums = Vec::with_capacity(n_max + 1);
    let mut sum = f.clone();
    sums.push(sum.clone());
    if n_max == 0 {
        return Ok(sums);
    }
    let rn = rn_data(model, measure, n_max)?;
    for n in 1..=n_max {
        let term = f
            .precompose_shift_pow(model, n)?
            .pointwise_mul(&rn.omega_order(model, n)?, model)?;
        sum = sum.add(&term, model)?;
        sums.push(sum.clone());
    }
    Ok(sums)
}

/// A shift model extended by a finite backward history.
///
/// States are admissible words of length `base depth + history`: the last
/// `base depth` letters locate the base point and the leading letters
/// record the chosen preimages, newest first. The state measure extends
/// the base measure by normalized conditional prefix weights, so its
/// projection to the base is exact for any quasi-invariant measure.
#[derive(Debug, Clone)]
pub struct SolenoidModel {
    base_depth: usize,
    history: usize,
    extended: ShiftModel,
    weights: Vec<f64>,
}

impl SolenoidModel {
    /// Depth of the base model the states project onto.
    pub fn base_depth(&self) -> usize {
        self.base_depth
    }

    /// Number of recorded backward steps.
    pub fn history(&self) -> usize {
        self.history
    }

    /// The extended model whose deepest words are the states.
    pub fn extended(&self) -> &ShiftModel {
        &self.extended
    }

    /// The states, in extended-model word order.
    pub fn states(&self) -> Result<&[Word]> {
        self.extended.words(self.base_depth + self.history)
    }

    /// State weights, aligned with [`SolenoidModel::states`].
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Projection to the base: drop the recorded history letters.
    ///
    /// Full states project to base resolution; states that have taken a
    /// step project one level coarser, since the step moves the base
    /// point forward and the truncation cannot refine it.
    pub fn project(&self, state: &Word) -> Word {
        state.suffix(state.len() - self.history)
    }

    /// One step of the extended shift: drop the newest history letter.
    ///
    /// The image is a state of one less total length, so repeated steps
    /// consume the recorded history. Every shorter state has one preimage
    /// per admissible history letter, which is what the added history
    /// buys: the map is onto, with fiber sizes equal to the branch counts
    /// of the base model.
    pub fn step(&self, state: &Word) -> Word {
        state.tail()
    }

    /// Lifts a base function through the projection, giving its values on
    /// the states.
    pub fn lift(&self, model: &ShiftModel, f: &CylFn) -> Result<Vec<Complex64>> {
        let deep = f.promote(model, self.base_depth)?;
        self.states()?
            .iter()
            .map(|u| deep.value_at(model, &self.project(u)))
            .collect()
    }
}

/// Deviations of the solenoid extension from its defining identities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolenoidReport {
    /// Number of states.
    pub state_count: usize,
    /// Recorded backward steps.
    pub history: usize,
    /// Dimension of the base level the states project onto.
    pub base_dim: usize,
    /// Largest entry deviation between the Gram matrix of lifted basis
    /// functions and the base Gram matrix.
    pub gram_deviation: f64,
    /// Largest cylinder deviation of the projected state measure from the
    /// base measure.
    pub marginal_deviation: f64,
    /// States where projecting after one step differs from shifting the
    /// projection; the identity is combinatorial and this should be zero.
    pub factor_mismatches: usize,
    /// Isometry defect of the conjugated composition operator on lifted
    /// functions; small exactly when the base measure is invariant.
    pub intertwiner_deviation: f64,
}

/// Builds the solenoid extension with `history` backward steps and checks
/// its defining identities.
pub fn solenoid_build(
    model: &ShiftModel,
    measure: &Measure,
    history: usize,
) -> Result<(SolenoidModel, SolenoidReport)> {
    let base_depth = model.depth_budget();
    let total = base_depth + history;
    if total > MAX_SOLENOID_DEPTH {
        return Err(Error::DepthOverflow {
            requested: total,
            budget: MAX_SOLENOID_DEPTH,
        });
    }
    let extended = model.with_depth(total)?;
    let ext_measure = Measure::new(&extended, measure.kind().clone())?;

    // State weight: base mass times one normalized conditional weight per
    // recorded preimage choice. Normalizing by the pushforward sum keeps
    // the projection exact even when the measure is only quasi-invariant.
    let states = extended.words(total)?;
    let mut weights = Vec::with_capacity(states.len());
    for u in states {
        let base = u.suffix(base_depth);
        let mut p = ext_measure.mass(base_depth)?[extended
            .index_of(&base)
            .expect("suffix of an admissible word is admissible")];
        for cut in (0..history).rev() {
            let longer = u.suffix(total - cut);
            let shorter = u.suffix(total - cut - 1);
            let longer_mass =
                ext_measure.mass(longer.len())?[extended.index_of(&longer).expect("state suffix")];
            let mut fiber_sum = 0.0;
            for a in extended.prefix_letters(&shorter) {
                let v = shorter.with_prefix(a);
                fiber_sum +=
                    ext_measure.mass(v.len())?[extended.index_of(&v).expect("admissible prefix")];
            }
            p *= longer_mass / fiber_sum;
        }
        weights.push(p);
    }

    let solenoid = SolenoidModel {
        base_depth,
        history,
        extended,
        weights,
    };
    let report = solenoid_report(model, measure, &solenoid)?;
    Ok((solenoid, report))
}

/// Checks the projection, factor, and intertwining identities of a built
/// solenoid against its base.
fn solenoid_report(
    model: &ShiftModel,
    measure: &Measure,
    solenoid: &SolenoidModel,
) -> Result<SolenoidReport> {
    let base_depth = solenoid.base_depth;
    let base_dim = model.dim(base_depth)?;
    let base_mass = measure.mass(base_depth)?;
    let states = solenoid.states()?;

    // Projected marginal versus the base measure.
    let mut marginal = vec![0.0f64; base_dim];
    for (u, &p) in states.iter().zip(&solenoid.weights) {
        let idx = model
            .index_of(&solenoid.project(u))
            .expect("projection of a state is a base word");
        marginal[idx] += p;
    }
    let marginal_deviation = marginal
        .iter()
        .zip(base_mass)
        .map(|(got, want)| (got - want).abs())
        .fold(0.0, f64::max);

    // Gram matrix of the lifted indicator basis. Lifted indicators have
    // disjoint supports, so off-diagonal entries vanish identically and
    // the diagonal repeats the marginal; the full matrix is checked anyway.
    let mut gram_deviation = 0.0f64;
    let mut lift_cols = DMatrix::<Complex64>::zeros(states.len(), base_dim);
    for (k, u) in states.iter().enumerate() {
        let idx = model
            .index_of(&solenoid.project(u))
            .expect("projection of a state is a base word");
        lift_cols[(k, idx)] = Complex64::ONE;
    }
    for i in 0..base_dim {
        for j in 0..base_dim {
            let mut entry = 0.0;
            for (k, &p) in solenoid.weights.iter().enumerate() {
                entry += (lift_cols[(k, i)] * lift_cols[(k, j)].conj()).re * p;
            }
            let want = if i == j { base_mass[i] } else { 0.0 };
            gram_deviation = gram_deviation.max((entry - want).abs());
        }
    }

    // Factor identity: project∘step = shift∘project on every state.
    let factor_mismatches = states
        .iter()
        .filter(|u| solenoid.project(&solenoid.step(u)) != solenoid.project(u).tail())
        .count();

    // Conjugated composition operator on lifted coarse functions:
    // lift, average back down, apply the base shift, lift again. On the
    // lifted coarse level this is an isometry exactly when the base
    // measure is invariant.
    let coarse_dim = model.dim(base_depth - 1)?;
    let coarse_mass = measure.mass(base_depth - 1)?;
    let mut coarse_cols = DMatrix::<Complex64>::zeros(states.len(), coarse_dim);
    for (k, u) in states.iter().enumerate() {
        let idx = model
            .index_of(&solenoid.project(u).prefix(base_depth - 1))
            .expect("coarse projection of a state");
        coarse_cols[(k, idx)] = Complex64::ONE;
    }
    let shift = compose_op(model, base_depth - 1)?;
    let mut image_cols = DMatrix::<Complex64>::zeros(states.len(), coarse_dim);
    for j in 0..coarse_dim {
        let basis = CylFn::from_values(
            model,
            base_depth - 1,
            (0..coarse_dim)
                .map(|i| {
                    if i == j {
                        Complex64::ONE
                    } else {
                        Complex64::ZERO
                    }
                })
                .collect(),
        )?;
        let shifted = shift.apply(model, &basis)?;
        for (k, v) in solenoid.lift(model, &shifted)?.into_iter().enumerate() {
            image_cols[(k, j)] = v;
        }
    }
    let mut intertwiner_deviation = 0.0f64;
    for i in 0..coarse_dim {
        for j in 0..coarse_dim {
            let mut got = Complex64::ZERO;
            let mut want = Complex64::ZERO;
            for (k, &p) in solenoid.weights.iter().enumerate() {
                let weight = Complex64::new(p, 0.0);
                got += image_cols[(k, i)] * image_cols[(k, j)].conj() * weight;
                want += coarse_cols[(k, i)] * coarse_cols[(k, j)].conj() * weight;
            }
            let base_want = if i == j {
                Complex64::new(coarse_mass[i], 0.0)
            } else {
                Complex64::ZERO
            };
            intertwiner_deviation = intertwiner_deviation.max((got - want).norm());
            intertwiner_deviation = intertwiner_deviation.max((want - base_want).norm());
        }
    }

    Ok(SolenoidReport {
        state_count: states.len(),
        history: solenoid.history,
        base_dim,
        gram_deviation,
        marginal_deviation,
        factor_mismatches,
        intertwiner_deviation,
    })
}
