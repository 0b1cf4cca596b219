//! Cuntz-relation verification for weighted filter families.
//!
//! Given a strictly positive certified weight `φ` and filters `m_i`, the
//! operators `T_i f = m_i √φ (f∘σ)` are candidates for Cuntz isometries.
//! The characterization splits into
//!
//! * condition (i): `S*(φ m̄_j m_i) = δ_ij · 1`, making each `T_i` an
//!   isometry with ranges pairwise orthogonal, and
//! * condition (ii): `Σ_i m_i 𝔼_φ(m̄_i f) = f`, making the ranges span
//!   everything.
//!
//! Both are quantified over the deepest cylinder level the model carries.
//! Verification requires a constant preimage-fiber cardinality `N` and
//! exactly `N` filters: condition (i) asks for a pointwise orthonormal
//! `N`-frame of an `N`-dimensional fiber space, which cannot exist when
//! fibers shrink. Variable-fiber models are rejected here and served by the
//! variable-rank frames of the filter-bank module instead.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::markovian::{alpha, is_markovian, MarkovianCertificate};
use crate::operators::{
    apply_shift_adjoint, cond_expect, multiplication_op, weighted_adjoint, weighted_compose,
    DepthOp,
};
use crate::symspace::{CylFn, Measure, ShiftModel};

/// Extracts `√φ` from a certificate, requiring strict positivity.
///
/// Zeros of the weight collapse fibers of the reference subspace `ℋ_φ`, so
/// operator construction refuses them with a positional diagnostic.
pub(crate) fn sqrt_weight(model: &ShiftModel, cert: &MarkovianCertificate) -> Result<CylFn> {
    let phi = cert.phi();
    let values = phi.real_values(1e-9)?;
    for (w, &v) in model.words(phi.depth())?.iter().zip(&values) {
        if v <= 0.0 {
            return Err(Error::NotPositive {
                context: "operator weight must be strictly positive",
                value: v,
                word: w.to_string(),
            });
        }
    }
    phi.sqrt_nonneg(model)
}

/// Builds `T_m: f ↦ m √φ (f∘σ)` on depth-`in_depth` inputs.
pub fn build_t(
    model: &ShiftModel,
    measure: &Measure,
    cert: &MarkovianCertificate,
    m: &CylFn,
    in_depth: usize,
) -> Result<DepthOp> {
    cert.ensure(measure)?;
    let root = sqrt_weight(model, cert)?;
    let symbol = m.pointwise_mul(&root, model)?;
    weighted_compose(model, &symbol, in_depth)
}

/// Builds the adjoint `T*_m: g ↦ S*(√φ m̄ g)` on depth-`in_depth` inputs.
pub fn build_t_star(
    model: &ShiftModel,
    measure: &Measure,
    cert: &MarkovianCertificate,
    m: &CylFn,
    in_depth: usize,
) -> Result<DepthOp> {
    cert.ensure(measure)?;
    let root = sqrt_weight(model, cert)?;
    let symbol = m.pointwise_mul(&root, model)?;
    weighted_adjoint(model, measure, &symbol, in_depth)
}

/// The multiplier implementing `T*_{m_1} T_{m_2}`:
/// `S*(φ m̄_1 m_2)`, evaluated through the deepest level and reduced to its
/// exact minimal depth. The operator identity
/// `T*_{m_1} T_{m_2} = M` of this multiplier holds on the whole input space.
pub fn multiplier(
    model: &ShiftModel,
    measure: &Measure,
    cert: &MarkovianCertificate,
    m1: &CylFn,
    m2: &CylFn,
) -> Result<CylFn> {
    cert.ensure(measure)?;
    let product = cert
        .phi()
        .pointwise_mul(&m1.conj(), model)?
        .pointwise_mul(m2, model)?
        .promote(model, model.depth_budget())?;
    Ok(apply_shift_adjoint(model, measure, &product)?.reduce_depth(model, 1e-12))
}

/// Verification record for one filter family against one weight.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CuntzReport {
    filter_count: usize,
    fiber_cardinality: usize,
    /// `‖S*(φ m̄_j m_i) - δ_ij‖_∞`, rows `i`, columns `j`.
    condition_i: Vec<Vec<f64>>,
    /// `‖Σ_i M_{m_i} 𝔼_φ M_{m̄_i} - I‖` on the deepest level.
    condition_ii: f64,
    /// Per-filter Gram isometry deviation of `T_i`, an independent route
    /// to the diagonal of condition (i).
    isometry: Vec<f64>,
    /// `‖Σ_i T_i T*_i - I‖`; computed only when both conditions pass.
    sum_of_ranges: Option<f64>,
    /// `max_{i≠j} ‖(T_i T*_i)(T_j T*_j)‖`; computed only on pass.
    range_orthogonality: Option<f64>,
    /// Pointwise minimum of `Σ_i |m_i|²`; positivity of the frame field.
    pointwise_frame_min: f64,
    /// Set when the family cannot satisfy the relations for structural
    /// reasons (wrong filter count).
    structural: Option<String>,
    tolerance: f64,
    pass: bool,
}

impl CuntzReport {
    /// Number of filters verified.
    pub fn filter_count(&self) -> usize {
        self.filter_count
    }

    /// Constant preimage count of the model.
    pub fn fiber_cardinality(&self) -> usize {
        self.fiber_cardinality
    }

    /// Orthogonality grid deviations, rows `i`, columns `j`.
    pub fn condition_i(&self) -> &[Vec<f64>] {
        &self.condition_i
    }

    /// Completeness deviation.
    pub fn condition_ii(&self) -> f64 {
        self.condition_ii
    }

    /// Per-filter isometry deviations.
    pub fn isometry(&self) -> &[f64] {
        &self.isometry
    }

    /// Deviation of the range projections from summing to the identity.
    pub fn sum_of_ranges(&self) -> Option<f64> {
        self.sum_of_ranges
    }

    /// Largest product norm between distinct range projections.
    pub fn range_orthogonality(&self) -> Option<f64> {
        self.range_orthogonality
    }

    /// Pointwise minimum of the squared filter field.
    pub fn pointwise_frame_min(&self) -> f64 {
        self.pointwise_frame_min
    }

    /// Structural obstruction, if any.
    pub fn structural(&self) -> Option<&str> {
        self.structural.as_deref()
    }

    /// Tolerance the verdict was issued at.
    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Overall verdict.
    pub fn pass(&self) -> bool {
        self.pass
    }

    /// Largest deviation across conditions (i), (ii), and isometry.
    pub fn worst_deviation(&self) -> f64 {
        self.condition_i
            .iter()
            .flatten()
            .chain(&self.isometry)
            .copied()
            .fold(self.condition_ii, f64::max)
    }
}

/// Verifies the Cuntz-relation characterization for `filters` with weight
/// `cert` over `measure`.
///
/// A wrong filter count is a structural failure recorded in the report, not
/// an error; a model with varying fiber cardinality is an error.
pub fn verify_cuntz(
    model: &ShiftModel,
    measure: &Measure,
    cert: &MarkovianCertificate,
    filters: &[CylFn],
    tol: f64,
) -> Result<CuntzReport> {
    cert.ensure(measure)?;
    verify_inner(model, measure, Some(cert), filters, tol)
}

/// Verifies the unweighted relations (`weight ≡ 1`): condition (i) becomes
/// `S*(m̄_j m_i) = δ_ij` and the expectation in condition (ii) is `S S*`.
///
/// No certification of the unit weight is demanded, so this also covers
/// filter families adapted to a non-invariant measure through its masses.
/// For invariant measures it is exactly the classical characterization.
pub fn verify_cuntz_plain(
    model: &ShiftModel,
    measure: &Measure,
    filters: &[CylFn],
    tol: f64,
) -> Result<CuntzReport> {
    verify_inner(model, measure, None, filters, tol)
}

fn verify_inner(
    model: &ShiftModel,
    measure: &Measure,
    cert: Option<&MarkovianCertificate>,
    filters: &[CylFn],
    tol: f64,
) -> Result<CuntzReport> {
    let fiber = model.fiber_cardinality()?;
    let budget = model.depth_budget();
    let count = filters.len();
    let root = match cert {
        Some(cert) => sqrt_weight(model, cert)?,
        None => CylFn::one(),
    };
    let phi = match cert {
        Some(cert) => cert.phi().clone(),
        None => CylFn::one(),
    };

    let structural = if count != fiber {
        Some(format!(
            "filter count {count} differs from the fiber cardinality {fiber}; \
             completeness is impossible"
        ))
    } else {
        None
    };

    let mut condition_i = vec![vec![0.0f64; count]; count];
    for (i, mi) in filters.iter().enumerate() {
        for (j, mj) in filters.iter().enumerate() {
            let product = phi
                .pointwise_mul(&mj.conj(), model)?
                .pointwise_mul(mi, model)?
                .promote(model, budget)?;
            let mult = apply_shift_adjoint(model, measure, &product)?;
            let target = if i == j {
                CylFn::one()
            } else {
                CylFn::constant(Complex64::ZERO)
            };
            condition_i[i][j] = mult.sup_distance(&target, model)?;
        }
    }

    let expectation = match cert {
        Some(cert) => cond_expect(model, measure, Some(cert.phi()), budget, cert.tolerance())?,
        None => {
            let sstar = crate::operators::adjoint_op(model, measure, budget)?;
            crate::operators::compose_op(model, budget - 1)?.compose(model, &sstar)?
        }
    };
    let dim = model.dim(budget)?;
    let mut accumulated = nalgebra::DMatrix::<Complex64>::zeros(dim, dim);
    let mut t_ops = Vec::with_capacity(count);
    for m in filters {
        let mul = multiplication_op(model, m, budget)?;
        let mul_conj = multiplication_op(model, &m.conj(), budget)?;
        let product = mul.compose(model, &expectation.compose(model, &mul_conj)?)?;
        accumulated += product.matrix();
        let symbol = m.pointwise_mul(&root, model)?;
        t_ops.push((
            weighted_compose(model, &symbol, budget - 1)?,
            weighted_adjoint(model, measure, &symbol, budget)?,
        ));
    }
    let condition_ii = linalg::op_inf_norm(&(accumulated - linalg::identity(dim)));

    let isometry: Vec<f64> = t_ops
        .iter()
        .map(|(t, _)| t.isometry_deviation(measure))
        .collect::<Result<_>>()?;

    let mut frame_field = CylFn::constant(Complex64::ZERO);
    for m in filters {
        frame_field = frame_field.add(&m.abs_squared(), model)?;
    }
    let pointwise_frame_min = frame_field
        .values()
        .iter()
        .map(|v| v.re)
        .fold(f64::INFINITY, f64::min);

    let grid_ok = condition_i.iter().flatten().all(|&v| v <= tol);
    let pass = structural.is_none()
        && grid_ok
        && condition_ii <= tol
        && isometry.iter().all(|&v| v <= tol);

    let (sum_of_ranges, range_orthogonality) = if pass {
        let mut proj_sum = nalgebra::DMatrix::<Complex64>::zeros(dim, dim);
        let mut projections = Vec::with_capacity(count);
        for (t, tstar) in &t_ops {
            let p = t.compose(model, tstar)?;
            proj_sum += p.matrix();
            projections.push(p);
        }
        let sum_dev = linalg::op_inf_norm(&(proj_sum - linalg::identity(dim)));
        let mut cross = 0.0f64;
        for (i, p) in projections.iter().enumerate() {
            for q in projections.iter().skip(i + 1) {
                cross = cross.max(p.compose(model, q)?.op_norm());
            }
        }
        (Some(sum_dev), Some(cross))
    } else {
        (None, None)
    };

    Ok(CuntzReport {
        filter_count: count,
        fiber_cardinality: fiber,
        condition_i,
        condition_ii,
        isometry,
        sum_of_ranges,
        range_orthogonality,
        pointwise_frame_min,
        structural,
        tolerance: tol,
        pass,
    })
}

/// Dimension audit of the subspaces `m_i · ℋ_φ` inside the deepest level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubspaceReport {
    /// Dimension of each `m_i ℋ_φ`, in filter order.
    pub dims: Vec<usize>,
    /// Sum of the dimensions.
    pub total: usize,
    /// Dimension of the ambient deepest level.
    pub expected_total: usize,
    /// Largest principal-angle cosine between distinct subspaces.
    pub max_cross_cosine: f64,
    /// Whether the subspaces fill the space orthogonally.
    pub complete: bool,
}

/// Computes the ranges of the `T_i` in the deepest level, their dimensions,
/// and the principal angles between them.
///
/// Runs for incomplete families too; `complete` records whether the
/// dimensions sum to the ambient dimension with orthogonal pairwise angles.
pub fn subspace_decomposition(
    model: &ShiftModel,
    measure: &Measure,
    cert: &MarkovianCertificate,
    filters: &[CylFn],
    tol: f64,
) -> Result<SubspaceReport> {
    cert.ensure(measure)?;
    let budget = model.depth_budget();
    let weights = measure.mass(budget)?;
    let mut bases = Vec::with_capacity(filters.len());
    for m in filters {
        let t = build_t(model, measure, cert, m, budget - 1)?;
        bases.push(linalg::weighted_onb(t.matrix(), weights, 1e-10));
    }
    let dims: Vec<usize> = bases.iter().map(|q| q.ncols()).collect();
    let total: usize = dims.iter().sum();
    let expected_total = model.dim(budget)?;
    let mut max_cross_cosine = 0.0f64;
    for (i, qi) in bases.iter().enumerate() {
        for qj in bases.iter().skip(i + 1) {
            if qi.ncols() == 0 || qj.ncols() == 0 {
                continue;
            }
            let cosines = linalg::principal_cosines(qi, qj, weights);
            if let Some(&c) = cosines.first() {
                max_cross_cosine = max_cross_cosine.max(c);
            }
        }
    }
    Ok(SubspaceReport {
        dims,
        total,
        expected_total,
        max_cross_cosine,
        complete: total == expected_total && max_cross_cosine <= tol,
    })
}

/// Outcome of carrying operators to an equivalent measure by similarity.
#[derive(Debug, Clone)]
pub struct SimilarityReport {
    /// `‖T^ν_m - M_{1/√g} T^μ_m M_{√g}‖` maximized over the filters.
    pub operator_deviation: f64,
    /// Largest entrywise difference between the Gram matrix of the
    /// transported operators in the new inner product and the Gram of the
    /// originals against the unitarily matched vectors.
    pub gram_deviation: f64,
    /// Certificate of the transported weight `(g∘σ) φ / g` for `g dμ`.
    pub certificate: MarkovianCertificate,
}

/// Transports `T_m` to the measure `g dμ` by the similarity
/// `T̃ = M_{1/√g} T M_{√g}` and checks it equals the operator built
/// directly from the transported weight, with matching Gram data.
pub fn similarity_transport(
    model: &ShiftModel,
    measure: &Measure,
    cert: &MarkovianCertificate,
    filters: &[CylFn],
    g: &CylFn,
    tol: f64,
) -> Result<SimilarityReport> {
    cert.ensure(measure)?;
    let budget = model.depth_budget();
    let psi = alpha(model, g, cert.phi())?;
    let nu = Measure::new(
        model,
        crate::symspace::MeasureKind::density(measure.kind().clone(), g.clone()),
    )?;
    let certificate = is_markovian(model, &nu, &psi, tol)?;
    certificate.ensure(&nu)?;

    let root_g = g.sqrt_nonneg(model)?;
    let lift = multiplication_op(model, &root_g, budget - 1)?;
    let drop = multiplication_op(model, &root_g.recip(model)?, budget)?;

    let mut operator_deviation = 0.0f64;
    let mut gram_deviation = 0.0f64;
    let mut direct = Vec::with_capacity(filters.len());
    let mut conjugated = Vec::with_capacity(filters.len());
    for m in filters {
        let t_nu = build_t(model, &nu, &certificate, m, budget - 1)?;
        let t_mu = build_t(model, measure, cert, m, budget - 1)?;
        let similar = drop.compose(model, &t_mu.compose(model, &lift)?)?;
        operator_deviation = operator_deviation.max(t_nu.deviation_from(&similar)?);
        direct.push(t_nu);
        conjugated.push(t_mu.compose(model, &lift)?);
    }

    let dim = model.dim(budget - 1)?;
    for (i, ti) in direct.iter().enumerate() {
        for (j, tj) in direct.iter().enumerate() {
            for a in 0..dim {
                for b in 0..dim {
                    let mut ea = vec![Complex64::ZERO; dim];
                    ea[a] = Complex64::ONE;
                    let mut eb = vec![Complex64::ZERO; dim];
                    eb[b] = Complex64::ONE;
                    let ea = CylFn::from_values(model, budget - 1, ea)?;
                    let eb = CylFn::from_values(model, budget - 1, eb)?;
                    let lhs = nu.inner(
                        model,
                        &ti.apply(model, &ea)?,
                        &tj.apply(model, &eb)?,
                    )?;
                    let rhs = measure.inner(
                        model,
                        &conjugated[i].apply(model, &ea)?,
                        &conjugated[j].apply(model, &eb)?,
                    )?;
                    gram_deviation = gram_deviation.max((lhs - rhs).norm());
                }
            }
        }
    }

    Ok(SimilarityReport {
        operator_deviation,
        gram_deviation,
        certificate,
    })
}
