//! Filter banks, the loop-group action on them, and cyclic construction.
//!
//! A *filter bank* packages a verified filter family together with its
//! weight and the verification report, so downstream operations can insist
//! on membership instead of re-deriving it. Banks come in two classes:
//!
//! * *unweighted* banks satisfy `S*(m̄_j m_i) = δ_ij` with the plain
//!   expectation `S S*`, and
//! * *weighted* banks carry a certified Markovian weight `φ` and satisfy
//!   the `φ`-weighted relations.
//!
//! Pointwise unitary matrix fields `G = (g_ij)` of finite depth act on banks
//! by `m_i ↦ Σ_j (ḡ_ji ∘ σ) m_j`. This action preserves membership, is
//! transitive between unweighted banks of the same size, and is free: the
//! acting element is recovered from any bank and its image by
//! `g_ij = S*(m_i n̄_j)`. The multiplication map `m ↦ √φ · m` carries a
//! weighted bank to an unweighted one with the same operators, intertwining
//! the action.
//!
//! Finally, a per-fiber orthonormalization of the deepest cylinder level
//! produces a canonical filter family directly from the measure: a full
//! orthonormal bank when every point has the same number of preimages, and
//! a variable-rank frame with explicit fiber ranks otherwise.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cuntz::{sqrt_weight, verify_cuntz, verify_cuntz_plain, CuntzReport};
use crate::error::{Error, Result};
use crate::linalg;
use crate::markovian::MarkovianCertificate;
use crate::operators::{apply_shift_adjoint, weighted_adjoint, weighted_compose};
use crate::symspace::{CylFn, Measure, ShiftModel, Word};

/// Tolerance for the pointwise unitarity gate on loop elements.
const UNITARITY_TOL: f64 = 1e-10;

/// Threshold below which a conditional fiber weight counts as vanished
/// during cyclic construction.
const FIBER_DROP_TOL: f64 = 1e-12;

/// The weight class a filter bank is verified against.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BankWeight {
    /// Unweighted relations: weight identically one, expectation `S S*`.
    Plain,
    /// Relations weighted by a certified Markovian function.
    Weighted(MarkovianCertificate),
}

impl BankWeight {
    /// The weight as a cylinder function (`1` for the plain class).
    pub fn phi(&self) -> CylFn {
        match self {
            BankWeight::Plain => CylFn::one(),
            BankWeight::Weighted(cert) => cert.phi().clone(),
        }
    }

    /// Whether the weight is identically one.
    pub fn is_plain(&self) -> bool {
        match self {
            BankWeight::Plain => true,
            BankWeight::Weighted(cert) => cert
                .phi()
                .values()
                .iter()
                .all(|v| (v - Complex64::ONE).norm() <= 1e-14),
        }
    }

    /// Square root of the weight, gated on strict positivity.
    fn root(&self, model: &ShiftModel) -> Result<CylFn> {
        match self {
            BankWeight::Plain => Ok(CylFn::one()),
            BankWeight::Weighted(cert) => sqrt_weight(model, cert),
        }
    }
}

/// A filter family bundled with its weight class and verification report.
///
/// Construction always runs the full verification; operations that need a
/// member of the relation class call [`FilterBank::ensure_verified`] and
/// refuse failed banks loudly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterBank {
    filters: Vec<CylFn>,
    weight: BankWeight,
    measure_id: u64,
    report: CuntzReport,
}

impl FilterBank {
    /// Verifies `filters` in the unweighted class over `measure` and
    /// packages the outcome. A failed verification is recorded, not raised.
    pub fn new_plain(
        model: &ShiftModel,
        measure: &Measure,
        filters: Vec<CylFn>,
        tol: f64,
    ) -> Result<Self> {
        let report = verify_cuntz_plain(model, measure, &filters, tol)?;
        Ok(Self {
            filters,
            weight: BankWeight::Plain,
            measure_id: measure.fingerprint(),
            report,
        })
    }

    /// Verifies `filters` against the certified weight and packages the
    /// outcome. A failed verification is recorded, not raised.
    pub fn new_weighted(
        model: &ShiftModel,
        measure: &Measure,
        cert: MarkovianCertificate,
        filters: Vec<CylFn>,
        tol: f64,
    ) -> Result<Self> {
        let report = verify_cuntz(model, measure, &cert, &filters, tol)?;
        Ok(Self {
            filters,
            weight: BankWeight::Weighted(cert),
            measure_id: measure.fingerprint(),
            report,
        })
    }

    /// The filters, in bank order.
    pub fn filters(&self) -> &[CylFn] {
        &self.filters
    }

    /// Number of filters.
    pub fn len(&self) -> usize {
        self.filters.len()
    }

    /// Whether the bank holds no filters.
    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    /// The weight class the bank was verified against.
    pub fn weight(&self) -> &BankWeight {
        &self.weight
    }

    /// Fingerprint of the measure the bank was verified over.
    pub fn measure_id(&self) -> u64 {
        self.measure_id
    }

    /// The cached verification report.
    pub fn report(&self) -> &CuntzReport {
        &self.report
    }

    /// Whether the cached report passed.
    pub fn is_verified(&self) -> bool {
        self.report.pass()
    }

    /// Errors unless the cached verification passed.
    pub fn ensure_verified(&self) -> Result<()> {
        if self.report.pass() {
            Ok(())
        } else {
            Err(Error::BankUnverified(format!(
                "worst deviation {:.3e} exceeds tolerance {:.3e}",
                self.report.worst_deviation(),
                self.report.tolerance()
            )))
        }
    }

    /// Errors unless the bank was verified over `measure`.
    fn ensure_measure(&self, measure: &Measure) -> Result<()> {
        let found = measure.fingerprint();
        if self.measure_id == found {
            Ok(())
        } else {
            Err(Error::MeasureMismatch {
                expected: self.measure_id,
                found,
            })
        }
    }

    /// Errors unless the bank belongs to the unweighted class.
    fn ensure_plain(&self) -> Result<()> {
        if self.weight.is_plain() {
            Ok(())
        } else {
            Err(Error::WeightedBank(
                "apply the weight map to move the bank to the unweighted class first".into(),
            ))
        }
    }
}

/// A depth-`d` field of unitary matrices indexed by cylinder words.
///
/// The matrix at word `w` has entry `(i, j)` equal to `g_ij(w)`; rows and
/// columns run over filter slots. Composition is the pointwise matrix
/// product, inversion the pointwise adjoint, and the action on a bank of
/// matching size is `m_i ↦ Σ_j (ḡ_ji ∘ σ) m_j`. Construction gates every
/// matrix on unitarity, so a failed gate names the offending word.
#[derive(Debug, Clone)]
pub struct LoopElement {
    depth: usize,
    size: usize,
    matrices: Vec<DMatrix<Complex64>>,
}

/// Row-major serialization form of a loop element.
#[derive(Serialize, Deserialize)]
struct LoopElementData {
    depth: usize,
    size: usize,
    /// One row-major `[re, im]` matrix per word, in model word order.
    matrices: Vec<Vec<[f64; 2]>>,
}

impl Serialize for LoopElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let matrices = self
            .matrices
            .iter()
            .map(|m| {
                (0..self.size)
                    .flat_map(|i| (0..self.size).map(move |j| [m[(i, j)].re, m[(i, j)].im]))
                    .collect()
            })
            .collect();
        LoopElementData {
            depth: self.depth,
            size: self.size,
            matrices,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LoopElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let data = LoopElementData::deserialize(d)?;
        let mut matrices = Vec::with_capacity(data.matrices.len());
        for flat in &data.matrices {
            if flat.len() != data.size * data.size {
                return Err(D::Error::custom("matrix entry count does not match size"));
            }
            matrices.push(DMatrix::from_fn(data.size, data.size, |i, j| {
                let [re, im] = flat[i * data.size + j];
                Complex64::new(re, im)
            }));
        }
        Ok(LoopElement {
            depth: data.depth,
            size: data.size,
            matrices,
        })
    }
}

impl LoopElement {
    /// Validates and wraps one matrix per depth-`depth` word.
    ///
    /// Requires square matrices of a common positive size, one per word in
    /// model order, each unitary to within the construction tolerance.
    pub fn new(model: &ShiftModel, depth: usize, matrices: Vec<DMatrix<Complex64>>) -> Result<Self> {
        model.check_depth(depth)?;
        let words = model.words(depth)?;
        if matrices.len() != words.len() {
            return Err(Error::DimensionMismatch(format!(
                "expected one matrix per depth-{depth} word ({}), got {}",
                words.len(),
                matrices.len()
            )));
        }
        let size = matrices.first().map_or(0, |m| m.nrows());
        if size == 0 {
            return Err(Error::DimensionMismatch(
                "loop element matrices must be square and nonempty".into(),
            ));
        }
        for (w, m) in words.iter().zip(&matrices) {
            if m.nrows() != size || m.ncols() != size {
                return Err(Error::DimensionMismatch(format!(
                    "matrix at {w} is {}x{}, expected {size}x{size}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            let deviation = linalg::max_abs(&(m.adjoint() * m - linalg::identity(size)));
            if deviation > UNITARITY_TOL {
                return Err(Error::NotUnitary {
                    deviation,
                    word: w.to_string(),
                });
            }
        }
        Ok(Self {
            depth,
            size,
            matrices,
        })
    }

    /// Wraps a single matrix as a constant (depth-zero) element.
    pub fn constant(model: &ShiftModel, matrix: DMatrix<Complex64>) -> Result<Self> {
        Self::new(model, 0, vec![matrix])
    }

    /// The identity element of a given size.
    pub fn identity(model: &ShiftModel, size: usize) -> Result<Self> {
        Self::constant(model, linalg::identity(size))
    }

    /// A random constant element, drawn through [`random_unitary`].
    pub fn random_constant(model: &ShiftModel, size: usize, rng: &mut impl Rng) -> Result<Self> {
        Self::constant(model, random_unitary(size, rng))
    }

    /// A random element with an independent unitary at every word.
    pub fn random(
        model: &ShiftModel,
        depth: usize,
        size: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let count = model.words(depth)?.len();
        let matrices = (0..count).map(|_| random_unitary(size, rng)).collect();
        Self::new(model, depth, matrices)
    }

    /// Depth of the matrix field.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Matrix size (number of filter slots acted on).
    pub fn size(&self) -> usize {
        self.size
    }

    /// The matrices, one per word at [`LoopElement::depth`] in model order.
    pub fn matrices(&self) -> &[DMatrix<Complex64>] {
        &self.matrices
    }

    /// The matrix over the cylinder of `w`, which may be longer than the
    /// element depth.
    pub fn matrix_at(&self, model: &ShiftModel, w: &Word) -> Result<&DMatrix<Complex64>> {
        if w.len() < self.depth {
            return Err(Error::DimensionMismatch(format!(
                "word {w} is shorter than the element depth {}",
                self.depth
            )));
        }
        let prefix = w.prefix(self.depth);
        let index = model.index_of(&prefix).ok_or_else(|| {
            Error::InvalidModel(format!("word {prefix} is not admissible in this model"))
        })?;
        Ok(&self.matrices[index])
    }

    /// Entry `(i, j)` as a cylinder function of the element's depth.
    pub fn entry(&self, model: &ShiftModel, i: usize, j: usize) -> Result<CylFn> {
        if i >= self.size || j >= self.size {
            return Err(Error::DimensionMismatch(format!(
                "entry ({i}, {j}) outside a {0}x{0} element",
                self.size
            )));
        }
        let values = self.matrices.iter().map(|m| m[(i, j)]).collect();
        CylFn::from_values(model, self.depth, values)
    }

    /// Re-expresses the element at a deeper level without changing it.
    pub fn promote(&self, model: &ShiftModel, depth: usize) -> Result<Self> {
        if depth < self.depth {
            return Err(Error::DimensionMismatch(format!(
                "cannot promote a depth-{} element to shallower depth {depth}",
                self.depth
            )));
        }
        if depth == self.depth {
            return Ok(self.clone());
        }
        model.check_depth(depth)?;
        let matrices = model
            .words(depth)?
            .iter()
            .map(|w| {
                let prefix = w.prefix(self.depth);
                let index = model.index_of(&prefix).expect("prefix of admissible word");
                self.matrices[index].clone()
            })
            .collect();
        Ok(Self {
            depth,
            size: self.size,
            matrices,
        })
    }

    /// Pointwise matrix product `self · rhs`, at the deeper of the two
    /// depths. Acting with `self` and then `rhs` on a bank equals acting
    /// once with this product.
    pub fn compose(&self, model: &ShiftModel, rhs: &Self) -> Result<Self> {
        if self.size != rhs.size {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose elements of sizes {} and {}",
                self.size, rhs.size
            )));
        }
        let depth = self.depth.max(rhs.depth);
        let a = self.promote(model, depth)?;
        let b = rhs.promote(model, depth)?;
        let matrices = a
            .matrices
            .iter()
            .zip(&b.matrices)
            .map(|(x, y)| x * y)
            .collect();
        Self::new(model, depth, matrices)
    }

    /// Pointwise inverse, which for unitary fields is the adjoint.
    pub fn inverse(&self) -> Self {
        Self {
            depth: self.depth,
            size: self.size,
            matrices: self.matrices.iter().map(|m| m.adjoint()).collect(),
        }
    }

    /// Largest unitarity defect over all words.
    pub fn unitarity_deviation(&self) -> f64 {
        self.matrices
            .iter()
            .map(|m| linalg::max_abs(&(m.adjoint() * m - linalg::identity(self.size))))
            .fold(0.0, f64::max)
    }

    /// Largest entrywise difference after promotion to a common depth.
    pub fn sup_distance(&self, model: &ShiftModel, other: &Self) -> Result<f64> {
        if self.size != other.size {
            return Err(Error::DimensionMismatch(format!(
                "cannot compare elements of sizes {} and {}",
                self.size, other.size
            )));
        }
        let depth = self.depth.max(other.depth);
        let a = self.promote(model, depth)?;
        let b = other.promote(model, depth)?;
        Ok(a.matrices
            .iter()
            .zip(&b.matrices)
            .map(|(x, y)| linalg::max_abs(&(x - y)))
            .fold(0.0, f64::max))
    }
}

/// Draws a unitary matrix by orthonormalizing a random complex matrix.
///
/// The QR factor is phase-corrected per column so the result depends only
/// on the random draw, keeping seeded runs reproducible.
pub fn random_unitary(size: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
    let raw = DMatrix::from_fn(size, size, |_, _| {
        Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
    });
    let qr = raw.qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..size {
        let d = r[(k, k)];
        let norm = d.norm();
        if norm > 0.0 {
            let phase = d.conj() / norm;
            for i in 0..size {
                q[(i, k)] *= phase;
            }
        }
    }
    q
}

/// Acts a loop element on a verified bank: `m_i ↦ Σ_j (ḡ_ji ∘ σ) m_j`.
///
/// The image is re-verified in the bank's own weight class and must pass;
/// membership is preserved under the action, so a failure here means the
/// inputs were not what they claimed and is raised as an error.
pub fn loop_act(
    model: &ShiftModel,
    measure: &Measure,
    bank: &FilterBank,
    g: &LoopElement,
    tol: f64,
) -> Result<FilterBank> {
    bank.ensure_verified()?;
    bank.ensure_measure(measure)?;
    if g.size() != bank.len() {
        return Err(Error::DimensionMismatch(format!(
            "element of size {} cannot act on a bank of {} filters",
            g.size(),
            bank.len()
        )));
    }
    model.check_depth(g.depth() + 1)?;
    let mut images = Vec::with_capacity(bank.len());
    for i in 0..bank.len() {
        let mut image = CylFn::constant(Complex64::ZERO);
        for (j, m) in bank.filters().iter().enumerate() {
            let coeff = g.entry(model, j, i)?.conj().precompose_shift(model)?;
            image = image.add(&coeff.pointwise_mul(m, model)?, model)?;
        }
        images.push(image.reduce_depth(model, FIBER_DROP_TOL));
    }
    let out = match bank.weight() {
        BankWeight::Plain => FilterBank::new_plain(model, measure, images, tol)?,
        BankWeight::Weighted(cert) => {
            FilterBank::new_weighted(model, measure, cert.clone(), images, tol)?
        }
    };
    out.ensure_verified().map_err(|_| {
        Error::Postcondition(format!(
            "loop action image failed re-verification with deviation {:.3e}",
            out.report().worst_deviation()
        ))
    })?;
    Ok(out)
}

/// Builds the element carrying `first` to `second`: `g_ij = S*(m_i n̄_j)`.
///
/// Both banks must be verified, unweighted, and over the same measure;
/// weighted banks go through [`phi_map`] first. The result is gated on
/// pointwise unitarity, which is exactly membership of the pair in a
/// common orbit, and the action of the result on `first` is checked to
/// return `second` before the element is released.
pub fn connect(
    model: &ShiftModel,
    measure: &Measure,
    first: &FilterBank,
    second: &FilterBank,
    tol: f64,
) -> Result<LoopElement> {
    first.ensure_verified()?;
    second.ensure_verified()?;
    first.ensure_plain()?;
    second.ensure_plain()?;
    first.ensure_measure(measure)?;
    second.ensure_measure(measure)?;
    if first.len() != second.len() {
        return Err(Error::DimensionMismatch(format!(
            "cannot connect banks of {} and {} filters",
            first.len(),
            second.len()
        )));
    }
    let size = first.len();
    let mut entries = Vec::with_capacity(size * size);
    let mut depth = 0usize;
    for m in first.filters() {
        for n in second.filters() {
            let product = m.pointwise_mul(&n.conj(), model)?;
            let product = product.promote(model, product.depth().max(1))?;
            let entry = apply_shift_adjoint(model, measure, &product)?.reduce_depth(model, tol);
            depth = depth.max(entry.depth());
            entries.push(entry);
        }
    }
    let words = model.words(depth)?;
    let mut matrices = vec![DMatrix::<Complex64>::zeros(size, size); words.len()];
    for (i, row) in entries.chunks(size).enumerate() {
        for (j, entry) in row.iter().enumerate() {
            let promoted = entry.promote(model, depth)?;
            for (k, &v) in promoted.values().iter().enumerate() {
                matrices[k][(i, j)] = v;
            }
        }
    }
    let element = LoopElement::new(model, depth, matrices)?;
    let image = loop_act(model, measure, first, &element, tol)?;
    let mut deviation = 0.0f64;
    for (got, want) in image.filters().iter().zip(second.filters()) {
        deviation = deviation.max(got.sup_distance(want, model)?);
    }
    if deviation > tol {
        return Err(Error::Postcondition(format!(
            "connecting element moves the bank within {deviation:.3e} of the target, \
             above tolerance {tol:.3e}"
        )));
    }
    Ok(element)
}

/// Carries a weighted bank to the unweighted class by `m ↦ √φ · m`.
///
/// The image runs the same operators, so it inherits verification; it is
/// re-verified from scratch anyway and must pass. Plain banks are returned
/// unchanged.
pub fn phi_map(
    model: &ShiftModel,
    measure: &Measure,
    bank: &FilterBank,
    tol: f64,
) -> Result<FilterBank> {
    bank.ensure_verified()?;
    bank.ensure_measure(measure)?;
    let cert = match bank.weight() {
        BankWeight::Plain => return Ok(bank.clone()),
        BankWeight::Weighted(cert) => cert,
    };
    let root = sqrt_weight(model, cert)?;
    let images = bank
        .filters()
        .iter()
        .map(|m| Ok(m.pointwise_mul(&root, model)?.reduce_depth(model, FIBER_DROP_TOL)))
        .collect::<Result<Vec<_>>>()?;
    let out = FilterBank::new_plain(model, measure, images, tol)?;
    out.ensure_verified().map_err(|_| {
        Error::Postcondition(format!(
            "weight-map image failed re-verification with deviation {:.3e}",
            out.report().worst_deviation()
        ))
    })?;
    Ok(out)
}

/// Carries an unweighted bank into the class of a certified weight by
/// `m ↦ m / √φ`, inverting [`phi_map`].
pub fn phi_map_inverse(
    model: &ShiftModel,
    measure: &Measure,
    cert: &MarkovianCertificate,
    bank: &FilterBank,
    tol: f64,
) -> Result<FilterBank> {
    bank.ensure_verified()?;
    bank.ensure_measure(measure)?;
    bank.ensure_plain()?;
    let root = sqrt_weight(model, cert)?;
    let inverse_root = root.recip(model)?;
    let images = bank
        .filters()
        .iter()
        .map(|m| {
            Ok(m.pointwise_mul(&inverse_root, model)?
                .reduce_depth(model, FIBER_DROP_TOL))
        })
        .collect::<Result<Vec<_>>>()?;
    let out = FilterBank::new_weighted(model, measure, cert.clone(), images, tol)?;
    out.ensure_verified().map_err(|_| {
        Error::Postcondition(format!(
            "inverse weight-map image failed re-verification with deviation {:.3e}",
            out.report().worst_deviation()
        ))
    })?;
    Ok(out)
}

/// Normalizes a cyclic vector into a unit filter.
///
/// Returns `m = h · (g ∘ σ)` with `g = S*(φ |h|²)^{-1/2}`, so that
/// `S*(φ |m|²) = 1`; pass `None` for the unweighted normalization. The
/// fiber norm `S*(φ |h|²)` must be strictly positive, otherwise the vector
/// generates a degenerate fiber and the offending word is reported.
pub fn normalize_cyclic(
    model: &ShiftModel,
    measure: &Measure,
    phi: Option<&CylFn>,
    h: &CylFn,
) -> Result<CylFn> {
    let weighted = match phi {
        Some(phi) => phi.pointwise_mul(&h.abs_squared(), model)?,
        None => h.abs_squared(),
    };
    let weighted = weighted.promote(model, weighted.depth().max(1))?;
    let fiber_norm = apply_shift_adjoint(model, measure, &weighted)?;
    let values = fiber_norm.real_values(1e-9)?;
    for (w, &v) in model.words(fiber_norm.depth())?.iter().zip(&values) {
        if v <= FIBER_DROP_TOL {
            return Err(Error::NotPositive {
                context: "cyclic vector has a vanishing fiber norm",
                value: v,
                word: w.to_string(),
            });
        }
    }
    let scale = fiber_norm.sqrt_nonneg(model)?.recip(model)?;
    let m = h.pointwise_mul(&scale.precompose_shift(model)?, model)?;
    Ok(m.reduce_depth(model, FIBER_DROP_TOL))
}

/// Outcome of the per-fiber cyclic construction of a filter family.
///
/// The deepest level is treated as a module over functions of the shifted
/// coordinates, with one fiber per word one level up. Coordinate directions
/// of each fiber are orthogonal under the conditional inner product, so
/// orthonormalization reduces to per-branch normalization; branches of
/// negligible conditional weight are dropped and lower the fiber rank.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CyclicConstruction {
    filters: Vec<CylFn>,
    weight: BankWeight,
    measure_id: u64,
    fiber_ranks: Vec<usize>,
    total_rank: usize,
    expected_rank: usize,
    frame_deviation: f64,
    normalization_deviation: f64,
    complete: bool,
    cuntz: Option<CuntzReport>,
}

impl CyclicConstruction {
    /// The constructed filters, one per fiber slot.
    pub fn filters(&self) -> &[CylFn] {
        &self.filters
    }

    /// Rank contributed by each fiber, in word order one level above the
    /// deepest.
    pub fn fiber_ranks(&self) -> &[usize] {
        &self.fiber_ranks
    }

    /// Sum of the fiber ranks.
    pub fn total_rank(&self) -> usize {
        self.total_rank
    }

    /// Dimension of the deepest level the ranks must fill.
    pub fn expected_rank(&self) -> usize {
        self.expected_rank
    }

    /// `‖Σ_i T_i T*_i - I‖` on the deepest level.
    pub fn frame_deviation(&self) -> f64 {
        self.frame_deviation
    }

    /// Largest defect of `S*(φ |m_i|²)` from its support indicator.
    pub fn normalization_deviation(&self) -> f64 {
        self.normalization_deviation
    }

    /// Whether the ranks fill the deepest level with a tight frame.
    pub fn complete(&self) -> bool {
        self.complete
    }

    /// The full verification report, present exactly when the model has a
    /// constant preimage-fiber cardinality.
    pub fn cuntz(&self) -> Option<&CuntzReport> {
        self.cuntz.as_ref()
    }

    /// Converts the construction into a verified bank.
    ///
    /// Requires the constant-fiber case with a passing report; variable-rank
    /// frames stay frames.
    pub fn into_bank(self) -> Result<FilterBank> {
        match self.cuntz {
            Some(report) if report.pass() => Ok(FilterBank {
                filters: self.filters,
                weight: self.weight,
                measure_id: self.measure_id,
                report,
            }),
            Some(report) => Err(Error::BankUnverified(format!(
                "cyclic construction failed verification with deviation {:.3e}",
                report.worst_deviation()
            ))),
            None => Err(Error::VariableFiberCardinality(
                "cyclic construction produced a variable-rank frame, not a bank".into(),
            )),
        }
    }
}

/// Builds a canonical filter family by normalizing the coordinate
/// directions of every preimage fiber at the deepest level.
///
/// Slot `i` collects the `i`-th admissible branch (in letter order) of each
/// fiber, normalized by its conditional weight `φ(aw) μ(aw) / μ(w)`. For
/// constant-fiber models the result is a full bank and the returned report
/// is the complete verification; models with shrinking fibers yield a
/// variable-rank tight frame with per-fiber ranks recorded instead.
pub fn cyclic_construct(
    model: &ShiftModel,
    measure: &Measure,
    weight: &BankWeight,
    tol: f64,
) -> Result<CyclicConstruction> {
    if let BankWeight::Weighted(cert) = weight {
        cert.ensure(measure)?;
    }
    let root = weight.root(model)?;
    let budget = model.depth_budget();
    let quotient = budget - 1;
    let words_q = model.words(quotient)?;
    let mass_q = measure.mass(quotient)?;
    let mass_d = measure.mass(budget)?;
    let phi_vals = weight.phi().promote(model, budget)?.real_values(1e-9)?;
    let dim = model.dim(budget)?;

    let slots = words_q
        .iter()
        .map(|w| model.prefix_letters(w).len())
        .max()
        .unwrap_or(0);
    if slots == 0 {
        return Err(Error::InvalidModel(
            "no admissible one-letter extensions at the quotient level".into(),
        ));
    }

    let mut values = vec![vec![Complex64::ZERO; dim]; slots];
    let mut supported = vec![vec![false; words_q.len()]; slots];
    let mut fiber_ranks = vec![0usize; words_q.len()];
    for (k, w) in words_q.iter().enumerate() {
        for (slot, a) in model.prefix_letters(w).into_iter().enumerate() {
            let extended = w.with_prefix(a);
            let index = model.index_of(&extended).expect("admissible extension");
            let conditional = phi_vals[index] * mass_d[index] / mass_q[k];
            if conditional <= FIBER_DROP_TOL {
                continue;
            }
            values[slot][index] = Complex64::new(1.0 / conditional.sqrt(), 0.0);
            supported[slot][k] = true;
            fiber_ranks[k] += 1;
        }
    }
    let filters: Vec<CylFn> = values
        .into_iter()
        .map(|v| Ok(CylFn::from_values(model, budget, v)?.reduce_depth(model, FIBER_DROP_TOL)))
        .collect::<Result<_>>()?;
    let total_rank: usize = fiber_ranks.iter().sum();

    let mut accumulated = DMatrix::<Complex64>::zeros(dim, dim);
    let mut normalization_deviation = 0.0f64;
    let phi = weight.phi();
    for (slot, m) in filters.iter().enumerate() {
        let symbol = m.pointwise_mul(&root, model)?;
        let t = weighted_compose(model, &symbol, budget - 1)?;
        let tstar = weighted_adjoint(model, measure, &symbol, budget)?;
        accumulated += t.compose(model, &tstar)?.matrix();

        let weighted = phi
            .pointwise_mul(&m.abs_squared(), model)?
            .promote(model, budget)?;
        let fiber_norm = apply_shift_adjoint(model, measure, &weighted)?;
        for (k, &v) in fiber_norm.values().iter().enumerate() {
            let target = if supported[slot][k] { 1.0 } else { 0.0 };
            normalization_deviation = normalization_deviation.max((v.re - target).abs());
            normalization_deviation = normalization_deviation.max(v.im.abs());
        }
    }
    let frame_deviation = linalg::op_inf_norm(&(accumulated - linalg::identity(dim)));

    let cuntz = match model.fiber_cardinality() {
        Ok(_) => Some(match weight {
            BankWeight::Plain => verify_cuntz_plain(model, measure, &filters, tol)?,
            BankWeight::Weighted(cert) => verify_cuntz(model, measure, cert, &filters, tol)?,
        }),
        Err(Error::VariableFiberCardinality(_)) => None,
        Err(e) => return Err(e),
    };

    let expected_rank = dim;
    Ok(CyclicConstruction {
        filters,
        weight: weight.clone(),
        measure_id: measure.fingerprint(),
        fiber_ranks,
        total_rank,
        expected_rank,
        frame_deviation,
        normalization_deviation,
        complete: total_rank == expected_rank
            && frame_deviation <= tol
            && normalization_deviation <= tol,
        cuntz,
    })
}
