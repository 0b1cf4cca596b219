//! Dense linear algebra in the measure-weighted metric.
//!
//! The cylinder inner product is `⟨u, v⟩ = v† W u` with `W = diag(masses)`.
//! Everything here maps vectors to "tilde" coordinates `ṽ = W^{1/2} v`,
//! where that inner product becomes the standard one, runs ordinary
//! QR/SVD machinery there, and maps back.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub(crate) type CMat = DMatrix<Complex64>;
pub(crate) type CVec = DVector<Complex64>;

/// `W^{1/2} M` for `W = diag(masses)`.
pub(crate) fn to_tilde(m: &CMat, masses: &[f64]) -> CMat {
    let mut out = m.clone();
    for (i, &w) in masses.iter().enumerate() {
        let s = Complex64::new(w.sqrt(), 0.0);
        for j in 0..out.ncols() {
            out[(i, j)] *= s;
        }
    }
    out
}

/// `W^{-1/2} M` for `W = diag(masses)`.
pub(crate) fn from_tilde(m: &CMat, masses: &[f64]) -> CMat {
    let mut out = m.clone();
    for (i, &w) in masses.iter().enumerate() {
        let s = Complex64::new(1.0 / w.sqrt(), 0.0);
        for j in 0..out.ncols() {
            out[(i, j)] *= s;
        }
    }
    out
}

/// Largest absolute entry.
pub(crate) fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Operator norm induced by the sup norm: largest absolute row sum.
pub(crate) fn op_inf_norm(m: &CMat) -> f64 {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Complex identity matrix.
pub(crate) fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Singular values, sorted in decreasing order.
pub(crate) fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).expect("singular values are finite"));
    sv
}

/// Number of singular values above `tol`.
pub(crate) fn rank(m: &CMat, tol: f64) -> usize {
    singular_values(m).into_iter().filter(|s| *s > tol).count()
}

/// `W`-orthonormal basis of the column span, dropping singular values
/// at or below `drop`.
///
/// Returns a matrix whose columns satisfy `Q† W Q = I` and span the same
/// space as the columns of `cols`.
pub(crate) fn weighted_onb(cols: &CMat, masses: &[f64], drop: f64) -> CMat {
    if cols.ncols() == 0 {
        return CMat::zeros(cols.nrows(), 0);
    }
    let tilde = to_tilde(cols, masses);
    let svd = tilde.svd(true, false);
    let u = svd.u.expect("requested U");
    let mut keep = Vec::new();
    for (j, s) in svd.singular_values.iter().enumerate() {
        if *s > drop {
            keep.push(j);
        }
    }
    let mut q = CMat::zeros(cols.nrows(), keep.len());
    for (out_j, &j) in keep.iter().enumerate() {
        q.set_column(out_j, &u.column(j));
    }
    from_tilde(&q, masses)
}

/// Basis of the kernel of `m`, with `W`-orthonormal columns.
///
/// Kernel membership is decided on `m† m`, whose spectrum has a large gap
/// for the well-conditioned operators in this crate; directions with
/// singular value at most `tol` count as kernel.
pub(crate) fn weighted_kernel_onb(m: &CMat, masses: &[f64], tol: f64) -> CMat {
    let gram = m.adjoint() * m;
    let n = gram.nrows();
    let svd = gram.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut keep = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s <= tol {
            keep.push(i);
        }
    }
    let mut basis = CMat::zeros(n, keep.len());
    for (out_j, &i) in keep.iter().enumerate() {
        // Rows of V^H are the right singular vectors, conjugated.
        for r in 0..n {
            basis[(r, out_j)] = v_t[(i, r)].conj();
        }
    }
    weighted_onb(&basis, masses, 1e-12)
}

/// Cosines of the principal angles between two `W`-orthonormal frames,
/// sorted in decreasing order and clamped to `[0, 1]`.
pub(crate) fn principal_cosines(q1: &CMat, q2: &CMat, masses: &[f64]) -> Vec<f64> {
    if q1.ncols() == 0 || q2.ncols() == 0 {
        return Vec::new();
    }
    let a = to_tilde(q1, masses).adjoint() * to_tilde(q2, masses);
    singular_values(&a)
        .into_iter()
        .map(|s| s.clamp(0.0, 1.0))
        .collect()
}

/// `W`-orthonormal basis of the intersection of subspaces.
///
/// Takes `W`-orthonormal frames, forms the product of their orthogonal
/// projectors in tilde coordinates, iterates it to convergence (squaring,
/// with singular values clamped to at most one to keep the iteration
/// stable), and keeps the directions whose singular value survives above
/// `drop`. For nested subspaces one product is already exact.
pub(crate) fn intersect_subspaces(frames: &[CMat], masses: &[f64], drop: f64) -> CMat {
    assert!(!frames.is_empty(), "need at least one subspace");
    let n = frames[0].nrows();
    let mut m = identity(n);
    for q in frames {
        let qt = to_tilde(q, masses);
        m = (&qt * qt.adjoint()) * m;
    }
    for _ in 0..60 {
        let next = &m * &m;
        if max_abs(&(&next - &m)) <= 1e-13 {
            break;
        }
        // Re-clamp singular values so roundoff above one cannot blow up.
        let svd = next.svd(true, true);
        let u = svd.u.expect("requested U");
        let v_t = svd.v_t.expect("requested V^T");
        let mut s = CMat::zeros(u.ncols(), v_t.nrows());
        for (i, sv) in svd.singular_values.iter().enumerate() {
            s[(i, i)] = Complex64::new(sv.min(1.0), 0.0);
        }
        m = u * s * v_t;
    }
    let svd = m.svd(true, false);
    let u = svd.u.expect("requested U");
    let mut keep = Vec::new();
    for (j, s) in svd.singular_values.iter().enumerate() {
        if *s > drop {
            keep.push(j);
        }
    }
    let mut q = CMat::zeros(n, keep.len());
    for (out_j, &j) in keep.iter().enumerate() {
        q.set_column(out_j, &u.column(j));
    }
    from_tilde(&q, masses)
}
