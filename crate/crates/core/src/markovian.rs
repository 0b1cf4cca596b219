//! Markovian weight functions and their transport between measures.
//!
//! A nonnegative weight `φ` is Markovian for `(σ, μ)` when
//! `∫ (f∘σ) φ dμ = ∫ f dμ` for every integrable `f`; equivalently, when the
//! fiber averages `S*(φ)` are identically one. Certification quantifies
//! over the deepest cylinder algebra the model carries, which is the finite
//! stand-in for "all of L¹" (cylinder functions are dense in the limit).
//!
//! The certified set is convex, it is an affine slice of depth-`d`
//! functions whose codimension is the number of coarser cylinders, and a
//! positive function `g` acts on it by
//! `α_g(φ) = (g∘σ / g) · φ`, carrying weights for `μ` to weights for
//! `g dμ`. A second, conditional-expectation-based pairing links weights
//! across equivalent measures pointwise; see [`corresponding_weight`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{apply_rokhlin, apply_shift_adjoint};
use crate::symspace::{CylFn, Measure, MeasureKind, ShiftModel};

/// Outcome of certifying one weight function against one measure.
///
/// A certificate is a measurement, not a guarantee: `valid` records whether
/// the observed deviation stayed within the requested tolerance. Operations
/// that require a Markovian weight call [`MarkovianCertificate::ensure`],
/// which also refuses certificates issued for a different measure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarkovianCertificate {
    phi: CylFn,
    measure_id: u64,
    deviation: f64,
    tolerance: f64,
    valid: bool,
    /// Power of the shift the weight is certified against (1 for `σ`).
    order: usize,
}

impl MarkovianCertificate {
    /// The certified weight.
    pub fn phi(&self) -> &CylFn {
        &self.phi
    }

    /// Fingerprint of the measure the certificate was issued for.
    pub fn measure_id(&self) -> u64 {
        self.measure_id
    }

    /// Largest observed deviation of the fiber averages from one.
    pub fn deviation(&self) -> f64 {
        self.deviation
    }

    /// Tolerance the certificate was requested at.
    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Whether the deviation stayed within the tolerance.
    pub fn is_valid(&self) -> bool {
        self.valid
    }

    /// Power of the shift the certificate refers to.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Errors unless the certificate is valid and was issued for `measure`.
    pub fn ensure(&self, measure: &Measure) -> Result<()> {
        if self.measure_id != measure.fingerprint() {
            return Err(Error::MeasureMismatch {
                expected: self.measure_id,
                found: measure.fingerprint(),
            });
        }
        if !self.valid {
            return Err(Error::NotMarkovian {
                deviation: self.deviation,
                tolerance: self.tolerance,
            });
        }
        Ok(())
    }
}

/// Requires `phi` to be real with values `≥ -1e-12`; returns nothing on
/// success so callers can keep the complex representation.
fn require_nonnegative(model: &ShiftModel, phi: &CylFn) -> Result<()> {
    let values = phi.real_values(1e-9)?;
    for (w, &v) in model.words(phi.depth())?.iter().zip(&values) {
        if v < -1e-12 {
            return Err(Error::NotPositive {
                context: "Markovian weight must be nonnegative",
                value: v,
                word: w.to_string(),
            });
        }
    }
    Ok(())
}

/// Requires `f` to be real and strictly positive.
fn require_positive(model: &ShiftModel, f: &CylFn, context: &'static str) -> Result<()> {
    let values = f.real_values(1e-9)?;
    for (w, &v) in model.words(f.depth())?.iter().zip(&values) {
        if v <= 0.0 {
            return Err(Error::NotPositive {
                context,
                value: v,
                word: w.to_string(),
            });
        }
    }
    Ok(())
}

/// Certifies `phi` as a Markovian weight for `(σ, measure)`.
///
/// The deviation is the larger of two routes: the pointwise fiber averages
/// `‖S*(φ) - 1‖_∞` computed at the deepest level the budget allows, and the
/// defining integral identity `∫(f∘σ)φ dμ = ∫f dμ` evaluated on every basis
/// vector of the coarser algebra. Negative or non-real weights are
/// rejected; a deviation beyond `tol` yields an invalid certificate, not an
/// error.
pub fn is_markovian(
    model: &ShiftModel,
    measure: &Measure,
    phi: &CylFn,
    tol: f64,
) -> Result<MarkovianCertificate> {
    require_nonnegative(model, phi)?;
    certify_power(model, measure, phi, 1, tol)
}

/// Certifies `psi` against the `k`-th power of the shift:
/// `∫ (f∘σᵏ) ψ dμ = ∫ f dμ`, equivalently `S*ᵏ(ψ) = 1`.
pub fn certify_power(
    model: &ShiftModel,
    measure: &Measure,
    psi: &CylFn,
    k: usize,
    tol: f64,
) -> Result<MarkovianCertificate> {
    let budget = model.depth_budget();
    if k == 0 || k > budget {
        return Err(Error::DepthRange {
            depth: k,
            operation: "shift power for certification",
            valid: format!("1..={budget}"),
        });
    }
    require_nonnegative(model, psi)?;
    let mut averaged = psi.promote(model, budget)?;
    for _ in 0..k {
        averaged = apply_shift_adjoint(model, measure, &averaged)?;
    }
    let fiber_dev = averaged.sup_distance(&CylFn::one(), model)?;

    let mut integral_dev = 0.0f64;
    let coarse = budget - k;
    for (w, &mass) in model.words(coarse)?.iter().zip(measure.mass(coarse)?) {
        let test = CylFn::indicator(model, w)?
            .precompose_shift_pow(model, k)?
            .pointwise_mul(psi, model)?;
        let lhs = measure.integral(model, &test)?;
        integral_dev = integral_dev.max((lhs.re - mass).abs().max(lhs.im.abs()));
    }

    let deviation = fiber_dev.max(integral_dev);
    Ok(MarkovianCertificate {
        phi: psi.clone(),
        measure_id: measure.fingerprint(),
        deviation,
        tolerance: tol,
        valid: deviation <= tol,
        order: k,
    })
}

/// The action of a positive function on weights:
/// `α_f(φ) = (f∘σ / f) · φ`.
///
/// Purely pointwise; certification of the image belongs to [`transport`].
pub fn alpha(model: &ShiftModel, f: &CylFn, phi: &CylFn) -> Result<CylFn> {
    require_positive(model, f, "action density must be strictly positive")?;
    f.precompose_shift(model)?
        .pointwise_mul(&f.recip(model)?, model)?
        .pointwise_mul(phi, model)
}

/// How far `f` is from fixing `phi` under the action:
/// `‖α_f(φ) - φ‖_∞`. Nonzero whenever `f∘σ / f` is nonconstant on the
/// support of `φ`, which is the freeness of the action.
pub fn alpha_fixed_point_gap(model: &ShiftModel, f: &CylFn, phi: &CylFn) -> Result<f64> {
    alpha(model, f, phi)?.sup_distance(phi, model)
}

/// A weight carried to an equivalent measure, with its new certificate.
#[derive(Debug, Clone)]
pub struct Transported {
    /// The weight for the new measure.
    pub weight: CylFn,
    /// The reweighted measure the certificate refers to.
    pub measure: Measure,
    /// Certificate of the weight against the new measure.
    pub certificate: MarkovianCertificate,
}

/// Carries a certified weight for `measure` to the equivalent measure
/// `g dμ` via `α_g`, and certifies the image there.
///
/// The map is a bijection between the two weight sets: transporting the
/// image by `1/g` relative to the new measure returns the original weight.
pub fn transport(
    model: &ShiftModel,
    measure: &Measure,
    cert: &MarkovianCertificate,
    g: &CylFn,
    tol: f64,
) -> Result<Transported> {
    cert.ensure(measure)?;
    require_positive(model, g, "reweighting density must be strictly positive")?;
    let weight = alpha(model, g, cert.phi())?;
    let nu = Measure::new(
        model,
        MeasureKind::density(measure.kind().clone(), g.clone()),
    )?;
    let certificate = is_markovian(model, &nu, &weight, tol)?;
    certificate.ensure(&nu)?;
    Ok(Transported {
        weight,
        measure: nu,
        certificate,
    })
}

/// Conditional expectation of `h` onto shift-pulled-back functions,
/// computed through the fiber measures so it applies to every
/// quasi-invariant measure.
///
/// Evaluated at the deepest level and reduced afterwards: the conditional
/// weights of a fiber can depend on letters beyond the depth of `h`
/// (admissibility constraints do this), so averaging at `h`'s own depth
/// would silently coarsen them.
fn expectation_of(model: &ShiftModel, measure: &Measure, h: &CylFn) -> Result<CylFn> {
    let lifted = h.promote(model, model.depth_budget())?;
    Ok(apply_rokhlin(model, measure, &lifted)?
        .precompose_shift(model)?
        .reduce_depth(model, 1e-12))
}

/// Largest spread of `phi` over any one-letter-extension fiber; zero means
/// `phi` factors through the shift.
pub fn fiber_spread(model: &ShiftModel, phi: &CylFn) -> Result<f64> {
    if phi.depth() == 0 {
        return Ok(0.0);
    }
    let d = phi.depth();
    let mut worst = 0.0f64;
    for w in model.words(d - 1)? {
        let branches: Vec<_> = model
            .prefix_letters(w)
            .into_iter()
            .map(|a| phi.value_at(model, &w.with_prefix(a)))
            .collect::<Result<_>>()?;
        for x in &branches {
            for y in &branches {
                worst = worst.max((x - y).norm());
            }
        }
    }
    Ok(worst)
}

/// Pointwise pairing deviation `‖𝔼(h)·ψ - φ·(h∘σ)‖_∞` between weights for
/// `μ` and for `h dμ`.
///
/// This is a diagnostic: it vanishes for the pair produced by
/// [`corresponding_weight`], while the `α_h`-transported weight generally
/// satisfies only the integral identities, not this pointwise one.
pub fn pairing_deviation(
    model: &ShiftModel,
    measure: &Measure,
    h: &CylFn,
    psi: &CylFn,
    phi: &CylFn,
) -> Result<f64> {
    require_positive(model, h, "reweighting density must be strictly positive")?;
    let lhs = expectation_of(model, measure, h)?.pointwise_mul(psi, model)?;
    let rhs = phi.pointwise_mul(&h.precompose_shift(model)?, model)?;
    lhs.sup_distance(&rhs, model)
}

/// The pointwise-paired weight for `h dμ`:
/// `ψ = φ · (h∘σ) / 𝔼(h)`.
///
/// Requires `φ` to factor through the shift (take equal values on each
/// preimage fiber), which makes both sides of the pairing measurable with
/// respect to the pulled-back algebra; the sole such weight for a given
/// measure is its forward derivative. The image is certified against
/// `h dμ` and satisfies [`pairing_deviation`]` = 0` with `φ` exactly.
pub fn corresponding_weight(
    model: &ShiftModel,
    measure: &Measure,
    cert: &MarkovianCertificate,
    h: &CylFn,
    tol: f64,
) -> Result<Transported> {
    cert.ensure(measure)?;
    require_positive(model, h, "reweighting density must be strictly positive")?;
    let spread = fiber_spread(model, cert.phi())?;
    if spread > tol {
        return Err(Error::NotShiftMeasurable {
            deviation: spread,
            tolerance: tol,
        });
    }
    let expectation = expectation_of(model, measure, h)?;
    let weight = cert
        .phi()
        .pointwise_mul(&h.precompose_shift(model)?, model)?
        .pointwise_mul(&expectation.recip(model)?, model)?;
    let nu = Measure::new(
        model,
        MeasureKind::density(measure.kind().clone(), h.clone()),
    )?;
    let certificate = is_markovian(model, &nu, &weight, tol)?;
    certificate.ensure(&nu)?;
    Ok(Transported {
        weight,
        measure: nu,
        certificate,
    })
}

/// The product `ψ = (φ_k∘σ^{k-1}) ⋯ (φ_2∘σ) φ_1` of certified weights,
/// certified against the `k`-th power of the shift.
pub fn power_product(
    model: &ShiftModel,
    measure: &Measure,
    certs: &[MarkovianCertificate],
    tol: f64,
) -> Result<(CylFn, MarkovianCertificate)> {
    if certs.is_empty() {
        return Err(Error::DimensionMismatch(
            "power product needs at least one weight".into(),
        ));
    }
    for cert in certs {
        cert.ensure(measure)?;
        if cert.order() != 1 {
            return Err(Error::DimensionMismatch(format!(
                "power product combines order-1 weights, got order {}",
                cert.order()
            )));
        }
    }
    let mut psi = certs[0].phi().clone();
    for (i, cert) in certs.iter().enumerate().skip(1) {
        let shifted = cert.phi().precompose_shift_pow(model, i)?;
        psi = psi.pointwise_mul(&shifted, model)?;
    }
    let certificate = certify_power(model, measure, &psi, certs.len(), tol)?;
    certificate.ensure(measure)?;
    Ok((psi, certificate))
}

/// Dimension of the kernel of the certification map `φ ↦ S*(φ) - 1` on
/// depth-`d` functions.
///
/// The map is affine with surjective linear part, so certified weights of
/// depth `d` form an affine subspace of this dimension, namely
/// `dim V_d - dim V_{d-1}`: one linear constraint per coarser cylinder.
pub fn certification_kernel_dim(
    model: &ShiftModel,
    measure: &Measure,
    depth: usize,
) -> Result<usize> {
    let sstar = crate::operators::adjoint_op(model, measure, depth)?;
    Ok(model.dim(depth)? - sstar.rank(measure, 1e-10)?)
}

/// Draws a strictly positive certified weight at the given depth by
/// sampling each fiber and rescaling its average to one.
pub fn random_markovian(
    model: &ShiftModel,
    measure: &Measure,
    depth: usize,
    rng: &mut impl rand::Rng,
) -> Result<CylFn> {
    if depth == 0 || depth > model.depth_budget() {
        return Err(Error::DepthRange {
            depth,
            operation: "random Markovian weight",
            valid: format!("1..={}", model.depth_budget()),
        });
    }
    let mut values = vec![num_complex::Complex64::ZERO; model.dim(depth)?];
    for w in model.words(depth - 1)? {
        let mass_w = measure.mass_of(model, w)?;
        let letters = model.prefix_letters(w);
        let draws: Vec<f64> = letters
            .iter()
            .map(|_| rng.random_range(0.2..=1.8))
            .collect();
        let denom: f64 = letters
            .iter()
            .zip(&draws)
            .map(|(&a, t)| t * measure.mass_of(model, &w.with_prefix(a)).unwrap())
            .sum();
        for (&a, t) in letters.iter().zip(&draws) {
            let u = w.with_prefix(a);
            let idx = model.index_of(&u).expect("extension stays admissible");
            values[idx] = num_complex::Complex64::new(t * mass_w / denom, 0.0);
        }
    }
    CylFn::from_values(model, depth, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symspace::Word;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn uniform(depth: usize) -> (ShiftModel, Measure) {
        let model = ShiftModel::full_shift(2, depth).unwrap();
        let mu = Measure::new(&model, MeasureKind::bernoulli(vec![0.5, 0.5])).unwrap();
        (model, mu)
    }

    fn skew(depth: usize) -> (ShiftModel, Measure) {
        let model = ShiftModel::full_shift(2, depth).unwrap();
        let mu = Measure::new(
            &model,
            MeasureKind::markov(
                vec![1.0 / 3.0, 2.0 / 3.0],
                vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            ),
        )
        .unwrap();
        (model, mu)
    }

    fn golden(depth: usize) -> (ShiftModel, Measure) {
        let model = ShiftModel::with_admissibility(2, &[true, true, true, false], depth).unwrap();
        let mu = Measure::new(
            &model,
            MeasureKind::markov(
                vec![2.0 / 3.0, 1.0 / 3.0],
                vec![vec![0.5, 0.5], vec![1.0, 0.0]],
            ),
        )
        .unwrap();
        (model, mu)
    }

    #[test]
    fn constants_certify_exactly_on_invariant_measures() {
        let (model, mu) = uniform(3);
        let cert = is_markovian(&model, &mu, &CylFn::one(), 1e-12).unwrap();
        assert!(cert.is_valid());
        assert!(cert.deviation() < 1e-15);
        assert_eq!(cert.order(), 1);
    }

    #[test]
    fn forward_derivative_certifies_on_non_invariant_measures() {
        for (model, mu) in [skew(3), golden(3)] {
            let rn = crate::operators::rn_data(&model, &mu, 1).unwrap();
            let cert = is_markovian(&model, &mu, rn.omega(), 1e-12).unwrap();
            assert!(cert.is_valid(), "deviation {}", cert.deviation());
        }
    }

    #[test]
    fn indicator_scaling_decides_membership() {
        let (model, mu) = uniform(3);
        let zero_block = CylFn::from_values(&model, 1, vec![c(2.0), c(0.0)]).unwrap();
        let cert = is_markovian(&model, &mu, &zero_block, 1e-12).unwrap();
        assert!(cert.is_valid());
        let unscaled = CylFn::from_values(&model, 1, vec![c(1.0), c(0.0)]).unwrap();
        let cert = is_markovian(&model, &mu, &unscaled, 1e-12).unwrap();
        assert!(!cert.is_valid());
        assert!((cert.deviation() - 0.5).abs() < 1e-14);
        assert!(matches!(
            cert.ensure(&mu),
            Err(Error::NotMarkovian { .. })
        ));
    }

    #[test]
    fn negative_and_complex_weights_are_rejected() {
        let (model, mu) = uniform(3);
        let negative = CylFn::from_values(&model, 1, vec![c(2.5), c(-0.5)]).unwrap();
        assert!(matches!(
            is_markovian(&model, &mu, &negative, 1e-12),
            Err(Error::NotPositive { .. })
        ));
        let complex =
            CylFn::from_values(&model, 1, vec![Complex64::new(1.0, 0.3), c(1.0)]).unwrap();
        assert!(is_markovian(&model, &mu, &complex, 1e-12).is_err());
    }

    #[test]
    fn certificates_refuse_foreign_measures() {
        let (model, mu) = uniform(3);
        let (_, other) = skew(3);
        let cert = is_markovian(&model, &mu, &CylFn::one(), 1e-12).unwrap();
        assert!(matches!(
            cert.ensure(&other),
            Err(Error::MeasureMismatch { .. })
        ));
    }

    #[test]
    fn transport_example_values_are_frozen() {
        let (model, mu) = uniform(3);
        let cert = is_markovian(&model, &mu, &CylFn::one(), 1e-12).unwrap();
        let g = CylFn::from_values(&model, 1, vec![c(2.0), c(1.0)]).unwrap();
        let out = transport(&model, &mu, &cert, &g, 1e-12).unwrap();
        // (g∘σ)/g over 00, 01, 10, 11.
        let want =
            CylFn::from_values(&model, 2, vec![c(1.0), c(0.5), c(2.0), c(1.0)]).unwrap();
        assert!(out.weight.sup_distance(&want, &model).unwrap() < 1e-14);
        assert!(out.certificate.is_valid());
        assert_eq!(out.certificate.measure_id(), out.measure.fingerprint());
        assert_ne!(out.measure.fingerprint(), mu.fingerprint());
    }

    #[test]
    fn transport_round_trip_restores_the_weight() {
        let (model, mu) = skew(3);
        let rn = crate::operators::rn_data(&model, &mu, 1).unwrap();
        let cert = is_markovian(&model, &mu, rn.omega(), 1e-12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let g = CylFn::random_real(&model, 1, 0.4, 2.5, &mut rng).unwrap();
        let there = transport(&model, &mu, &cert, &g, 1e-11).unwrap();
        let back = transport(
            &model,
            &there.measure,
            &there.certificate,
            &g.recip(&model).unwrap(),
            1e-11,
        )
        .unwrap();
        assert!(back.weight.sup_distance(rn.omega(), &model).unwrap() < 1e-12);
    }

    #[test]
    fn action_composes_and_is_free() {
        let (model, mu) = uniform(3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let phi = random_markovian(&model, &mu, 1, &mut rng).unwrap();
        let f = CylFn::random_real(&model, 1, 0.3, 2.0, &mut rng).unwrap();
        let g = CylFn::random_real(&model, 1, 0.3, 2.0, &mut rng).unwrap();
        let nested = alpha(&model, &f, &alpha(&model, &g, &phi).unwrap()).unwrap();
        let joined = alpha(&model, &f.pointwise_mul(&g, &model).unwrap(), &phi).unwrap();
        assert!(nested.sup_distance(&joined, &model).unwrap() < 1e-12);
        // Identity acts trivially; a nonconstant density moves the weight.
        assert!(alpha_fixed_point_gap(&model, &CylFn::one(), &phi).unwrap() < 1e-15);
        let skewed = CylFn::from_values(&model, 1, vec![c(2.0), c(1.0)]).unwrap();
        assert!(alpha_fixed_point_gap(&model, &skewed, &phi).unwrap() > 0.1);
    }

    #[test]
    fn action_images_stay_markovian_for_the_reweighted_measure() {
        let (model, mu) = uniform(3);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let phi = random_markovian(&model, &mu, 2, &mut rng).unwrap();
            let cert = is_markovian(&model, &mu, &phi, 1e-11).unwrap();
            assert!(cert.is_valid());
            let f = CylFn::random_real(&model, 1, 0.3, 2.0, &mut rng).unwrap();
            let out = transport(&model, &mu, &cert, &f, 1e-11).unwrap();
            assert!(out.certificate.is_valid());
        }
    }

    #[test]
    fn power_product_of_forward_derivatives_is_frozen() {
        let (model, mu) = skew(3);
        let rn = crate::operators::rn_data(&model, &mu, 1).unwrap();
        let cert = is_markovian(&model, &mu, rn.omega(), 1e-12).unwrap();
        let (psi, power_cert) =
            power_product(&model, &mu, &[cert.clone(), cert.clone()], 1e-12).unwrap();
        // ψ(x) = 4 π_{x₂} π_{x₃} with π = (1/3, 2/3).
        let pi = [1.0 / 3.0, 2.0 / 3.0];
        let want = CylFn::from_fn(&model, 3, |w| {
            c(4.0 * pi[w.letters()[1] as usize] * pi[w.letters()[2] as usize])
        })
        .unwrap();
        assert!(psi.sup_distance(&want, &model).unwrap() < 1e-14);
        assert_eq!(power_cert.order(), 2);
        assert!(power_cert.is_valid(), "deviation {}", power_cert.deviation());
        // A single factor is the weight itself.
        let (single, single_cert) = power_product(&model, &mu, &[cert], 1e-12).unwrap();
        assert!(single.sup_distance(rn.omega(), &model).unwrap() < 1e-15);
        assert_eq!(single_cert.order(), 1);
    }

    #[test]
    fn power_product_of_constants_is_constant() {
        let (model, mu) = uniform(4);
        let cert = is_markovian(&model, &mu, &CylFn::one(), 1e-12).unwrap();
        let (psi, power_cert) =
            power_product(&model, &mu, &vec![cert; 3], 1e-12).unwrap();
        assert!(psi.sup_distance(&CylFn::one(), &model).unwrap() < 1e-15);
        assert!(power_cert.is_valid());
        assert_eq!(power_cert.order(), 3);
    }

    #[test]
    fn pairing_vanishes_for_the_corresponding_weight() {
        // Trivial density: both sides reduce to the same weight.
        let (model, mu) = uniform(3);
        let one = CylFn::one();
        assert!(pairing_deviation(&model, &mu, &one, &one, &one).unwrap() < 1e-15);

        // The paired weight satisfies the pointwise identity and certifies.
        let cert = is_markovian(&model, &mu, &one, 1e-12).unwrap();
        let h = CylFn::from_values(&model, 1, vec![c(2.0), c(1.0)]).unwrap();
        let paired = corresponding_weight(&model, &mu, &cert, &h, 1e-12).unwrap();
        let want = CylFn::from_values(
            &model,
            2,
            vec![c(4.0 / 3.0), c(2.0 / 3.0), c(4.0 / 3.0), c(2.0 / 3.0)],
        )
        .unwrap();
        assert!(paired.weight.sup_distance(&want, &model).unwrap() < 1e-14);
        assert!(paired.certificate.is_valid());
        assert!(
            pairing_deviation(&model, &mu, &h, &paired.weight, &one).unwrap() < 1e-14
        );

        // The α-transported weight certifies too, but satisfies only the
        // integral identities: its pointwise pairing gap is exactly one.
        let transported = transport(&model, &mu, &cert, &h, 1e-12).unwrap();
        let gap = pairing_deviation(&model, &mu, &h, &transported.weight, &one).unwrap();
        assert!((gap - 1.0).abs() < 1e-13, "got {gap}");
    }

    #[test]
    fn pairing_holds_for_forward_derivatives_under_random_reweighting() {
        let (model, mu) = skew(4);
        let rn = crate::operators::rn_data(&model, &mu, 1).unwrap();
        let cert = is_markovian(&model, &mu, rn.omega(), 1e-12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let h = CylFn::random_real(&model, 2, 0.5, 2.0, &mut rng).unwrap();
        let paired = corresponding_weight(&model, &mu, &cert, &h, 1e-11).unwrap();
        assert!(paired.certificate.is_valid());
        let dev = pairing_deviation(&model, &mu, &h, &paired.weight, rn.omega()).unwrap();
        assert!(dev < 1e-12, "got {dev}");
        // The paired weight for h dμ is that measure's forward derivative.
        let rn_nu = crate::operators::rn_data(&model, &paired.measure, 1).unwrap();
        assert!(
            paired.weight.sup_distance(rn_nu.omega(), &model).unwrap() < 1e-12
        );
    }

    #[test]
    fn pairing_requires_a_shift_measurable_weight() {
        let (model, mu) = uniform(3);
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let phi = random_markovian(&model, &mu, 1, &mut rng).unwrap();
        let cert = is_markovian(&model, &mu, &phi, 1e-11).unwrap();
        assert!(cert.is_valid());
        let h = CylFn::from_values(&model, 1, vec![c(2.0), c(1.0)]).unwrap();
        assert!(matches!(
            corresponding_weight(&model, &mu, &cert, &h, 1e-11),
            Err(Error::NotShiftMeasurable { .. })
        ));
    }

    #[test]
    fn certified_weights_form_a_convex_set() {
        let (model, mu) = golden(3);
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let a = random_markovian(&model, &mu, 2, &mut rng).unwrap();
        let b = random_markovian(&model, &mu, 2, &mut rng).unwrap();
        for t in [0.0, 0.25, 0.5, 0.85, 1.0] {
            let combo = a.scale(c(t)).add(&b.scale(c(1.0 - t)), &model).unwrap();
            let cert = is_markovian(&model, &mu, &combo, 1e-11).unwrap();
            assert!(cert.is_valid(), "t={t}: deviation {}", cert.deviation());
        }
    }

    #[test]
    fn kernel_dimension_counts_one_constraint_per_coarse_cylinder() {
        let (model, mu) = uniform(3);
        assert_eq!(
            certification_kernel_dim(&model, &mu, 2).unwrap(),
            model.dim(2).unwrap() - model.dim(1).unwrap()
        );
        let (model, mu) = golden(3);
        for d in 1..=3 {
            assert_eq!(
                certification_kernel_dim(&model, &mu, d).unwrap(),
                model.dim(d).unwrap() - model.dim(d - 1).unwrap()
            );
        }
    }

    #[test]
    fn random_weights_are_positive_deterministic_and_certified() {
        let (model, mu) = golden(3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let phi = random_markovian(&model, &mu, 2, &mut rng).unwrap();
        for v in phi.real_values(1e-12).unwrap() {
            assert!(v > 0.0);
        }
        let cert = is_markovian(&model, &mu, &phi, 1e-12).unwrap();
        assert!(cert.is_valid());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let again = random_markovian(&model, &mu, 2, &mut rng).unwrap();
        assert_eq!(phi.values(), again.values());
    }

    #[test]
    fn certificates_round_trip_through_json() {
        let (model, mu) = uniform(2);
        let cert = is_markovian(&model, &mu, &CylFn::one(), 1e-12).unwrap();
        let json = serde_json::to_string(&cert).unwrap();
        assert!(json.contains("\"valid\":true"));
        let back: MarkovianCertificate = serde_json::from_str(&json).unwrap();
        assert_eq!(back.measure_id(), cert.measure_id());
        assert_eq!(back.order(), 1);
    }

    #[test]
    fn fiber_spread_detects_first_letter_dependence() {
        let (model, _mu) = golden(2);
        let flat = CylFn::one().promote(&model, 2).unwrap();
        assert!(fiber_spread(&model, &flat).unwrap() < 1e-15);
        let mut values = vec![c(1.0); model.dim(2).unwrap()];
        values[model.index_of(&Word::new(vec![0, 0])).unwrap()] = c(3.0);
        let bumpy = CylFn::from_values(&model, 2, values).unwrap();
        assert!((fiber_spread(&model, &bumpy).unwrap() - 2.0).abs() < 1e-15);
    }
}
