//! Named check suites over a resolved scenario.
//!
//! Each suite exercises one module's identities on the scenario's model
//! and measure and records the outcomes as report checks. Suites adapt to
//! the measure: identities that only hold for shift-invariant measures
//! are asserted there, while their quasi-invariant replacements (density
//! corrections, weighted expectations) are asserted otherwise and the
//! raw gaps recorded informationally. Models with a constant branch count
//! get full filter-bank checks; models with varying branch counts get the
//! tight-frame analogues.
//!
//! Randomized checks draw from a stream seeded by the scenario seed and a
//! per-suite salt, so a suite's draws do not depend on which other suites
//! run and repeated runs are bit-for-bit identical.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ResolvedScenario, Scenario, Suite};
use crate::cuntz::{
    build_t, build_t_star, multiplier, similarity_transport, subspace_decomposition,
    verify_cuntz, verify_cuntz_plain,
};
use crate::error::{Error, Result};
use crate::filters::{
    connect, cyclic_construct, loop_act, normalize_cyclic, phi_map, phi_map_inverse,
    BankWeight, LoopElement,
};
use crate::markovian::{
    certification_kernel_dim, corresponding_weight, is_markovian, pairing_deviation,
    power_product, random_markovian, transport, MarkovianCertificate,
};
use crate::operators::{
    adjoint_op, adjoint_pair_deviation, apply_shift_adjoint, check_transfer_identities,
    compose_op, cond_expect, fiber_expectation, multiplication_op, pullout_deviation,
    rn_data, rokhlin_transfer, weighted_adjoint,
};
use crate::report::{complex_matrix_csv, real_matrix_csv, Check, Environment, Report};
use crate::structure::{
    ergodicity_probe, exactness_probe, recurrence_partial_sums, solenoid_build, wold,
};
use crate::symspace::{CylFn, ShiftModel};

/// Number of random pairs drawn by sampled operator checks.
const SUITE_SAMPLES: usize = 25;

/// Principal-angle cosines come out of rank-revealing factorizations and
/// carry a little more noise than direct operator norms; angle checks use
/// at least this tolerance.
const ANGLE_TOL: f64 = 1e-9;

/// A named CSV payload produced alongside the report.
#[derive(Debug, Clone)]
pub struct Artifact {
    /// File name the payload is intended for.
    pub name: String,
    /// CSV content.
    pub csv: String,
}

/// A finished run: the report plus exportable matrices.
#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Sorted checks and aggregate verdict.
    pub report: Report,
    /// Matrices the run produced, as named CSV payloads.
    pub artifacts: Vec<Artifact>,
}

/// Resolves and runs a scenario.
pub fn run(scenario: &Scenario) -> Result<RunOutput> {
    run_resolved(&scenario.resolve()?)
}

/// Runs an already resolved scenario.
pub fn run_resolved(resolved: &ResolvedScenario) -> Result<RunOutput> {
    if resolved.depth < 2 {
        return Err(Error::Config(
            "check suites need a depth budget of at least 2".to_owned(),
        ));
    }
    let mut report = Report::new(Environment {
        fixture: resolved.label.clone(),
        depth: resolved.depth,
        seed: resolved.seed,
        tolerance: resolved.tolerance,
    });
    let mut artifacts = Vec::new();
    for &suite in &resolved.suites {
        let mut rng = suite_rng(resolved.seed, suite);
        match suite {
            Suite::Transfer => transfer_suite(resolved, &mut rng, &mut report)?,
            Suite::Markovian => markovian_suite(resolved, &mut rng, &mut report)?,
            Suite::Cuntz => cuntz_suite(resolved, &mut rng, &mut report, &mut artifacts)?,
            Suite::Filters => filters_suite(resolved, &mut rng, &mut report)?,
            Suite::Structure => {
                structure_suite(resolved, &mut rng, &mut report, &mut artifacts)?
            }
        }
    }
    Ok(RunOutput {
        report: report.finalize(),
        artifacts,
    })
}

/// A suite's random stream: fixed by the scenario seed and the suite, so
/// the draws do not depend on which other suites run.
fn suite_rng(seed: u64, suite: Suite) -> ChaCha8Rng {
    let salt = Suite::ALL.iter().position(|&s| s == suite).unwrap() as u64 + 1;
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// The suite weight: the unit weight where the measure is invariant, the
/// forward derivative otherwise. Certified either way.
fn suite_weight(r: &ResolvedScenario) -> Result<MarkovianCertificate> {
    let phi = if r.invariant {
        CylFn::one()
    } else {
        rn_data(&r.model, &r.measure, 1)?.omega().clone()
    };
    let cert = is_markovian(&r.model, &r.measure, &phi, r.tolerance)?;
    cert.ensure(&r.measure)?;
    Ok(cert)
}

/// A strictly positive random function at the given depth, for use as a
/// reweighting density.
fn random_positive(
    model: &ShiftModel,
    depth: usize,
    rng: &mut impl Rng,
) -> Result<CylFn> {
    let dim = model.dim(depth)?;
    let values = (0..dim)
        .map(|_| Complex64::new(rng.random_range(0.2..=1.8), 0.0))
        .collect();
    CylFn::from_values(model, depth, values)
}

fn transfer_suite(
    r: &ResolvedScenario,
    rng: &mut ChaCha8Rng,
    report: &mut Report,
) -> Result<()> {
    let (model, measure, tol) = (&r.model, &r.measure, r.tolerance);
    let budget = model.depth_budget();

    let identities = check_transfer_identities(model, measure)?;
    if r.invariant {
        report.push(Check::le(
            "transfer_matches_adjoint",
            "fiber transfer coincides with the composition adjoint for an invariant measure",
            identities.rokhlin_vs_adjoint,
            tol,
        ));
    } else {
        report.push(Check::info(
            "transfer_adjoint_gap",
            "distance between fiber transfer and composition adjoint; open when the \
             measure is not invariant",
            identities.rokhlin_vs_adjoint,
        ));
    }
    report.push(Check::le(
        "weighted_transfer_matches_adjoint",
        "density-corrected fiber transfer coincides with the composition adjoint",
        identities.weighted_rokhlin_vs_adjoint,
        tol,
    ));

    let sstar = adjoint_op(model, measure, budget)?;
    report.push(Check::le(
        "pullout_shift_adjoint",
        "composition adjoint pulls coarse factors out",
        pullout_deviation(model, &sstar, SUITE_SAMPLES, rng)?,
        tol,
    ));
    let transfer = rokhlin_transfer(model, measure, budget)?;
    report.push(Check::le(
        "pullout_transfer",
        "fiber transfer pulls coarse factors out",
        pullout_deviation(model, &transfer, SUITE_SAMPLES, rng)?,
        tol,
    ));
    let omega_root = rn_data(model, measure, 1)?
        .omega()
        .sqrt_nonneg(model)?;
    let weighted = weighted_adjoint(model, measure, &omega_root, budget)?;
    report.push(Check::le(
        "pullout_weighted_adjoint",
        "adjoint of the derivative-weighted composition pulls coarse factors out",
        pullout_deviation(model, &weighted, SUITE_SAMPLES, rng)?,
        tol,
    ));
    let t = random_positive(model, 1, rng)?;
    let general = weighted_adjoint(model, measure, &t, budget)?;
    report.push(Check::le(
        "pullout_general_weight",
        "adjoint of an arbitrary weighted composition pulls coarse factors out",
        pullout_deviation(model, &general, SUITE_SAMPLES, rng)?,
        tol,
    ));

    let s = compose_op(model, budget - 1)?;
    report.push(Check::le(
        "composition_adjoint_pairing",
        "composition and its adjoint pair correctly in the weighted inner product",
        adjoint_pair_deviation(model, measure, &s, &sstar, SUITE_SAMPLES, rng)?,
        tol,
    ));

    let e = fiber_expectation(model, measure, budget)?;
    let e_squared = e.compose(model, &e)?;
    report.push(Check::le(
        "expectation_idempotent",
        "conditional expectation onto pulled-back functions squares to itself",
        e_squared.deviation_from(&e)?,
        tol,
    ));
    report.push(Check::le(
        "expectation_self_adjoint",
        "conditional expectation is self-adjoint in the weighted inner product",
        adjoint_pair_deviation(model, measure, &e, &e, SUITE_SAMPLES, rng)?,
        tol,
    ));
    let rank = e.rank(measure, 1e-10)?;
    let coarse = model.dim(budget - 1)?;
    report.push(Check::exact(
        "expectation_range_dim",
        "range of the conditional expectation is the pulled-back algebra",
        rank.abs_diff(coarse),
    ));
    if r.invariant {
        let product_form = cond_expect(model, measure, None, budget, tol)?;
        report.push(Check::le(
            "expectation_product_form",
            "composition times adjoint reproduces the conditional expectation for an \
             invariant measure",
            product_form.deviation_from(&e)?,
            tol,
        ));
    } else {
        let omega = rn_data(model, measure, 1)?.omega().clone();
        let weighted_e = cond_expect(model, measure, Some(&omega), budget, tol)?;
        let weighted_sq = weighted_e.compose(model, &weighted_e)?;
        report.push(Check::le(
            "weighted_expectation_idempotent",
            "derivative-weighted composition times its adjoint is a projection",
            weighted_sq.deviation_from(&weighted_e)?,
            tol,
        ));
    }
    Ok(())
}

fn markovian_suite(
    r: &ResolvedScenario,
    rng: &mut ChaCha8Rng,
    report: &mut Report,
) -> Result<()> {
    let (model, measure, tol) = (&r.model, &r.measure, r.tolerance);
    let budget = model.depth_budget();
    let n_max = 2.min(budget - 1).max(1);
    let rn = rn_data(model, measure, n_max)?;

    let omega_cert = is_markovian(model, measure, rn.omega(), tol)?;
    report.push(Check::le(
        "forward_weight_certified",
        "forward derivative of the measure is a shift-compatible weight",
        omega_cert.deviation(),
        tol,
    ));

    let random_phi = random_markovian(model, measure, 2.min(budget), rng)?;
    let random_cert = is_markovian(model, measure, &random_phi, tol)?;
    report.push(Check::le(
        "random_weight_certified",
        "fiber-normalized random weights certify",
        random_cert.deviation(),
        tol,
    ));

    let g = random_positive(model, 1, rng)?;
    let carried = transport(model, measure, &omega_cert, &g, tol)?;
    let back = transport(
        model,
        &carried.measure,
        &carried.certificate,
        &g.recip(model)?,
        tol,
    )?;
    let weight_gap = back.weight.sup_distance(rn.omega(), model)?;
    let mass_gap = back
        .measure
        .mass(budget)?
        .iter()
        .zip(measure.mass(budget)?)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    report.push(Check::le(
        "transport_round_trip",
        "carrying a weight to an equivalent measure and back returns it",
        weight_gap.max(mass_gap),
        tol,
    ));

    let mut convex_worst = 0.0f64;
    for _ in 0..5 {
        let other = random_markovian(model, measure, 2.min(budget), rng)?;
        let lambda = rng.random_range(0.05..=0.95);
        let blend = rn
            .omega()
            .scale(Complex64::new(lambda, 0.0))
            .add(&other.scale(Complex64::new(1.0 - lambda, 0.0)), model)?;
        convex_worst = convex_worst.max(is_markovian(model, measure, &blend, tol)?.deviation());
    }
    report.push(Check::le(
        "convex_combination_certified",
        "the set of shift-compatible weights is convex",
        convex_worst,
        tol,
    ));

    let (_, power_cert) =
        power_product(model, measure, &[omega_cert.clone(), omega_cert.clone()], tol)?;
    report.push(Check::le(
        "power_product_certified",
        "the shifted product of two weights certifies against the squared shift",
        power_cert.deviation(),
        tol,
    ));

    let h = random_positive(model, 1, rng)?;
    let paired = corresponding_weight(model, measure, &omega_cert, &h, tol)?;
    report.push(Check::le(
        "corresponding_weight_pairing",
        "the pointwise-paired weight for a reweighted measure satisfies the pairing \
         identity",
        pairing_deviation(model, measure, &h, &paired.weight, rn.omega())?
            .max(paired.certificate.deviation()),
        tol,
    ));

    report.push(Check::le(
        "chain_rule_exact",
        "backward derivatives compose along the pushforward chain",
        rn.chain_rule_deviation(model, measure)?,
        tol,
    ));
    report.push(Check::info(
        "shifted_cocycle_gap",
        "distance in the shifted cocycle form of the derivative chain; open when the \
         measure is not invariant",
        rn.shifted_cocycle_deviation(model)?,
    ));

    let kernel = certification_kernel_dim(model, measure, budget)?;
    let expected = model.dim(budget)? - model.dim(budget - 1)?;
    report.push(Check::exact(
        "certification_kernel_dim",
        "weights at a fixed depth form an affine space of the expected dimension",
        kernel.abs_diff(expected),
    ));
    Ok(())
}

fn cuntz_suite(
    r: &ResolvedScenario,
    rng: &mut ChaCha8Rng,
    report: &mut Report,
    artifacts: &mut Vec<Artifact>,
) -> Result<()> {
    let (model, measure, tol) = (&r.model, &r.measure, r.tolerance);
    let budget = model.depth_budget();
    let cert = suite_weight(r)?;
    let construction = cyclic_construct(model, measure, &BankWeight::Weighted(cert.clone()), tol)?;
    let filters: Vec<CylFn> = construction.filters().to_vec();
    let constant_fiber = model.fiber_cardinality().is_ok();

    if constant_fiber {
        let cuntz_report = construction
            .cuntz()
            .expect("constant-fiber construction carries a verification")
            .clone();
        report.push(Check::le(
            "cyclic_bank_verifies",
            "the bank built from the cyclic constant satisfies the isometry relations",
            cuntz_report.worst_deviation(),
            tol,
        ));
        artifacts.push(Artifact {
            name: "cuntz_condition_grid.csv".to_owned(),
            csv: real_matrix_csv(cuntz_report.condition_i()),
        });

        if let Some(named) = r.bank {
            let built = named.build(model, measure, tol)?;
            report.push(Check::le(
                "named_bank_verifies",
                "the requested named bank satisfies the unweighted isometry relations \
                 over this measure",
                built.report().worst_deviation(),
                tol,
            ));
        }

        let subspaces = subspace_decomposition(model, measure, &cert, &filters, ANGLE_TOL)?;
        report.push(Check::exact(
            "subspaces_fill",
            "filter ranges have dimensions summing to the deepest level",
            subspaces.total.abs_diff(subspaces.expected_total),
        ));
        report.push(Check::le(
            "subspaces_orthogonal",
            "distinct filter ranges meet at right angles",
            subspaces.max_cross_cosine,
            tol.max(ANGLE_TOL),
        ));

        let mut detuned = filters.clone();
        detuned[0] = detuned[0].scale(Complex64::new(0.9, 0.0));
        let detuned_report = verify_cuntz(model, measure, &cert, &detuned, tol)?;
        report.push(Check::ge(
            "bank_detuning_detected",
            "scaling one filter breaks the relations by a visible margin",
            detuned_report.worst_deviation(),
            0.15,
        ));
    } else {
        report.push(Check::le(
            "cyclic_frame_complete",
            "the variable-rank frame sums its range projections to the identity",
            construction.frame_deviation(),
            tol,
        ));
        report.push(Check::le(
            "cyclic_frame_normalized",
            "each frame filter has unit conditional norm on its support",
            construction.normalization_deviation(),
            tol,
        ));
        report.push(Check::exact(
            "cyclic_frame_fills",
            "per-fiber ranks sum to the deepest level",
            construction.total_rank().abs_diff(construction.expected_rank()),
        ));

        let probe = vec![
            CylFn::from_values(
                model,
                1,
                vec![Complex64::new(1.0, 0.0); model.dim(1)?],
            )?,
            CylFn::from_values(
                model,
                1,
                vec![Complex64::new(0.5, 0.0); model.dim(1)?],
            )?,
        ];
        let rejected = matches!(
            verify_cuntz_plain(model, measure, &probe, tol),
            Err(Error::VariableFiberCardinality(_))
        );
        report.push(Check::exact(
            "variable_fiber_bank_rejected",
            "fixed-count bank verification refuses models with varying branch counts",
            usize::from(!rejected),
        ));
    }

    let m1 = &filters[0];
    let m2 = &filters[1 % filters.len()];
    let t2 = build_t(model, measure, &cert, m2, budget - 1)?;
    let t1_star = build_t_star(model, measure, &cert, m1, budget)?;
    let product = t1_star.compose(model, &t2)?;
    let symbol = multiplier(model, measure, &cert, m1, m2)?;
    let direct = multiplication_op(model, &symbol, budget - 1)?;
    report.push(Check::le(
        "multiplier_matches_operators",
        "the adjoint-times-isometry product acts as multiplication by its symbol",
        product.deviation_from(&direct)?,
        tol,
    ));

    let g = random_positive(model, 1, rng)?;
    let similarity = similarity_transport(model, measure, &cert, &filters, &g, tol)?;
    report.push(Check::le(
        "similarity_transport_consistent",
        "conjugating by the density square root carries the isometries to the \
         reweighted measure",
        similarity.operator_deviation.max(similarity.gram_deviation),
        tol,
    ));
    Ok(())
}

fn filters_suite(
    r: &ResolvedScenario,
    rng: &mut ChaCha8Rng,
    report: &mut Report,
) -> Result<()> {
    let (model, measure, tol) = (&r.model, &r.measure, r.tolerance);
    let cert = suite_weight(r)?;
    let weight = BankWeight::Weighted(cert.clone());
    let construction = cyclic_construct(model, measure, &weight, tol)?;

    if model.fiber_cardinality().is_ok() {
        let bank = construction.into_bank()?;
        let plain = phi_map(model, measure, &bank, tol)?;
        report.push(Check::le(
            "weight_map_lands_plain",
            "scaling by the weight square root carries the bank into the unweighted \
             class",
            plain.report().worst_deviation(),
            tol,
        ));
        let back = phi_map_inverse(model, measure, &cert, &plain, tol)?;
        let mut round_trip = 0.0f64;
        for (a, b) in back.filters().iter().zip(bank.filters()) {
            round_trip = round_trip.max(a.sup_distance(b, model)?);
        }
        report.push(Check::le(
            "weight_map_round_trip",
            "the weight map and its inverse return the original filters",
            round_trip,
            tol,
        ));

        let g = match &r.loop_matrix {
            Some(matrix) => LoopElement::constant(model, matrix.clone())?,
            None => LoopElement::random_constant(model, plain.len(), rng)?,
        };
        let h = LoopElement::random(model, 1, plain.len(), rng)?;

        let acted = loop_act(model, measure, &plain, &g, tol)?;
        report.push(Check::le(
            "loop_action_preserves_bank",
            "acting by a unitary field keeps the filters a verified bank",
            acted.report().worst_deviation(),
            tol,
        ));

        let connector = connect(model, measure, &plain, &acted, tol)?;
        report.push(Check::le(
            "connector_unitary",
            "the element connecting two banks is pointwise unitary",
            connector.unitarity_deviation(),
            tol,
        ));
        let reacted = loop_act(model, measure, &plain, &connector, tol)?;
        let mut transitivity = 0.0f64;
        for (a, b) in reacted.filters().iter().zip(acted.filters()) {
            transitivity = transitivity.max(a.sup_distance(b, model)?);
        }
        report.push(Check::le(
            "loop_transitivity",
            "acting by the connecting element reaches the target bank",
            transitivity,
            tol,
        ));

        let moved = loop_act(model, measure, &plain, &h, tol)?;
        let recovered = connect(model, measure, &plain, &moved, tol)?;
        report.push(Check::le(
            "loop_freeness",
            "the connecting element of a bank and its image recovers the acting \
             element",
            recovered.sup_distance(model, &h)?,
            tol,
        ));

        let sequential = loop_act(model, measure, &acted, &h, tol)?;
        let composed = loop_act(model, measure, &plain, &g.compose(model, &h)?, tol)?;
        let mut composition = 0.0f64;
        for (a, b) in sequential.filters().iter().zip(composed.filters()) {
            composition = composition.max(a.sup_distance(b, model)?);
        }
        report.push(Check::le(
            "loop_composition",
            "sequential actions agree with acting by the pointwise product",
            composition,
            tol,
        ));

        let acted_weighted = loop_act(model, measure, &bank, &g, tol)?;
        let mapped_after = phi_map(model, measure, &acted_weighted, tol)?;
        let mut equivariance = 0.0f64;
        for (a, b) in mapped_after.filters().iter().zip(acted.filters()) {
            equivariance = equivariance.max(a.sup_distance(b, model)?);
        }
        report.push(Check::le(
            "weight_map_equivariant",
            "the weight map commutes with the loop action",
            equivariance,
            tol,
        ));
    } else {
        let h = random_positive(model, model.depth_budget(), rng)?;
        let normalized = normalize_cyclic(model, measure, Some(cert.phi()), &h)?;
        let fiber_norm = apply_shift_adjoint(
            model,
            measure,
            &cert
                .phi()
                .promote(model, model.depth_budget())?
                .pointwise_mul(&normalized.abs_squared(), model)?,
        )?;
        report.push(Check::le(
            "cyclic_fibers_normalized",
            "normalizing a positive cyclic candidate gives unit conditional norms",
            fiber_norm.sup_distance(&CylFn::one(), model)?,
            tol,
        ));

        let mut cross = 0.0f64;
        for (i, mi) in construction.filters().iter().enumerate() {
            for mj in construction.filters().iter().skip(i + 1) {
                cross = cross.max(multiplier(model, measure, &cert, mi, mj)?.sup_norm());
            }
        }
        report.push(Check::le(
            "frame_slots_orthogonal",
            "distinct frame slots are conditionally orthogonal",
            cross,
            tol,
        ));
    }
    Ok(())
}

fn structure_suite(
    r: &ResolvedScenario,
    rng: &mut ChaCha8Rng,
    report: &mut Report,
    artifacts: &mut Vec<Artifact>,
) -> Result<()> {
    let (model, measure, tol) = (&r.model, &r.measure, r.tolerance);
    let budget = model.depth_budget();
    let _ = rng;

    if r.invariant {
        let decomposition = wold(model, measure, budget)?;
        report.push(Check::exact(
            "wold_complete",
            "unitary part and shift layers fill the decomposed level",
            usize::from(!decomposition.complete),
        ));
        report.push(Check::le(
            "wold_layers_orthogonal",
            "the decomposition summands meet at right angles",
            decomposition.layer_orthogonality,
            tol.max(ANGLE_TOL),
        ));
        report.push(Check::le(
            "wold_unitary_part",
            "the isometry restricted to the intersection space is unitary",
            decomposition.unitary_deviation,
            tol,
        ));
        let mut drift = 0.0f64;
        for f in &decomposition.h_infinity_basis {
            let reference = measure.norm(model, f)?;
            let mut g = f.clone();
            for _ in 0..2.min(budget) {
                g = apply_shift_adjoint(model, measure, &g)?;
                drift = drift.max((measure.norm(model, &g)? - reference).abs());
            }
        }
        report.push(Check::le(
            "wold_backward_isometric",
            "the adjoint preserves norms on the intersection space",
            drift,
            tol,
        ));
        let unitary = nalgebra::DMatrix::from_fn(
            decomposition.unitary.len(),
            decomposition.unitary.first().map_or(0, Vec::len),
            |i, j| {
                let [re, im] = decomposition.unitary[i][j];
                Complex64::new(re, im)
            },
        );
        artifacts.push(Artifact {
            name: "wold_unitary.csv".to_owned(),
            csv: complex_matrix_csv(&unitary),
        });
    } else {
        let refused = matches!(
            wold(model, measure, budget),
            Err(Error::NotInvariant { .. })
        );
        report.push(Check::exact(
            "wold_rejects_non_invariant",
            "the decomposition refuses measures that are not invariant",
            usize::from(!refused),
        ));
    }

    let ranks = exactness_probe(model, budget)?;
    let mut rank_gap = 0usize;
    for (n, &rank) in ranks.iter().enumerate() {
        rank_gap += rank.abs_diff(model.dim(budget - n)?);
    }
    report.push(Check::exact(
        "exactness_ranks_match_levels",
        "iterated composition ranks march down the cylinder dimensions",
        rank_gap,
    ));

    let ergodicity = ergodicity_probe(model, measure)?;
    report.push(Check::exact(
        "ergodic_routes_agree",
        "shift-fixed functions and transfer-fixed functions have matching counts",
        ergodicity.fixed_dim.abs_diff(ergodicity.perron_dim),
    ));
    report.push(Check::info(
        "ergodic_component_count",
        "dimension of the space of shift-fixed functions; one means a single \
         component",
        ergodicity.fixed_dim as f64,
    ));

    let sums = recurrence_partial_sums(model, measure, &CylFn::one(), 1)?;
    let expected = CylFn::one().add(rn_data(model, measure, 1)?.omega(), model)?;
    report.push(Check::le(
        "recurrence_sums_consistent",
        "the first recurrence partial sum matches one plus the forward derivative",
        sums[1].sup_distance(&expected, model)?,
        tol,
    ));

    let history = 2.min(crate::structure::MAX_SOLENOID_DEPTH.saturating_sub(budget));
    let (_, solenoid) = solenoid_build(model, measure, history)?;
    report.push(Check::le(
        "solenoid_marginal",
        "the extended measure projects onto the base measure",
        solenoid.marginal_deviation,
        tol,
    ));
    report.push(Check::le(
        "solenoid_gram",
        "lifting base indicators preserves their pairwise inner products",
        solenoid.gram_deviation,
        tol,
    ));
    report.push(Check::exact(
        "solenoid_factor_identity",
        "projection after the extended step equals the shift after projection",
        solenoid.factor_mismatches,
    ));
    if r.invariant {
        report.push(Check::le(
            "solenoid_intertwiner",
            "lifting intertwines the base shift with the extended step",
            solenoid.intertwiner_deviation,
            tol,
        ));
    } else {
        report.push(Check::info(
            "solenoid_intertwiner_gap",
            "intertwining defect of the lift; open when the measure is not invariant",
            solenoid.intertwiner_deviation,
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::Fixture;

    fn scenario_for(fixture: Fixture) -> Scenario {
        Scenario::for_fixture(fixture)
    }

    #[test]
    fn every_fixture_passes_every_suite() {
        for fixture in Fixture::ALL {
            let output = run(&scenario_for(fixture)).unwrap();
            let failures: Vec<String> = output
                .report
                .failures()
                .iter()
                .map(|c| format!("{}: {:.3e}", c.name, c.deviation))
                .collect();
            assert!(
                output.report.aggregate_pass,
                "{} failed: {failures:?}",
                fixture.name()
            );
        }
    }

    #[test]
    fn skew_transfer_suite_reports_the_open_gap_and_passes() {
        let mut scenario = scenario_for(Fixture::Skew2);
        scenario.suites = vec!["transfer".to_owned()];
        let output = run(&scenario).unwrap();
        assert!(output.report.aggregate_pass);
        let gap = output
            .report
            .checks
            .iter()
            .find(|c| c.name == "transfer_adjoint_gap")
            .expect("gap recorded");
        assert!(gap.deviation >= 0.4, "gap {}", gap.deviation);
        let weighted = output
            .report
            .checks
            .iter()
            .find(|c| c.name == "weighted_transfer_matches_adjoint")
            .expect("weighted identity checked");
        assert!(weighted.pass && weighted.deviation <= 1e-10);
    }

    #[test]
    fn repeated_runs_serialize_identically() {
        let scenario = scenario_for(Fixture::Skew2);
        let first = run(&scenario).unwrap().report.to_json().unwrap();
        let second = run(&scenario).unwrap().report.to_json().unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn variable_fiber_models_get_frame_checks() {
        let mut scenario = scenario_for(Fixture::Golden);
        scenario.suites = vec!["cuntz".to_owned()];
        let output = run(&scenario).unwrap();
        assert!(output.report.aggregate_pass);
        let names: Vec<&str> = output
            .report
            .checks
            .iter()
            .map(|c| c.name.as_str())
            .collect();
        assert!(names.contains(&"cyclic_frame_complete"));
        assert!(names.contains(&"variable_fiber_bank_rejected"));
        assert!(!names.contains(&"cyclic_bank_verifies"));
    }

    #[test]
    fn named_bank_checks_are_honest_about_the_measure() {
        let mut on_uniform = scenario_for(Fixture::Uniform2);
        on_uniform.suites = vec!["cuntz".to_owned()];
        on_uniform.bank = Some("selector".to_owned());
        let output = run(&on_uniform).unwrap();
        assert!(output.report.aggregate_pass);
        assert!(output
            .report
            .checks
            .iter()
            .any(|c| c.name == "named_bank_verifies" && c.pass));

        let mut on_skew = scenario_for(Fixture::Skew2);
        on_skew.suites = vec!["cuntz".to_owned()];
        on_skew.bank = Some("selector".to_owned());
        let output = run(&on_skew).unwrap();
        assert!(!output.report.aggregate_pass);
        assert!(output
            .report
            .checks
            .iter()
            .any(|c| c.name == "named_bank_verifies" && !c.pass));
    }

    #[test]
    fn explicit_configuration_runs_like_its_fixture() {
        let scenario = Scenario::explicit_fixture(Fixture::Golden);
        let output = run(&scenario).unwrap();
        assert!(output.report.aggregate_pass);
        assert_eq!(output.report.environment.fixture, "custom(alphabet=2)");
    }

    #[test]
    fn shallow_budgets_are_rejected() {
        let mut scenario = scenario_for(Fixture::Uniform2);
        scenario.depth = Some(1);
        assert!(matches!(run(&scenario), Err(Error::Config(_))));
    }

    #[test]
    fn depth_two_runs_still_pass() {
        let mut scenario = scenario_for(Fixture::Uniform2);
        scenario.depth = Some(2);
        let output = run(&scenario).unwrap();
        assert!(output.report.aggregate_pass);
    }

    #[test]
    fn provided_loop_matrices_are_used_and_gated() {
        let mut scenario = scenario_for(Fixture::Uniform2);
        scenario.suites = vec!["filters".to_owned()];
        let r = 0.5f64.sqrt();
        scenario.loop_matrix = Some(vec![
            vec![[r, 0.0], [r, 0.0]],
            vec![[r, 0.0], [-r, 0.0]],
        ]);
        let output = run(&scenario).unwrap();
        assert!(output.report.aggregate_pass);

        let mut shear = scenario.clone();
        shear.loop_matrix = Some(vec![
            vec![[1.0, 0.0], [0.3, 0.0]],
            vec![[0.0, 0.0], [1.0, 0.0]],
        ]);
        assert!(matches!(run(&shear), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn artifacts_carry_the_condition_grid_and_unitary_part() {
        let output = run(&scenario_for(Fixture::Uniform2)).unwrap();
        let names: Vec<&str> = output.artifacts.iter().map(|a| a.name.as_str()).collect();
        assert!(names.contains(&"cuntz_condition_grid.csv"));
        assert!(names.contains(&"wold_unitary.csv"));
    }
}
