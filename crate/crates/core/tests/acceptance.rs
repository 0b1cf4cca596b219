//! Acceptance criteria for the whole workspace, one test per criterion.
//!
//! Each test prints a single `PASS`/`FAIL` line naming the criterion and
//! the measured deviations, then asserts. Tolerances are pinned here as
//! literals so the expectations cannot drift with configuration.

use ergodia_core::cuntz::{subspace_decomposition, verify_cuntz, verify_cuntz_plain};
use ergodia_core::filters::{
    connect, cyclic_construct, loop_act, BankWeight, LoopElement,
};
use ergodia_core::fixtures::{BankFixture, Fixture};
use ergodia_core::markovian::{
    corresponding_weight, is_markovian, pairing_deviation, power_product, random_markovian,
    transport,
};
use ergodia_core::operators::{
    adjoint_op, adjoint_pair_deviation, apply_shift_adjoint, check_transfer_identities,
    cond_expect, pullout_deviation, rn_data, rokhlin_transfer, weighted_adjoint,
};
use ergodia_core::structure::{solenoid_build, wold};
use ergodia_core::suites::run;
use ergodia_core::config::Scenario;
use ergodia_core::{CylFn, Measure, ShiftModel};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DEPTH: usize = 3;
const SEED: u64 = 7;

fn verdict(number: usize, name: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("criterion {number:02} [{tag}] {name}: {detail}");
    assert!(pass, "criterion {number} ({name}) failed: {detail}");
}

fn fixture(f: Fixture) -> (ShiftModel, Measure) {
    f.build(DEPTH).expect("fixture builds")
}

fn positive_depth_one(model: &ShiftModel, rng: &mut impl Rng) -> CylFn {
    let dim = model.dim(1).unwrap();
    let values = (0..dim)
        .map(|_| Complex64::new(rng.random_range(0.3..=2.0), 0.0))
        .collect();
    CylFn::from_values(model, 1, values).unwrap()
}

#[test]
fn criterion_01_transfer_identities() {
    let mut invariant_worst = 0.0f64;
    for f in [Fixture::Uniform2, Fixture::Golden] {
        let (model, measure) = fixture(f);
        let report = check_transfer_identities(&model, &measure).unwrap();
        invariant_worst = invariant_worst.max(report.rokhlin_vs_adjoint);
    }
    let (model, measure) = fixture(Fixture::Skew2);
    let skew = check_transfer_identities(&model, &measure).unwrap();
    let pass = invariant_worst <= 1e-10
        && skew.weighted_rokhlin_vs_adjoint <= 1e-10
        && skew.rokhlin_vs_adjoint >= 0.4;
    verdict(
        1,
        "transfer identities",
        pass,
        &format!(
            "invariant gap {invariant_worst:.2e} <= 1e-10, weighted gap {:.2e} <= 1e-10, \
             open gap {:.3} >= 0.4",
            skew.weighted_rokhlin_vs_adjoint, skew.rokhlin_vs_adjoint
        ),
    );
}

#[test]
fn criterion_02_pullout_property() {
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for f in Fixture::ALL {
        let (model, measure) = fixture(f);
        let budget = model.depth_budget();
        let phi = random_markovian(&model, &measure, 2, &mut rng).unwrap();
        let cert = is_markovian(&model, &measure, &phi, 1e-10).unwrap();
        assert!(cert.is_valid());
        let root = phi.sqrt_nonneg(&model).unwrap();
        let t = positive_depth_one(&model, &mut rng);
        let ops = [
            adjoint_op(&model, &measure, budget).unwrap(),
            weighted_adjoint(&model, &measure, &root, budget).unwrap(),
            rokhlin_transfer(&model, &measure, budget).unwrap(),
            weighted_adjoint(&model, &measure, &t, budget).unwrap(),
        ];
        for op in &ops {
            worst = worst.max(pullout_deviation(&model, op, 100, &mut rng).unwrap());
        }
    }
    verdict(
        2,
        "pull-out property",
        worst <= 1e-10,
        &format!("worst over 4 operators x 3 models x 100 pairs: {worst:.2e} <= 1e-10"),
    );
}

#[test]
fn criterion_03_conditional_expectation() {
    let mut idempotent = 0.0f64;
    let mut self_adjoint = 0.0f64;
    let mut rank_gap = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for f in Fixture::ALL {
        let (model, measure) = fixture(f);
        let budget = model.depth_budget();
        let weight = match f {
            Fixture::Skew2 => Some(rn_data(&model, &measure, 1).unwrap().omega().clone()),
            _ => None,
        };
        let e = cond_expect(&model, &measure, weight.as_ref(), budget, 1e-10).unwrap();
        let e2 = e.compose(&model, &e).unwrap();
        idempotent = idempotent.max(e2.deviation_from(&e).unwrap());
        self_adjoint = self_adjoint
            .max(adjoint_pair_deviation(&model, &measure, &e, &e, 100, &mut rng).unwrap());
        let rank = e.rank(&measure, 1e-10).unwrap();
        rank_gap += rank.abs_diff(model.dim(budget - 1).unwrap());
    }
    let pass = idempotent <= 1e-10 && self_adjoint <= 1e-10 && rank_gap == 0;
    verdict(
        3,
        "conditional expectation",
        pass,
        &format!(
            "idempotent {idempotent:.2e} <= 1e-10, self-adjoint {self_adjoint:.2e} <= 1e-10, \
             rank gap {rank_gap} == 0"
        ),
    );
}

#[test]
fn criterion_04_markovian_machinery() {
    let (model, measure) = fixture(Fixture::Skew2);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let rn = rn_data(&model, &measure, 2).unwrap();
    let omega_cert = is_markovian(&model, &measure, rn.omega(), 1e-12).unwrap();
    let certified = omega_cert.is_valid() && omega_cert.deviation() <= 1e-12;

    let g = positive_depth_one(&model, &mut rng);
    let there = transport(&model, &measure, &omega_cert, &g, 1e-12).unwrap();
    let back = transport(
        &model,
        &there.measure,
        &there.certificate,
        &g.recip(&model).unwrap(),
        1e-12,
    )
    .unwrap();
    let round_trip = back.weight.sup_distance(rn.omega(), &model).unwrap();

    let mut convex = 0.0f64;
    for _ in 0..50 {
        let a = random_markovian(&model, &measure, 2, &mut rng).unwrap();
        let b = random_markovian(&model, &measure, 2, &mut rng).unwrap();
        let lambda = rng.random_range(0.0..=1.0);
        let blend = a
            .scale(Complex64::new(lambda, 0.0))
            .add(&b.scale(Complex64::new(1.0 - lambda, 0.0)), &model)
            .unwrap();
        convex = convex.max(
            is_markovian(&model, &measure, &blend, 1e-12)
                .unwrap()
                .deviation(),
        );
    }

    let (_, power_cert) = power_product(
        &model,
        &measure,
        &[omega_cert.clone(), omega_cert.clone()],
        1e-12,
    )
    .unwrap();
    let power = power_cert.deviation();

    let h = positive_depth_one(&model, &mut rng);
    let paired = corresponding_weight(&model, &measure, &omega_cert, &h, 1e-12).unwrap();
    let correspondence =
        pairing_deviation(&model, &measure, &h, &paired.weight, rn.omega()).unwrap();

    let pass = certified
        && round_trip <= 1e-12
        && convex <= 1e-12
        && power <= 1e-12
        && correspondence <= 1e-12;
    verdict(
        4,
        "shift-compatible weights",
        pass,
        &format!(
            "forward weight {:.2e}, round trip {round_trip:.2e}, convexity {convex:.2e}, \
             power {power:.2e}, correspondence {correspondence:.2e}, all <= 1e-12",
            omega_cert.deviation()
        ),
    );
}

#[test]
fn criterion_05_cuntz_relations() {
    let (model, measure) = fixture(Fixture::Uniform2);
    let unit_cert = is_markovian(&model, &measure, &CylFn::one(), 1e-12).unwrap();
    let mut named_worst = 0.0f64;
    let mut named_pass = true;
    for bank in BankFixture::ALL {
        let filters = bank.filters(&model).unwrap();
        let report = verify_cuntz(&model, &measure, &unit_cert, &filters, 1e-12).unwrap();
        named_pass &= report.pass();
        named_worst = named_worst
            .max(report.worst_deviation())
            .max(report.sum_of_ranges().unwrap_or(f64::INFINITY))
            .max(report.range_orthogonality().unwrap_or(f64::INFINITY));
    }

    let (skew_model, skew_measure) = fixture(Fixture::Skew2);
    let omega = rn_data(&skew_model, &skew_measure, 1).unwrap().omega().clone();
    let omega_cert = is_markovian(&skew_model, &skew_measure, &omega, 1e-10).unwrap();
    let construction = cyclic_construct(
        &skew_model,
        &skew_measure,
        &BankWeight::Weighted(omega_cert),
        1e-10,
    )
    .unwrap();
    let skew_report = construction.cuntz().expect("constant fibers").clone();
    let skew_ok = skew_report.pass() && skew_report.worst_deviation() <= 1e-10;

    let selector = BankFixture::Selector.filters(&model).unwrap();
    let dropped = verify_cuntz(&model, &measure, &unit_cert, &selector[..1], 1e-12).unwrap();
    let dropped_ok = !dropped.pass() && dropped.condition_ii() >= 0.4;

    let pass = named_pass && named_worst <= 1e-12 && skew_ok && dropped_ok;
    verdict(
        5,
        "isometry relations",
        pass,
        &format!(
            "named banks worst {named_worst:.2e} <= 1e-12, derivative bank worst {:.2e} \
             <= 1e-10, dropped-filter completeness gap {:.3} >= 0.4",
            skew_report.worst_deviation(),
            dropped.condition_ii()
        ),
    );
}

#[test]
fn criterion_06_subspace_decomposition() {
    let (model, measure) = fixture(Fixture::Uniform2);
    let unit_cert = is_markovian(&model, &measure, &CylFn::one(), 1e-12).unwrap();
    let ambient = model.dim(model.depth_budget()).unwrap();
    let mut dim_gap = 0usize;
    let mut cosine = 0.0f64;
    for bank in BankFixture::ALL {
        let filters = bank.filters(&model).unwrap();
        let report =
            subspace_decomposition(&model, &measure, &unit_cert, &filters, 1e-9).unwrap();
        dim_gap += report.total.abs_diff(ambient);
        cosine = cosine.max(report.max_cross_cosine);
    }
    let pass = dim_gap == 0 && cosine <= 1e-9;
    verdict(
        6,
        "subspace decomposition",
        pass,
        &format!("dimension gap {dim_gap} == 0, max principal cosine {cosine:.2e} <= 1e-9"),
    );
}

#[test]
fn criterion_07_loop_group() {
    let (model, measure) = fixture(Fixture::Uniform2);
    let selector = BankFixture::Selector.build(&model, &measure, 1e-12).unwrap();
    let sign = BankFixture::Sign.build(&model, &measure, 1e-12).unwrap();

    let butterfly = connect(&model, &measure, &selector, &sign, 1e-10).unwrap();
    let matrix = &butterfly.matrices()[0];
    let r = 0.5f64.sqrt();
    let want = [[r, r], [r, -r]];
    let mut constant_gap = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            constant_gap = constant_gap
                .max((matrix[(i, j)] - Complex64::new(want[i][j], 0.0)).norm());
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut transitivity = 0.0f64;
    let mut freeness = 0.0f64;
    for k in 0..20 {
        let element = if k % 2 == 0 {
            LoopElement::random_constant(&model, 2, &mut rng).unwrap()
        } else {
            LoopElement::random(&model, 1, 2, &mut rng).unwrap()
        };
        let acted = loop_act(&model, &measure, &selector, &element, 1e-10).unwrap();
        let connector = connect(&model, &measure, &selector, &acted, 1e-10).unwrap();
        let reacted = loop_act(&model, &measure, &selector, &connector, 1e-10).unwrap();
        for (a, b) in reacted.filters().iter().zip(acted.filters()) {
            transitivity = transitivity.max(a.sup_distance(b, &model).unwrap());
        }
        freeness = freeness.max(connector.sup_distance(&model, &element).unwrap());
    }

    let pass = constant_gap <= 1e-12 && transitivity <= 1e-10 && freeness <= 1e-10;
    verdict(
        7,
        "loop group action",
        pass,
        &format!(
            "connector entries {constant_gap:.2e} <= 1e-12, transitivity \
             {transitivity:.2e} <= 1e-10, freeness {freeness:.2e} <= 1e-10 over 20 elements"
        ),
    );
}

#[test]
fn criterion_08_cyclic_construction() {
    let (model, measure) = fixture(Fixture::Uniform2);
    let construction =
        cyclic_construct(&model, &measure, &BankWeight::Plain, 1e-12).unwrap();
    let report = construction.cuntz().expect("constant fibers").clone();
    let built_ok = report.pass() && construction.complete();

    let mut corrupted = construction.filters().to_vec();
    corrupted[0] = corrupted[0].scale(Complex64::new(1.3, 0.0));
    let corrupted_report = verify_cuntz_plain(&model, &measure, &corrupted, 1e-12).unwrap();
    let flipped = !corrupted_report.pass();

    let pass = built_ok && flipped;
    verdict(
        8,
        "cyclic construction",
        pass,
        &format!(
            "constructed bank worst {:.2e} passes, corrupted bank worst {:.3} fails",
            report.worst_deviation(),
            corrupted_report.worst_deviation()
        ),
    );
}

#[test]
fn criterion_09_wold_decomposition() {
    let (model, measure) = fixture(Fixture::Uniform2);
    let report = wold(&model, &measure, DEPTH).unwrap();
    let dims_ok = report.dim_h_infinity == 1 && report.layer_dims == vec![4, 2, 1];

    let mut drift = 0.0f64;
    for f in &report.h_infinity_basis {
        let reference = measure.norm(&model, f).unwrap();
        let mut g = f.clone();
        for _ in 0..DEPTH {
            g = apply_shift_adjoint(&model, &measure, &g).unwrap();
            drift = drift.max((measure.norm(&model, &g).unwrap() - reference).abs());
        }
    }

    let pass = dims_ok && drift <= 1e-10;
    verdict(
        9,
        "wold decomposition",
        pass,
        &format!(
            "dims ({}, {:?}) == (1, [4, 2, 1]), backward norm drift {drift:.2e} <= 1e-10",
            report.dim_h_infinity, report.layer_dims
        ),
    );
}

#[test]
fn criterion_10_solenoid() {
    let mut gram = 0.0f64;
    let mut marginal = 0.0f64;
    let mut mismatches = 0usize;
    for f in Fixture::ALL {
        let (model, measure) = fixture(f);
        let (_, report) = solenoid_build(&model, &measure, 2).unwrap();
        gram = gram.max(report.gram_deviation);
        marginal = marginal.max(report.marginal_deviation);
        mismatches += report.factor_mismatches;
    }
    let pass = gram <= 1e-12 && marginal <= 1e-12 && mismatches == 0;
    verdict(
        10,
        "extended shift model",
        pass,
        &format!(
            "gram {gram:.2e} <= 1e-12, marginal {marginal:.2e} <= 1e-12, factor \
             mismatches {mismatches} == 0"
        ),
    );
}

#[test]
fn criterion_11_determinism() {
    let mut identical = true;
    for f in Fixture::ALL {
        let scenario = Scenario::for_fixture(f);
        assert_eq!(scenario.seed, SEED);
        let first = run(&scenario).unwrap();
        let second = run(&scenario).unwrap();
        identical &= first.report.to_json().unwrap() == second.report.to_json().unwrap();
        identical &= first.artifacts.len() == second.artifacts.len()
            && first
                .artifacts
                .iter()
                .zip(&second.artifacts)
                .all(|(a, b)| a.name == b.name && a.csv == b.csv);
    }
    verdict(
        11,
        "determinism",
        identical,
        "repeated seed-7 runs produce byte-identical reports on all fixtures",
    );
}
