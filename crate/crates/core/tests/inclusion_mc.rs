//! Monte Carlo checks of the two ε-enlargement inclusions of `A_K` on the
//! Heisenberg group and of the δ-description of Kaplan ε-balls.

use anisoperim_core::carnot::{mc_inclusion_experiment, McConfig, ViolationReport, Which};
use anisoperim_core::GroupSpec;

const SAMPLES: u64 = 1_000_000;

/// A `C0` below the root (about 0.961) of `25 C0⁶ / 256 + C0² = 1`, so the
/// constructed inner neighbour lies inside the Kaplan ε-ball.
const INNER_C0: f64 = 0.9;

fn h1() -> GroupSpec {
    GroupSpec::heisenberg(4.0).unwrap()
}

fn run(which: Which, mc: McConfig) -> ViolationReport {
    let report = mc_inclusion_experiment(&h1(), &mc, which).unwrap();
    assert_eq!(report.checked, mc.samples);
    assert_eq!(report.witness.is_some(), report.violations > 0);
    report
}

#[test]
fn outer_inclusion_is_clean_at_the_proof_constants() {
    for epsilon in [0.1, 0.05, 0.01] {
        for k in [5.0, 10.0, 20.0] {
            let mc = McConfig {
                seed: 42,
                samples: SAMPLES,
                epsilon,
                k,
                ..Default::default()
            };
            let r = run(Which::Outer, mc);
            assert_eq!(r.violations, 0, "ε = {epsilon}, K = {k}: {r:?}");
            assert!(r.worst_margin.unwrap() > 0.0);
        }
    }
}

#[test]
fn outer_inclusion_fails_without_the_linear_term() {
    let mc = McConfig {
        seed: 42,
        samples: SAMPLES,
        c1: Some(0.0),
        ..Default::default()
    };
    let r = run(Which::Outer, mc);
    assert!(r.violations >= 1);
    let w = r.witness.unwrap();
    assert!(w.sample_index < SAMPLES);
    assert!(r.worst_margin.unwrap() <= 0.0);
}

#[test]
fn outer_inclusion_on_a_wider_group() {
    let spec = GroupSpec::with_standard_basis(4, 2, 4.0).unwrap();
    let mc = McConfig {
        seed: 3,
        samples: 200_000,
        ..Default::default()
    };
    let r = mc_inclusion_experiment(&spec, &mc, Which::Outer).unwrap();
    assert_eq!(r.violations, 0, "{r:?}");
}

#[test]
fn inner_inclusion_is_clean_at_the_proof_constant() {
    for epsilon in [0.1, 0.05, 0.01] {
        for k in [10.0, 20.0] {
            let mc = McConfig {
                seed: 42,
                samples: SAMPLES,
                epsilon,
                k,
                c0: INNER_C0,
                ..Default::default()
            };
            let r = run(Which::Inner, mc);
            assert_eq!(r.violations, 0, "ε = {epsilon}, K = {k}: {r:?}");
            assert_eq!(r.precondition_failures, 0);
        }
    }
}

#[test]
fn inner_construction_leaves_the_ball_at_unit_c0() {
    // the neighbour sits at Kaplan distance ε (25/256 + 1)^{1/4} > ε
    let mc = McConfig {
        seed: 42,
        samples: 100_000,
        k: 20.0,
        ..Default::default()
    };
    let r = run(Which::Inner, mc);
    assert!(r.violations > 0);
    let expected = 1.0 - (25.0f64 / 256.0 + 1.0).powf(0.25);
    assert!(
        (r.worst_margin.unwrap() - expected).abs() < 1e-9,
        "{:?}",
        r.worst_margin
    );
}

#[test]
fn inner_positivity_step_holds_for_small_k() {
    // z + δ₃ ≥ K + (C0 - (C3 + 2 C0 χ)²/2) ε² > 0 for every sample of the region
    for k in [1.0, 0.1, 1e-3] {
        for epsilon in [0.1, 0.05] {
            let mc = McConfig {
                seed: 5,
                samples: 200_000,
                epsilon,
                k,
                c0: INNER_C0,
                ..Default::default()
            };
            let r = run(Which::Inner, mc);
            assert_eq!(r.precondition_failures, 0, "K = {k}, ε = {epsilon}");
            assert_eq!(r.violations, 0, "K = {k}, ε = {epsilon}: {r:?}");
        }
    }
}

#[test]
fn delta_conditions_hold_at_unit_c0() {
    for epsilon in [0.1, 0.01] {
        let mc = McConfig {
            seed: 9,
            samples: SAMPLES,
            epsilon,
            ..Default::default()
        };
        let r = run(Which::Delta, mc);
        assert_eq!(r.violations, 0, "ε = {epsilon}: {r:?}");
    }
}

#[test]
fn reports_do_not_depend_on_the_thread_count() {
    let mc = McConfig {
        seed: 11,
        samples: 50_000,
        c1: Some(0.0),
        ..Default::default()
    };
    let reports: Vec<ViolationReport> = [1, 3, 8]
        .into_iter()
        .map(|threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run(Which::Outer, mc))
        })
        .collect();
    assert!(reports[0].violations > 0);
    for r in &reports[1..] {
        assert_eq!(
            serde_json::to_string(r).unwrap(),
            serde_json::to_string(&reports[0]).unwrap()
        );
    }
}
