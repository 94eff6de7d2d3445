//! Randomized invariants, 10^5 cases each with a fixed seed.

use cryptosplit::hardness::{check_c1_sampling, Variant};
use cryptosplit::position::Symmetry;
use cryptosplit::protocol::{simulate, ProtocolGraph, SimulationOptions};
use cryptosplit::scalar::ratio;
use cryptosplit::split::{is_allowed_split, lift_relaxed, RelaxedVariant, Split, SplitKind};
use cryptosplit::{ExactPosition, LatticePosition, Position};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

const CASES: u32 = 100_000;
const SEED: [u8; 32] = *b"cryptosplit-property-suite-seed!";

fn runner() -> TestRunner {
    let config = Config { cases: CASES, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &SEED))
}

fn lattice_position(max: u32) -> impl Strategy<Value = LatticePosition> {
    prop::array::uniform4(0..=max).prop_map(Position::from_abcd)
}

/// Any nonnegative decomposition `D = D0 + D1`, allowed or not.
fn any_split() -> impl Strategy<Value = (LatticePosition, LatticePosition)> {
    (prop::array::uniform4(0..=40u32), prop::array::uniform4(0..=40u32))
        .prop_map(|(x, y)| (Position::from_abcd(x), Position::from_abcd(y)))
}

/// An allowed split with exact rational entries: the sender's coordinates are
/// divided freely, the partner's scale by `num / den`.
fn allowed_split() -> impl Strategy<Value = (ExactPosition, ExactPosition, ExactPosition, usize)> {
    (prop::array::uniform4(0..=30i64), 0..2usize, 0..=30i64, 0..=30i64, 0..=16i64, 1..=16i64).prop_map(
        |(d, player, s0, s1, num, den)| {
            let num = num.min(den);
            let d: [i64; 4] = d;
            let parent = Position::from_abcd(d.map(|v| ratio(v, 1)));
            let mut left = [ratio(0, 1), ratio(0, 1), ratio(0, 1), ratio(0, 1)];
            let own = [2 * player, 2 * player + 1];
            left[own[0]] = ratio(s0.min(d[own[0]]), 1);
            left[own[1]] = ratio(s1.min(d[own[1]]), 1);
            let other = 2 * (1 - player);
            left[other] = ratio(d[other] * num, den);
            left[other + 1] = ratio(d[other + 1] * num, den);
            let left = Position::from_abcd(left);
            let right = parent.sub(&left);
            (parent, left, right, player)
        },
    )
}

#[test]
fn ub_min_is_superadditive_under_arbitrary_splits() {
    runner()
        .run(&any_split(), |(x, y)| {
            prop_assert!(x.add(&y).ub_min() >= x.ub_min() + y.ub_min());
            Ok(())
        })
        .unwrap();
}

#[test]
fn ub_min_is_superadditive_under_allowed_rational_splits() {
    runner()
        .run(&allowed_split(), |(parent, left, right, player)| {
            prop_assert!(is_allowed_split(&parent, &left, &right, player));
            prop_assert!(parent.ub_min() >= left.ub_min() + right.ub_min());
            Ok(())
        })
        .unwrap();
}

#[test]
fn lifted_relaxed_splits_are_allowed_and_dominate() {
    let strategy = (lattice_position(20), 0..4usize, any::<[u32; 3]>());
    runner()
        .run(&strategy, |(parent, v, parts)| {
            let variant = RelaxedVariant::ALL[v];
            let d = parent.abcd();
            if !variant.applies(&d) {
                return Ok(());
            }
            let free = variant.free_coords().map(|c| d[c]);
            let parts = [0, 1, 2].map(|i| parts[i] % (free[i] + 1));
            let (left, right) = variant.children(&d, parts);
            let split = Split {
                parent: parent.clone(),
                left: Position::from_abcd(left),
                right: Position::from_abcd(right),
                player: variant.sender(),
                kind: SplitKind::Relaxed { coordinate: variant.floored as u8 },
            };
            let (l, r) = lift_relaxed(&split);
            prop_assert!(is_allowed_split(&parent.to_rational(), &l, &r, split.player));
            prop_assert!(split.left.to_rational().le(&l));
            prop_assert!(split.right.to_rational().le(&r));
            Ok(())
        })
        .unwrap();
}

#[test]
fn succ_zero_is_invariant_under_symmetries() {
    runner()
        .run(&lattice_position(1000), |p| {
            let v = p.succ_zero();
            prop_assert_eq!(p.canonical().succ_zero(), v);
            for sym in Symmetry::ALL {
                prop_assert_eq!(p.apply(sym).succ_zero(), v);
            }
            Ok(())
        })
        .unwrap();
}

#[test]
fn canonical_form_is_a_class_invariant() {
    runner()
        .run(&lattice_position(50), |p| {
            let (canon, g) = p.canonicalize();
            prop_assert_eq!(p.apply(g), canon.clone());
            for sym in Symmetry::ALL {
                prop_assert_eq!(p.apply(sym).canonical(), canon.clone());
            }
            Ok(())
        })
        .unwrap();
}

#[test]
fn upper_bound_is_concave_on_sampled_allowed_splits() {
    let verdict = check_c1_sampling(CASES as u64, 20_260_101, Variant::Adapted);
    assert!(verdict.passed, "{verdict:?}");
    assert_eq!(verdict.checked, CASES as u64);
}

fn assert_simulation_agrees(name: &str) {
    let graph = ProtocolGraph::builtin(name).unwrap();
    let opts = SimulationOptions { samples: CASES as u64, depth_limit: 200, seed: 11 };
    let report = simulate(&graph, &opts).unwrap();
    assert!(report.deviation_sigmas.abs() <= 4.0, "{report:?}");
    assert_eq!(report.expected.exact, cryptosplit::scalar::rational_string(&graph.normalized_value().unwrap()));
}

#[test]
fn monte_carlo_agrees_with_twobit_value() {
    assert_simulation_agrees("twobit");
}

#[test]
fn monte_carlo_agrees_with_cyclic_value() {
    assert_simulation_agrees("cyclic");
}
