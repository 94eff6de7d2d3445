use cryptosplit::hardness::{
    check_c2prime, check_c2prime_with, check_dominates_succ0, check_psd, f_poly, hessian_fq, s_homogeneous, s_upper,
    ub_superadditive_check, GridSpec, Variant,
};
use cryptosplit::scalar::ratio;
use cryptosplit::{ExactPosition, Position, Rational};

fn pos(a: (i64, i64), b: (i64, i64), c: (i64, i64), d: (i64, i64)) -> ExactPosition {
    Position::new(ratio(a.0, a.1), ratio(b.0, b.1), ratio(c.0, c.1), ratio(d.0, d.1))
}

#[test]
fn landmark_values() {
    let q = (1, 4);
    assert_eq!(s_upper(&pos(q, q, q, q), Variant::Adapted), ratio(47, 128));
    assert_eq!(s_upper(&pos((1, 1), (0, 1), (0, 1), (0, 1)), Variant::Adapted), ratio(0, 1));
    assert_eq!(s_upper(&pos((1, 2), (0, 1), (1, 2), (0, 1)), Variant::Adapted), ratio(1, 2));
    assert_eq!(s_upper(&pos((0, 1), (1, 2), (0, 1), (1, 2)), Variant::Adapted), ratio(1, 2));
}

#[test]
fn six_point_condition_for_both_variants() {
    for variant in [Variant::Adapted, Variant::Brody] {
        let verdict = check_c2prime(variant);
        assert!(verdict.passed && verdict.checked == 6, "{verdict:?}");
    }
    // Lowering the function by a quarter breaks it at every vertex.
    let lowered = check_c2prime_with(|d| (Rational::from_integer(0.into()) - f_poly(d, Variant::Adapted)) / ratio(4, 1));
    assert!(!lowered.passed);
    assert!(lowered.witnesses.iter().any(|w| w.point.contains("1,0,0,0")), "{lowered:?}");
}

#[test]
fn upper_bound_dominates_zero_bit() {
    let q = (1, 4);
    assert!(s_upper(&pos(q, q, q, q), Variant::Adapted) >= ratio(1, 4));
    assert!(check_dominates_succ0(20_000, 3, Variant::Adapted).passed);
}

#[test]
fn two_bit_first_split_is_concave() {
    let (third, sixth) = ((1, 3), (1, 6));
    let whole = s_upper(&pos((1, 4), (1, 4), (1, 4), (1, 4)), Variant::Adapted);
    let left = s_upper(&pos(third, third, sixth, sixth), Variant::Adapted);
    let right = s_upper(&pos(sixth, sixth, third, third), Variant::Adapted);
    assert!(whole >= (left + right) / ratio(2, 1));
}

#[test]
fn homogeneous_extension_is_superadditive_on_the_two_bit_split() {
    let d = pos((3, 1), (3, 1), (3, 1), (3, 1));
    let l = pos((2, 1), (2, 1), (1, 1), (1, 1));
    let r = pos((1, 1), (1, 1), (2, 1), (2, 1));
    let v = Variant::Adapted;
    assert!(s_homogeneous(&d, v) >= s_homogeneous(&l, v) + s_homogeneous(&r, v));
}

#[test]
fn superadditivity_examples_and_samples() {
    let (one, zero) = (1u64, 0u64);
    let d = Position::new(2u64, 2, 2, 2);
    assert!(d.ub_min() >= Position::new(one, one, one, one).ub_min() * 2);
    assert_eq!(Position::new(one, zero, zero, one).ub_min() + Position::new(zero, one, one, zero).ub_min(), 0);
    assert!(ub_superadditive_check(20_000, 9).passed);
}

#[test]
fn hessian_at_the_origin() {
    let z = ratio(0, 1);
    let h = hessian_fq(&z, &z, &z);
    assert_eq!(h[0][0], ratio(16, 1));
}

#[test]
fn hessian_is_positive_semidefinite_on_a_coarse_grid() {
    let report = check_psd(&GridSpec::log_spaced(31, 4));
    assert!(report.passed, "{report:?}");
    assert_eq!(report.factorization_mismatches, 0);
    assert_eq!(report.symmetry_mismatches, 0);
    assert_eq!(report.stencil_mismatches, 0);
    assert!(report.finite_difference_max_residual < 1e-5);
}
