//! Search tables through extraction, exact LP solving and certification.

use cryptosplit::builtin::{cyclic_constraints, twobit_constraints};
use cryptosplit::constraint::{Constraint, ConstraintSet};
use cryptosplit::extract::{extract, sparsify};
use cryptosplit::lp::{build_lp, emit_lp, parse_lp, solve_exact, verify_certificate, LpSolution};
use cryptosplit::scalar::{ratio, rational_from_f64};
use cryptosplit::search::{run_search, SearchOptions};
use cryptosplit::{lattice, Error, FloatTable};
use num_traits::Signed;

fn converged(t: u32) -> FloatTable {
    run_search::<f64>(t, &SearchOptions::default(), &mut |_| {}).unwrap().0
}

#[test]
fn extracted_sets_certify_the_search_value() {
    for t in 2..=9 {
        let table = converged(t);
        let root = lattice(t, t, t, t);
        let cs = extract(&table, &root, table.step()).unwrap();
        cs.validate().unwrap();
        cs.check_closed().unwrap();
        let sol = solve_exact(&build_lp(&cs).unwrap()).unwrap();
        let verdict = verify_certificate(&cs, &sol, false).unwrap();
        let searched = rational_from_f64(*table.value(&root).unwrap()).unwrap();
        let gap = (verdict.bound_value() - searched).abs();
        assert!(gap < ratio(1, 1_000_000_000), "T={t}: {} vs {}", verdict.bound.decimal, table.value(&root).unwrap());

        let sparse = sparsify(&cs, &sol).unwrap();
        assert!(sparse.len() <= cs.len());
        let again = solve_exact(&build_lp(&sparse).unwrap()).unwrap();
        assert_eq!(again.objective, sol.objective, "T={t}");
        verify_certificate(&sparse, &again, true).unwrap();
    }
}

#[test]
fn never_updated_position_gives_one_zero_bit_constraint() {
    let table = converged(4);
    let cs = extract(&table, &lattice(1, 0, 0, 0), table.step()).unwrap();
    assert_eq!(cs.len(), 1);
    assert!(matches!(cs.constraints[0], Constraint::ZeroBit { .. }));
}

#[test]
fn t15_certificate_size_is_moderate() {
    let table = converged(15);
    let root = lattice(15, 15, 15, 15);
    let cs = extract(&table, &root, table.step()).unwrap();
    let sol = solve_exact(&build_lp(&cs).unwrap()).unwrap();
    let sparse = sparsify(&cs, &sol).unwrap();
    assert!((50..5000).contains(&sparse.len()), "{} constraints", sparse.len());
    let verdict = verify_certificate(&sparse, &solve_exact(&build_lp(&sparse).unwrap()).unwrap(), true).unwrap();
    assert!(verdict.bound_value() >= ratio(449, 1344));
}

#[test]
fn cyclic_set_is_already_sparse() {
    let cs = cyclic_constraints();
    let sol = solve_exact(&build_lp(&cs).unwrap()).unwrap();
    assert_eq!(sparsify(&cs, &sol).unwrap().len(), cs.len());
}

#[test]
fn duplicates_and_slack_relations_are_dropped() {
    let base = twobit_constraints();
    let mut padded = base.constraints.clone();
    padded.push(base.constraints[0].clone());
    // Slack at the optimum (3 < 4), and a relation nothing reaches.
    padded.push(Constraint::zero_bit(lattice(3, 3, 3, 3)));
    padded.push(Constraint::zero_bit(lattice(2, 0, 1, 0)));
    let cs = ConstraintSet::new(base.root.clone(), padded, base.metadata.clone());
    let sol = solve_exact(&build_lp(&cs).unwrap()).unwrap();
    assert_eq!(sol.objective, ratio(4, 1));
    let sparse = sparsify(&cs, &sol).unwrap();
    assert_eq!(sparse.len(), base.len());
}

#[test]
fn lp_text_and_solution_json_round_trip() {
    for cs in [twobit_constraints(), cyclic_constraints()] {
        let model = build_lp(&cs).unwrap();
        let text = emit_lp(&model);
        assert_eq!(parse_lp(&text).unwrap(), model);
        let sol = solve_exact(&model).unwrap();
        let back = LpSolution::from_json(&sol.to_json().unwrap()).unwrap();
        assert_eq!(back, sol);
        let set = ConstraintSet::from_json(&cs.to_json().unwrap()).unwrap();
        assert_eq!(set, cs);
    }
}

#[test]
fn tampered_certificates_are_rejected() {
    let cs = cyclic_constraints();
    let mut sol = solve_exact(&build_lp(&cs).unwrap()).unwrap();
    sol.objective += ratio(1, 28);
    assert!(verify_certificate(&cs, &sol, true).is_err());

    let mut broken = cs.clone();
    let row = broken.constraints.iter().position(|c| matches!(c, Constraint::Split { .. })).unwrap();
    if let Constraint::Split { left, .. } = &mut broken.constraints[row] {
        *left = lattice(9, 6, 5, 5);
    }
    let good = solve_exact(&build_lp(&cs).unwrap()).unwrap();
    match verify_certificate(&broken, &good, true) {
        Err(Error::InvalidConstraint { index, .. }) => assert_eq!(index, row),
        other => panic!("{other:?}"),
    }
}
