use cryptosplit::builtin::{cyclic_constraints, twobit_constraints};
use cryptosplit::lattice;
use cryptosplit::lp::{build_lp, emit_lp, parse_lp, solve_exact, solve_with, verify_certificate, SolveMethod};
use cryptosplit::scalar::ratio;

#[test]
fn cyclic_set_solves_to_449_over_28() {
    let cs = cyclic_constraints();
    cs.validate().unwrap();
    let model = build_lp(&cs).unwrap();
    let sol = solve_exact(&model).unwrap();
    assert_eq!(sol.objective, ratio(449, 28));
    assert_eq!(sol.value(&lattice(7, 7, 6, 4)), Some(&ratio(225, 28)));
    assert_eq!(sol.value(&lattice(12, 6, 12, 6)), Some(&ratio(13, 1)));
    let verdict = verify_certificate(&cs, &sol, true).unwrap();
    assert_eq!(verdict.bound_value(), ratio(449, 1344));
}

#[test]
fn both_solvers_agree() {
    for cs in [cyclic_constraints(), twobit_constraints()] {
        let model = build_lp(&cs).unwrap();
        let a = solve_with(&model, SolveMethod::Fixpoint).unwrap();
        let b = solve_with(&model, SolveMethod::Simplex).unwrap();
        assert_eq!(a.objective, b.objective);
    }
}

#[test]
fn twobit_set_solves_to_four() {
    let cs = twobit_constraints();
    let sol = solve_exact(&build_lp(&cs).unwrap()).unwrap();
    assert_eq!(sol.objective, ratio(4, 1));
    assert_eq!(verify_certificate(&cs, &sol, true).unwrap().bound_value(), ratio(1, 3));
}

#[test]
fn emitted_model_parses_back() {
    let model = build_lp(&cyclic_constraints()).unwrap();
    let text = emit_lp(&model);
    assert!(text.starts_with("min: s_12_12_12_12;\n"));
    assert_eq!(parse_lp(&text).unwrap(), model);
}
