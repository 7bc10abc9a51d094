use std::sync::Arc;

use delos_core::diffpoly::{linearize, DiffPolynomial, GenericPoint, Jet};
use delos_core::field::DiffField;
use delos_core::involution::*;
use delos_core::ore::{DiffOperator, OperatorMatrix};
use delos_core::Error;
use proptest::prelude::*;

fn field(gens: &[&str], table: &[(&str, usize, &str)]) -> Arc<DiffField> {
    let coords = vec!["x1".to_string(), "x2".to_string()];
    let gens: Vec<String> = gens.iter().map(|s| s.to_string()).collect();
    let bare = DiffField::new_unchecked(coords.clone(), gens.clone(), Vec::new()).unwrap();
    let entries = table.iter().map(|(g, i, v)| (g.to_string(), *i, bare.parse(v).unwrap())).collect();
    Arc::new(DiffField::new(coords, gens, entries).unwrap())
}

/// `k(y, y1, y2, y11)` with `y12 = y11`, `y22 = y11²/2`, `y111 = 0`.
fn example_three() -> (Vec<DiffPolynomial>, GenericPoint) {
    let f = field(
        &["y", "y1", "y2", "y11"],
        &[
            ("y", 0, "y1"),
            ("y", 1, "y2"),
            ("y1", 0, "y11"),
            ("y1", 1, "y11"),
            ("y2", 0, "y11"),
            ("y2", 1, "1/2*y11^2"),
            ("y11", 0, "0"),
            ("y11", 1, "0"),
        ],
    );
    let at = GenericPoint::from_names(f.clone(), &["y"], &[("y[1,2]", "y11"), ("y[2,2]", "1/2*y11^2")]).unwrap();
    let u = vec!["y".to_string()];
    let sys = ["y[2,2] - 1/2*y[1,1]^2", "y[1,2] - y[1,1]"]
        .iter()
        .map(|t| DiffPolynomial::parse(f.clone(), &u, t).unwrap())
        .collect();
    (sys, at)
}

/// `k(y, y1, y2, y11, y111)`, truncated above `y111`.
fn example_four() -> (Vec<DiffPolynomial>, GenericPoint) {
    let f = field(
        &["y", "y1", "y2", "y11", "y111"],
        &[
            ("y", 0, "y1"),
            ("y", 1, "y2"),
            ("y1", 0, "y11"),
            ("y1", 1, "1/2*y11^2"),
            ("y2", 0, "1/2*y11^2"),
            ("y2", 1, "1/3*y11^3"),
            ("y11", 0, "y111"),
            ("y11", 1, "y11*y111"),
        ],
    );
    let at = GenericPoint::from_names(f.clone(), &["y"], &[("y[1,2]", "1/2*y11^2"), ("y[2,2]", "1/3*y11^3")]).unwrap();
    let u = vec!["y".to_string()];
    let sys = ["y[2,2] - 1/3*y[1,1]^3", "y[1,2] - 1/2*y[1,1]^2"]
        .iter()
        .map(|t| DiffPolynomial::parse(f.clone(), &u, t).unwrap())
        .collect();
    (sys, at)
}

fn rendered(s: &LinearSystem) -> Vec<String> {
    (0..s.equations.rows()).map(|i| s.equations.render_row(i)).collect()
}

/// The linearized rows equal the given ones, written in any term order.
fn assert_rows(s: &LinearSystem, rows: &[&str]) {
    let want = OperatorMatrix::parse_rows(s.field.clone(), &s.unknowns, rows).unwrap();
    assert!(s.equations == want, "{:?}", rendered(s));
}

#[test]
fn points_are_zeros_of_their_systems() {
    for (sys, at) in [example_three(), example_four()] {
        for p in &sys {
            assert!(p.eval(&at).unwrap().is_zero(), "{p:?}");
        }
    }
}

#[test]
fn example_three_linearization() {
    let (sys, at) = example_three();
    let lin = linearize(&sys, &at).unwrap();
    assert_rows(&lin, &["Y[2,2] - y11*Y[1,1]", "Y[1,2] - Y[1,1]"]);
    assert_eq!(rendered(&lin), vec!["-y11*Y[1,1] + Y[2,2]", "-Y[1,1] + Y[1,2]"]);
    match is_involutive(&lin).unwrap() {
        Involutivity::No(NotInvolutiveReason::GenericRank { pivots }) => assert_eq!(pivots, vec!["y11 - 1"]),
        other => panic!("{other:?}"),
    }
    match formal_integrability_complete(&lin, CompletionBudget::default()) {
        Err(Error::RankDrop { pivot }) => assert_eq!(pivot, "y11 - 1"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn example_three_with_third_order_equation() {
    let (sys, at) = example_three();
    let lin = linearize(&sys, &at).unwrap();
    let fixed = lin.with_rows(vec![vec![DiffOperator::dirs(&[0, 0, 0])]]).unwrap();
    assert_eq!(fixed.q, 3);
    assert!(matches!(is_involutive(&fixed).unwrap(), Involutivity::Yes(_)));
    assert_eq!(symbol(&fixed, 0).unwrap().dim().unwrap(), 0);
}

#[test]
fn example_four_linearization() {
    let (sys, at) = example_four();
    let lin = linearize(&sys, &at).unwrap();
    assert_rows(&lin, &["Y[2,2] - y11^2*Y[1,1]", "Y[1,2] - y11*Y[1,1]"]);
    assert!(matches!(is_involutive(&lin).unwrap(), Involutivity::Yes(_)));
    let dims: Vec<usize> = (0..3).map(|r| symbol(&lin, r).unwrap().dim().unwrap()).collect();
    assert_eq!(dims, vec![1, 1, 1]);
}

#[test]
fn linearization_commutes_with_prolongation() {
    for (sys, at) in [example_three(), example_four()] {
        let f = at.field.clone();
        for p in &sys {
            let lp = linearize(std::slice::from_ref(p), &at).unwrap().equations;
            for i in 0..2 {
                let dp = p.prolong(i).unwrap();
                let lhs = linearize(&[dp], &at).unwrap().equations;
                let di = OperatorMatrix::from_rows(f.clone(), 1, vec![vec![DiffOperator::d(i)]]);
                let rhs = di.mul(&lp).unwrap();
                assert!(lhs == rhs, "d{} of {p:?}", i + 1);
            }
        }
    }
}

#[test]
fn linear_constant_polynomial_is_its_own_linearization() {
    let f = Arc::new(DiffField::standard(2));
    let at = GenericPoint::new(f.clone(), vec!["y".into()], Vec::new()).unwrap();
    let p = DiffPolynomial::parse(f, &["y".to_string()], "y[1,1] + 2*y[2] - 3*y").unwrap();
    let lin = linearize(&[p], &at).unwrap();
    assert_eq!(rendered(&lin), vec!["Y[1,1] + 2*Y[2] - 3*Y"]);
}

#[test]
fn inconsistent_and_unclosed_points() {
    let f = field(&["y", "y1", "y2"], &[("y", 0, "y1"), ("y", 1, "y2")]);
    let bad = GenericPoint::from_names(f.clone(), &["y"], &[("y[1]", "y2")]);
    assert!(matches!(bad, Err(Error::InconsistentTable(_))));
    let at = GenericPoint::from_names(f.clone(), &["y"], &[]).unwrap();
    // y11 needs d1(y1), which the table does not define.
    assert!(matches!(at.value(&Jet::new(0, &[0, 0])), Err(Error::UndefinedDerivative { .. })));
    let g = Arc::new(DiffField::standard(2));
    let empty = GenericPoint::new(g.clone(), vec!["y".into()], Vec::new()).unwrap();
    assert!(matches!(empty.value(&Jet::new(0, &[])), Err(Error::NonClosedSubstitution(_))));
}

fn arb_poly() -> impl Strategy<Value = String> {
    let jet = prop::sample::select(vec!["y", "y[1]", "y[2]", "y[1,1]", "y[1,2]", "x1", "x2"]);
    let term = (-3i32..=3, prop::collection::vec(jet, 1..3)).prop_map(|(c, js)| format!("{c}*{}", js.join("*")));
    prop::collection::vec(term, 1..4).prop_map(|ts| ts.join(" + "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn total_derivative_is_a_derivation(a in arb_poly(), b in arb_poly(), i in 0usize..2) {
        let f = Arc::new(DiffField::standard(2));
        let u = vec!["y".to_string()];
        let p = DiffPolynomial::parse(f.clone(), &u, &a).unwrap();
        let q = DiffPolynomial::parse(f, &u, &b).unwrap();
        let lhs = p.mul(&q).prolong(i).unwrap();
        let rhs = p.prolong(i).unwrap().mul(&q).add(&p.mul(&q.prolong(i).unwrap()));
        prop_assert_eq!(lhs, rhs);
        let sum = p.add(&q).prolong(i).unwrap();
        prop_assert_eq!(sum, p.prolong(i).unwrap().add(&q.prolong(i).unwrap()));
    }

    #[test]
    fn prolongations_commute(a in arb_poly()) {
        let f = Arc::new(DiffField::standard(2));
        let p = DiffPolynomial::parse(f, &["y".to_string()], &a).unwrap();
        prop_assert_eq!(p.prolong(0).unwrap().prolong(1).unwrap(), p.prolong(1).unwrap().prolong(0).unwrap());
    }
}
