use std::sync::Arc;

use delos_core::basis::{diff_rank, syzygies};
use delos_core::duality::{five_step_test, Stages};
use delos_core::field::DiffField;
use delos_core::involution::{delta_cohomology, LinearSystem};
use delos_core::ore::{DiffOperator, OperatorMatrix};
use proptest::prelude::*;

fn field() -> Arc<DiffField> {
    Arc::new(DiffField::standard(2))
}

fn arb_term(coeffs: Vec<&'static str>) -> impl Strategy<Value = String> {
    let jet = prop::sample::select(vec!["", "[1]", "[2]", "[1,1]", "[1,2]", "[2,2]"]);
    (-3i32..=3, prop::sample::select(coeffs), jet).prop_map(|(c, a, j)| format!("{c}*{a}u{j}"))
}

fn arb_row(unknowns: usize, coeffs: Vec<&'static str>) -> impl Strategy<Value = String> {
    prop::collection::vec((arb_term(coeffs), 0..unknowns), 1..4).prop_map(|ts| {
        ts.into_iter().map(|(t, k)| t.replace('u', &format!("u{}", k + 1))).collect::<Vec<_>>().join(" + ")
    })
}

fn unknowns(m: usize) -> Vec<String> {
    (1..=m).map(|k| format!("u{k}")).collect()
}

fn matrix(m: usize, rows: &[String]) -> OperatorMatrix {
    let rows: Vec<&str> = rows.iter().map(String::as_str).collect();
    OperatorMatrix::parse_rows(field(), &unknowns(m), &rows).unwrap()
}

/// Variable coefficients of degree at most two.
fn variable() -> Vec<&'static str> {
    vec!["", "x1*", "x2*", "x1*x2*", "x2^2*"]
}

fn constant() -> Vec<&'static str> {
    vec![""]
}

fn scalar(s: &str) -> DiffOperator {
    matrix(1, &[s.to_string()]).get(0, 0).clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn adjoint_is_an_involution(rows in prop::collection::vec(arb_row(2, variable()), 1..3)) {
        let a = matrix(2, &rows);
        let mut back = a.adjoint().unwrap().adjoint().unwrap();
        back.convention = a.convention;
        prop_assert!(back == a);
    }

    #[test]
    fn adjoint_reverses_products(p in arb_row(1, variable()), q in arb_row(1, variable())) {
        let f = field();
        let (p, q) = (scalar(&p), scalar(&q));
        let lhs = p.mul(&f, &q).unwrap().adjoint(&f).unwrap();
        let rhs = q.adjoint(&f).unwrap().mul(&f, &p.adjoint(&f).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn composition_is_associative(p in arb_row(1, variable()), q in arb_row(1, variable()), r in arb_row(1, variable())) {
        let f = field();
        let (p, q, r) = (scalar(&p), scalar(&q), scalar(&r));
        let lhs = p.mul(&f, &q).unwrap().mul(&f, &r).unwrap();
        let rhs = p.mul(&f, &q.mul(&f, &r).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn compatibility_conditions_annihilate(rows in prop::collection::vec(arb_row(2, constant()), 2..4)) {
        let a = matrix(2, &rows);
        prop_assume!(!a.is_zero());
        let cc = syzygies(&a).unwrap().cc_matrix;
        if cc.rows() > 0 {
            prop_assert!(cc.mul(&a).unwrap().is_zero());
            // Independent conditions match the rank deficit.
            prop_assert_eq!(diff_rank(&cc).unwrap(), a.rows() - diff_rank(&a).unwrap());
        }
    }

    #[test]
    fn adjoint_preserves_rank(rows in prop::collection::vec(arb_row(2, variable()), 1..3)) {
        let a = matrix(2, &rows);
        prop_assume!(!a.is_zero());
        let mut ad = a.adjoint().unwrap();
        ad.convention = a.convention;
        prop_assert_eq!(diff_rank(&a).unwrap(), diff_rank(&ad).unwrap());
    }

    #[test]
    fn spencer_differential_squares_to_zero(rows in prop::collection::vec(arb_row(2, constant()), 1..4)) {
        let a = matrix(2, &rows);
        prop_assume!(!a.is_zero());
        let t = delta_cohomology(&LinearSystem::new(a), 1).unwrap();
        prop_assert!(t.delta_squared_zero);
    }

    #[test]
    fn analysis_is_deterministic(rows in prop::collection::vec(arb_row(2, constant()), 1..3)) {
        let a = matrix(2, &rows);
        prop_assume!(!a.is_zero());
        let r1 = five_step_test(&a, Stages::Ext1).unwrap();
        let r2 = five_step_test(&a, Stages::Ext1).unwrap();
        prop_assert_eq!(r1.verdict_ext1, r2.verdict_ext1);
        prop_assert_eq!(r1.d.render(), r2.d.render());
        prop_assert_eq!(r1.d1_prime.render(), r2.d1_prime.render());
        let w1: Vec<_> = r1.witnesses.iter().map(|w| w.render(a.field(), &a.col_labels)).collect();
        let w2: Vec<_> = r2.witnesses.iter().map(|w| w.render(a.field(), &a.col_labels)).collect();
        prop_assert_eq!(w1, w2);
    }
}
