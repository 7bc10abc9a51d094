use std::sync::Arc;

use delos_core::field::{DiffField, FieldElement};
use delos_core::geometry::*;
use delos_core::involution::*;
use delos_core::ore::OperatorMatrix;

fn dims(sys: &LinearSystem, upto: usize) -> Vec<usize> {
    (0..=upto).map(|r| symbol(sys, r).unwrap().dim().unwrap()).collect()
}

#[test]
fn killing_three_symbol() {
    let s = killing_system(&Metric::euclidean(3)).unwrap();
    assert_eq!(dims(&s, 1), vec![3, 0]);
}

#[test]
fn conformal_three_symbol_and_order() {
    let s = conformal_killing_system(&Metric::euclidean(3)).unwrap();
    assert_eq!(s.equations.rows(), 5);
    assert_eq!(dims(&s, 2), vec![4, 3, 0]);
    let probe = cc_count_probe(&s, 3).unwrap();
    let counts: Vec<i64> = probe.iter().map(|p| p.count).collect();
    assert_eq!(counts, vec![0, 0, 5]);
    assert_eq!((probe[0].g, probe[0].s, probe[0].f), (3, 18, 15));
    assert_eq!(cc_order_estimate(&s, CompletionBudget::default()).unwrap(), 3);
}

#[test]
fn conformal_four_is_two_acyclic_at_second_order() {
    let s = conformal_killing_system(&Metric::minkowski(4)).unwrap();
    assert_eq!(s.equations.rows(), 9);
    assert_eq!(cc_order_estimate(&s, CompletionBudget::default()).unwrap(), 2);
    let s2 = s.clone().with_order(2).unwrap();
    let t = delta_cohomology(&s2, 1).unwrap();
    assert!(t.delta_squared_zero);
    for r in 0..=1 {
        assert_eq!(t.h(r, 1), Some(0));
        assert_eq!(t.h(r, 2), Some(0));
    }
}

#[test]
fn contact_three_completion() {
    let f = Arc::new(DiffField::standard(3));
    let w = vec![FieldElement::int(1), -f.coord(2), FieldElement::int(0)];
    let s = contact_form_system(&f, &w).unwrap();
    assert_eq!(s.equations.rows(), 2);
    assert!(matches!(
        is_involutive(&s).unwrap(),
        Involutivity::No(NotInvolutiveReason::NotFormallyIntegrable { .. })
    ));
    let g1 = delta_cohomology(&s, 1).unwrap();
    assert!(g1.vanishes(3));
    let c = formal_integrability_complete(&s, CompletionBudget::default()).unwrap();
    assert_eq!(c.added.len(), 1);
    let row = delos_core::ore::render_row(&f, &c.added[0].row, &s.unknowns);
    assert_eq!(row, "-xi1[1] + 2*x3*xi2[1] + xi2[2] + xi3[3]");
    match c.certificate {
        Certificate::Involutive(t) => assert_eq!(t.describe(), "2 of class 3, 1 of class 2"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn hamilton_jacobi_completion() {
    let s = hj_contact_system().unwrap();
    let c = formal_integrability_complete(&s, CompletionBudget::default()).unwrap();
    assert_eq!(c.added.len(), 1);
    let row = delos_core::ore::render_row(&s.field, &c.added[0].row, &s.unknowns);
    assert_eq!(row, "-xi[2] + eta[1] + 2*p*eta[2] + zeta[3]");
    assert!(matches!(c.certificate, Certificate::Involutive(_)));
    let r = equation_rank(&c.system).unwrap();
    assert_eq!(jet_dim(3, 3, 1) - r, 9);
}

#[test]
fn contact_five_bundles() {
    let (f, w) = standard_contact_form(5, ContactLayout::Trailing).unwrap();
    let raw = contact_system(&f, &w).unwrap();
    let c = formal_integrability_complete(&raw, CompletionBudget::default()).unwrap();
    assert!(!c.added.is_empty());
    assert!(bundle_dims(BundleKind::Janet, &raw).is_err());
    let dims = bundle_dims(BundleKind::Janet, &c.system).unwrap();
    assert_eq!(dims, vec![10, 10, 5, 1, 0, 0]);
}

#[test]
fn airy_full() {
    let f = Arc::new(DiffField::standard(2));
    let m = OperatorMatrix::parse_rows(f, &["phi".to_string()], &["phi[2,2]", "phi[1,2]", "phi[1,1]"]).unwrap();
    let s = LinearSystem::new(m);
    assert!(is_involutive(&s).unwrap().is_yes());
}
