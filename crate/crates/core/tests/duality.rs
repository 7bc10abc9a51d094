use std::sync::Arc;

use delos_core::basis::{groebner, module_compare, syzygies, ModuleComparison};
use delos_core::duality::*;
use delos_core::field::{DiffField, FieldElement};
use delos_core::geometry::{contact_form_system, riemann_einstein_ops, Metric};
use delos_core::ore::{proportional, DiffOperator, OperatorMatrix};
use delos_core::Error;

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn ops(field: &Arc<DiffField>, unknowns: &[&str], rows: &[&str]) -> OperatorMatrix {
    OperatorMatrix::parse_rows(field.clone(), &names(unknowns), rows).unwrap()
}

fn r3() -> Arc<DiffField> {
    Arc::new(DiffField::standard(3))
}

/// Constants as generators with vanishing derivatives.
fn constants(coords: &[&str], gens: &[&str]) -> Arc<DiffField> {
    let n = coords.len();
    let entries = gens.iter().flat_map(|g| (0..n).map(move |i| (g.to_string(), i, FieldElement::zero()))).collect();
    Arc::new(DiffField::new(names(coords), names(gens), entries).unwrap())
}

fn div() -> OperatorMatrix {
    ops(&r3(), &["eta1", "eta2", "eta3"], &["eta1[1] + eta2[2] + eta3[3]"])
}

fn curl() -> OperatorMatrix {
    ops(&r3(), &["xi1", "xi2", "xi3"], &["xi3[2] - xi2[3]", "xi1[3] - xi3[1]", "xi2[1] - xi1[2]"])
}

/// `P·w` lies in the module of `d1` for every witness and annihilator.
fn assert_witnesses_valid(d1: &OperatorMatrix, ws: &[TorsionWitness]) {
    let f = d1.field().clone();
    let g = groebner(d1).unwrap();
    for w in ws {
        assert!(!g.contains_row(&w.row).unwrap());
        assert!(!w.annihilators.is_empty());
        for p in &w.annihilators {
            let pw: Vec<DiffOperator> = w.row.iter().map(|x| p.mul(&f, x).unwrap()).collect();
            assert!(g.contains_row(&pw).unwrap());
        }
    }
}

#[test]
fn div_is_parametrized_by_curl_which_is_parametrized_by_grad() {
    let r = five_step_test(&div(), Stages::Ext2).unwrap();
    assert_eq!(r.verdict_ext1, Verdict::Zero);
    assert!(r.witnesses.is_empty());
    let d = r.parametrization.clone().unwrap();
    assert_eq!((d.rows(), d.cols()), (3, 3));
    let cc = syzygies(&d).unwrap().cc_matrix;
    assert_eq!(module_compare(&cc, &div()).unwrap(), ModuleComparison::Equal);
    // Same image as curl: each operator's columns are combinations of the other's.
    assert!(r.d1.mul(&d).unwrap().is_zero());
    let s2 = r.ext2.unwrap();
    assert_eq!(s2.verdict, Verdict::Zero);
    assert_eq!((s2.dm1.rows(), s2.dm1.cols()), (3, 1));
    let grad = ops(&r3(), &["phi"], &["phi[1]", "phi[2]", "phi[3]"]);
    for i in 0..3 {
        assert!(proportional(s2.dm1.row(i), grad.row(i)).is_some());
    }
    assert_eq!(module_compare(&s2.d_prime, &d).unwrap(), ModuleComparison::Equal);
}

#[test]
fn curl_is_parametrized_by_grad() {
    let r = five_step_test(&curl(), Stages::Ext1).unwrap();
    assert_eq!(r.verdict_ext1, Verdict::Zero);
    let d = r.parametrization.unwrap();
    assert_eq!((d.rows(), d.cols()), (3, 1));
}

#[test]
fn minimal_parametrization_of_div() {
    let m = minimal_parametrization(&curl(), &[2]).unwrap();
    let want = ops(&r3(), &["xi1", "xi2"], &["-xi2[3]", "xi1[3]", "xi2[1] - xi1[2]"]);
    assert!(m.op == want);
    assert_eq!(m.rank, 2);
    let cc = syzygies(&m.op).unwrap().cc_matrix;
    assert_eq!(module_compare(&cc, &div()).unwrap(), ModuleComparison::Equal);

    let same = minimal_parametrization(&curl(), &[]).unwrap();
    assert!(same.op == curl());

    match minimal_parametrization(&curl(), &[0, 1]) {
        Err(Error::NotAParametrizationAfterDrop(_)) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn minimal_image_has_autonomous_components() {
    let d1 = ops(&r3(), &["xi1", "xi2"], &["xi2[3]", "xi1[3]", "xi2[1] - xi1[2]"]);
    let r = five_step_test(&d1, Stages::Ext1).unwrap();
    assert_eq!(r.verdict_ext1, Verdict::Nonzero);
    let shown: Vec<String> = r.witnesses.iter().map(|w| w.render(&r3(), &d1.col_labels)).collect();
    assert_eq!(shown, vec!["xi1", "xi2"]);
    for w in &r.witnesses {
        assert_eq!(w.annihilators[0], DiffOperator::d(2));
    }
    assert_witnesses_valid(&d1, &r.witnesses);
}

#[test]
fn double_pendulum_with_distinct_lengths() {
    let f = constants(&["t"], &["l1", "l2", "g"]);
    let d1 = ops(&f, &["x", "theta1", "theta2"], &["x[1,1] + l1*theta1[1,1] + g*theta1", "x[1,1] + l2*theta2[1,1] + g*theta2"]);
    let r = five_step_test(&d1, Stages::Ext1).unwrap();
    assert_eq!(r.verdict_ext1, Verdict::Zero);
    let d = r.parametrization.unwrap();
    assert_eq!(d.cols(), 1);
    assert_eq!(d.order(), 4);
    let expected = ops(
        &f,
        &["phi"],
        &["-l1*l2*phi[1,1,1,1] - g*(l1 + l2)*phi[1,1] - g^2*phi", "l2*phi[1,1,1,1] + g*phi[1,1]", "l1*phi[1,1,1,1] + g*phi[1,1]"],
    );
    let col = |m: &OperatorMatrix| (0..3).map(|i| m.get(i, 0).clone()).collect::<Vec<_>>();
    assert!(proportional(&col(&d), &col(&expected)).is_some());
}

#[test]
fn double_pendulum_with_equal_lengths() {
    let f = constants(&["t"], &["l", "g"]);
    let d1 = ops(&f, &["x", "theta1", "theta2"], &["x[1,1] + l*theta1[1,1] + g*theta1", "x[1,1] + l*theta2[1,1] + g*theta2"]);
    let ws = torsion_witnesses(&d1).unwrap();
    assert_eq!(ws.len(), 1);
    let theta = ops(&f, &["x", "theta1", "theta2"], &["theta1 - theta2"]);
    assert!(proportional(&ws[0].row, theta.row(0)).is_some());
    let want = ops(&f, &["u"], &["l*u[1,1] + g*u"]);
    assert!(proportional(&ws[0].annihilators[..1], want.row(0)).is_some());
    assert_witnesses_valid(&d1, &ws);
}

#[test]
fn contact_projectivity_depends_on_the_structure_constant() {
    let f = r3();
    let one = vec![FieldElement::int(1), -f.coord(2), FieldElement::int(0)];
    let s = contact_form_system(&f, &one).unwrap();
    assert!(projectivity_check(&s.equations).unwrap().is_projective());

    let zero = vec![FieldElement::int(1), FieldElement::int(0), FieldElement::int(0)];
    let s = contact_form_system(&f, &zero).unwrap();
    match projectivity_check(&s.equations).unwrap() {
        Projectivity::NotProjective { torsion, .. } => {
            assert_eq!(torsion[0].render(&f, &s.unknowns), "xi1");
            assert_eq!(torsion[0].annihilators, vec![DiffOperator::d(1), DiffOperator::d(2)]);
            assert_witnesses_valid(&s.equations, &torsion);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn identity_is_projective() {
    assert!(projectivity_check(&OperatorMatrix::identity(r3(), 2)).unwrap().is_projective());
}

#[test]
fn non_surjective_torsion_free_is_rejected() {
    // curl has div as compatibility condition and no torsion.
    assert!(matches!(projectivity_check(&curl()), Err(Error::NotSurjective(_))));
    // grad presents the trivial module, which is all torsion.
    let grad = ops(&r3(), &["phi"], &["phi[1]", "phi[2]", "phi[3]"]);
    match projectivity_check(&grad).unwrap() {
        Projectivity::NotProjective { torsion, .. } => assert_eq!(torsion[0].render(&r3(), &grad.col_labels), "phi"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn einstein_cannot_be_parametrized() {
    let g = Metric::minkowski(4);
    let o = riemann_einstein_ops(&g).unwrap();
    let r = five_step_test(&o.einstein, Stages::Ext1).unwrap();
    assert_eq!(r.verdict_ext1, Verdict::Nonzero);
    assert!(r.parametrization.is_none());
    assert_eq!(r.d1_prime.rows(), 20);
    assert_eq!(module_compare(&r.d1_prime, &o.riemann).unwrap(), ModuleComparison::Equal);
    assert!(matches!(module_compare(&o.einstein, &r.d1_prime).unwrap(), ModuleComparison::ASubsetB { .. }));
    assert!(!r.witnesses.is_empty());
    assert_witnesses_valid(&o.einstein, &r.witnesses[..2]);
}

#[test]
fn verdict_does_not_depend_on_the_presentation() {
    let twice = ops(&r3(), &["eta1", "eta2", "eta3"], &["eta1[1] + eta2[2] + eta3[3]", "2*eta1[1,2] + 2*eta2[2,2] + 2*eta3[2,3]"]);
    let a = five_step_test(&div(), Stages::Ext1).unwrap();
    let b = five_step_test(&twice, Stages::Ext1).unwrap();
    assert_eq!(a.verdict_ext1, b.verdict_ext1);
    let pend = constants(&["t"], &["l", "g"]);
    let p1 = ops(&pend, &["x", "theta1", "theta2"], &["x[1,1] + l*theta1[1,1] + g*theta1", "x[1,1] + l*theta2[1,1] + g*theta2"]);
    let p2 = ops(&pend, &["x", "theta1", "theta2"], &["x[1,1] + l*theta1[1,1] + g*theta1", "l*theta1[1,1] + g*theta1 - l*theta2[1,1] - g*theta2"]);
    let (a, b) = (five_step_test(&p1, Stages::Ext1).unwrap(), five_step_test(&p2, Stages::Ext1).unwrap());
    assert_eq!(a.verdict_ext1, Verdict::Nonzero);
    assert_eq!(b.verdict_ext1, Verdict::Nonzero);
    assert_eq!(module_compare(&a.d1_prime, &b.d1_prime).unwrap(), ModuleComparison::Equal);
}

#[test]
fn zero_operator_is_rejected() {
    let z = OperatorMatrix::zero(r3(), 1, 2);
    assert!(five_step_test(&z, Stages::Ext1).is_err());
}
