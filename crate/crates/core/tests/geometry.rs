use std::sync::Arc;

use delos_core::basis::{diff_rank, module_compare, normal_form, syzygies, Budget, ModuleComparison};
use delos_core::field::{DiffField, FieldElement};
use delos_core::geometry::*;
use delos_core::involution::cc_chain;
use delos_core::ore::{constant_equivalence, proportional, DiffOperator, OperatorMatrix};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn q(n: i64) -> FieldElement {
    FieldElement::int(n)
}

#[test]
fn riemann_three_is_the_displayed_matrix() {
    let g = Metric::euclidean(3);
    let r = riemann_operator(&g).unwrap();
    let expected = OperatorMatrix::parse_rows(
        g.field.clone(),
        &r.col_labels,
        &[
            "Omega22[3,3] - 2*Omega23[2,3] + Omega33[2,2]",
            "-2*Omega12[3,3] + 2*Omega13[2,3] + 2*Omega23[1,3] - 2*Omega33[1,2]",
            "2*Omega12[2,3] - 2*Omega13[2,2] - 2*Omega22[1,3] + 2*Omega23[1,2]",
            "Omega11[3,3] - 2*Omega13[1,3] + Omega33[1,1]",
            "-2*Omega11[2,3] + 2*Omega12[1,3] + 2*Omega13[1,2] - 2*Omega23[1,1]",
            "Omega11[2,2] - 2*Omega12[1,2] + Omega22[1,1]",
        ],
    )
    .unwrap();
    assert!(r == expected);
    assert!(adjoint_mismatch(&r).unwrap().is_none());
}

#[test]
fn riemann_generates_killing_compatibility() {
    for g in [Metric::euclidean(3), Metric::minkowski(4)] {
        let k = killing_system(&g).unwrap();
        let cc = syzygies(&k.equations).unwrap().cc_matrix;
        let r = riemann_operator(&g).unwrap();
        assert_eq!(module_compare(&cc, &r).unwrap(), ModuleComparison::Equal);
    }
}

#[test]
fn killing_three_chain() {
    let k = killing_system(&Metric::euclidean(3)).unwrap();
    let (dims, orders) = cc_chain(&k.equations, Budget::default()).unwrap();
    assert_eq!(dims, vec![3, 6, 6, 3]);
    assert_eq!(orders, vec![1, 2, 1]);
    let bianchi = syzygies(&riemann_operator(&Metric::euclidean(3)).unwrap()).unwrap().cc_matrix;
    assert_eq!(bianchi.rows(), 3);
}

#[test]
fn two_dimensional_curvature_and_airy() {
    let g = Metric::euclidean(2);
    let r = riemann_operator(&g).unwrap();
    assert_eq!(r.rows(), 1);
    let k = killing_system(&g).unwrap();
    let cc = syzygies(&k.equations).unwrap().cc_matrix;
    assert_eq!(module_compare(&cc, &r).unwrap(), ModuleComparison::Equal);
    // ad(Riemann) is the Airy parametrization of the stress equations. The
    // off-diagonal output pairs with the doubled Ω12, hence the 1/2.
    let mut airy = r.adjoint().unwrap();
    airy.convention = airy.convention.flip();
    let stress = OperatorMatrix::parse_rows(
        g.field.clone(),
        &names(&["s11", "s12", "s22"]),
        &["s11[1] + 1/2*s12[2]", "1/2*s12[1] + s22[2]"],
    )
    .unwrap();
    assert!(stress.mul(&airy).unwrap().is_zero());
}

#[test]
fn einstein_four() {
    let g = Metric::minkowski(4);
    let ops = riemann_einstein_ops(&g).unwrap();
    assert_eq!((ops.einstein.rows(), ops.riemann.rows()), (10, 20));
    assert!(adjoint_mismatch(&raise_pairs(&g, &ops.einstein).unwrap()).unwrap().is_none());
    let (i, j, a, b) = adjoint_mismatch(&raise_pairs(&g, &ops.ricci).unwrap()).unwrap().expect("ricci witness");
    assert_ne!(a, b);
    assert!(i < 10 && j < 10);

    let div = syzygies(&ops.einstein).unwrap().cc_matrix;
    assert_eq!((div.rows(), div.order()), (4, 1));
    assert_eq!(diff_rank(&ops.einstein).unwrap(), 6);
    assert_eq!(diff_rank(&ops.riemann).unwrap(), 6);
}

#[test]
fn einstein_rows_reduce_to_zero_modulo_riemann() {
    let g = Metric::minkowski(4);
    let ops = riemann_einstein_ops(&g).unwrap();
    let b = delos_core::basis::groebner(&ops.riemann).unwrap();
    for i in 0..ops.einstein.rows() {
        assert!(normal_form(&ops.einstein.row_matrix(i), &b).unwrap().is_zero());
    }
    match module_compare(&ops.einstein, &ops.riemann).unwrap() {
        ModuleComparison::ASubsetB { witnesses } => assert!(!witnesses.is_empty()),
        other => panic!("{other:?}"),
    }
}

#[test]
fn conformal_three_chain_closes_with_its_adjoint() {
    let g = Metric::euclidean(3);
    let s = conformal_killing_system(&g).unwrap();
    let (dims, orders) = cc_chain(&s.equations, Budget::default()).unwrap();
    assert_eq!(dims, vec![3, 5, 5, 3]);
    assert_eq!(orders, vec![1, 3, 1]);
    // The last map is the adjoint of the first after constant changes of basis.
    let c1 = syzygies(&s.equations).unwrap().cc_matrix;
    let c2 = syzygies(&c1).unwrap().cc_matrix;
    let adj = s.equations.adjoint().unwrap();
    let (u, p) = constant_equivalence(&c2, &adj).unwrap().expect("equivalence");
    assert_eq!((u.len(), p.len()), (3, 5));
}

#[test]
fn conformal_rows_are_trace_free() {
    for g in [Metric::euclidean(3), Metric::minkowski(4)] {
        let inv = g.inverse().unwrap();
        let rows = conformal_rows(&g).unwrap();
        let mut acc = vec![DiffOperator::zero(); g.n()];
        for ((i, j), row) in &rows {
            let w = if i == j { inv[*i][*j].clone() } else { &inv[*i][*j] * &q(2) };
            acc = acc.iter().zip(row).map(|(a, r)| a.add(&r.scale(&w))).collect();
        }
        assert!(acc.iter().all(|a| a.is_zero()), "n = {}", g.n());
    }
}

#[test]
fn conformal_system_ignores_constant_rescaling() {
    let g = Metric::minkowski(4);
    let a = conformal_killing_system(&g).unwrap();
    for c in [q(3), FieldElement::ratio(1, 5), q(-2)] {
        let b = conformal_killing_system(&g.scaled(&c).unwrap()).unwrap();
        assert!(a.equations == b.equations);
    }
}

#[test]
fn contact_first_order_compatibility() {
    let f = Arc::new(DiffField::standard(3));
    let m = OperatorMatrix::parse_rows(
        f.clone(),
        &names(&["xi1", "xi2", "xi3"]),
        &[
            "xi1[2] - x3*xi2[2] + x3*xi1[1] - x3^2*xi2[1] - xi3",
            "xi1[3] - x3*xi2[3]",
            "xi3[3] + xi2[2] + 2*x3*xi2[1] - xi1[1]",
        ],
    )
    .unwrap();
    let cc = syzygies(&m).unwrap().cc_matrix;
    assert_eq!(cc.rows(), 1);
    let want = OperatorMatrix::parse_rows(f, &names(&["Phi1", "Phi2", "Phi3"]), &["Phi1[3] - Phi2[2] - x3*Phi2[1] + Phi3"])
        .unwrap();
    assert!(proportional(cc.row(0), want.row(0)).is_some());
}

#[test]
fn contact_three_parametrization() {
    let c = contact_parametrization(3, ContactLayout::Leading).unwrap();
    let f = c.op.field().clone();
    let x3 = f.coord(2);
    assert_eq!(c.form, vec![q(1), -x3.clone(), q(0)]);
    let expected = OperatorMatrix::parse_rows(f.clone(), &names(&["phi"]), &["phi - x3*phi[3]", "-phi[3]", "phi[2] + x3*phi[1]"])
        .unwrap();
    assert!(c.op == expected);
    let id = c.left_inverse.mul(&c.op).unwrap();
    assert!(id == OperatorMatrix::identity(f.clone(), 1));
    let d = contact_system(&f, &c.form).unwrap();
    assert!(d.equations.mul(&c.op).unwrap().is_zero());
}

#[test]
fn contact_five_parametrization() {
    for layout in [ContactLayout::Trailing, ContactLayout::Leading] {
        let c = contact_parametrization(5, layout).unwrap();
        let f = c.op.field().clone();
        let d = contact_system(&f, &c.form).unwrap();
        assert!(d.equations.mul(&c.op).unwrap().is_zero());
        assert!(c.left_inverse.mul(&c.op).unwrap() == OperatorMatrix::identity(f.clone(), 1));
        // ℒ(ξ)χ = (∂φ/∂x^special) χ for ξ = 𝒞φ.
        let lie = OperatorMatrix::from_rows(f.clone(), 5, lie_form_rows(&f, &c.form).unwrap());
        let image = lie.mul(&c.op).unwrap();
        let special = if layout == ContactLayout::Trailing { 4 } else { 0 };
        for (i, w) in c.form.iter().enumerate() {
            let want = DiffOperator::dirs(&[special]).scale(w);
            assert_eq!(image.get(i, 0), &want, "component {i}");
        }
    }
}

fn assert_split(g: &Metric, rho: &CurvatureTensor) {
    let n = g.n();
    let s = weyl_split(rho, g).unwrap();
    assert!(rho == &s.ricci_part.add(&s.sigma));
    // σ is trace-free and a fixed point of the splitting.
    let sr = s.sigma.ricci();
    assert!(sr.iter().flatten().all(|x| x.is_zero()));
    let again = weyl_split(&s.sigma, g).unwrap();
    assert!(again.sigma == s.sigma);
    assert!(again.ricci_part.is_zero());
    // ρ_ij is recovered from τ through the trace identities.
    let tr_tau = contract(&g.inverse().unwrap(), &s.tau);
    let nn = n as i64;
    assert_eq!(tr_tau, &s.trace * &FieldElement::ratio(nn, 2 * (nn - 1)));
    let back = curvature_from_trace(g, &s.tau).unwrap();
    assert!(back == s.ricci_part);
    if n == 3 {
        assert!(s.sigma.is_zero());
    }
}

#[test]
fn weyl_split_on_random_tensors() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in 3..=6 {
        let metrics = [Metric::euclidean(n), Metric::minkowski(n)];
        for k in 0..100 {
            let g = &metrics[k % 2];
            let rho = random_curvature(g, &mut rng, 2, 3).unwrap();
            assert_split(g, &rho);
        }
    }
}

#[test]
fn pure_trace_has_no_weyl_part() {
    let g = Metric::minkowski(4);
    let tau: Vec<Vec<FieldElement>> =
        (0..4).map(|i| (0..4).map(|j| q(1 + (i * j) as i64 + (i + j) as i64)).collect()).collect();
    let rho = curvature_from_trace(&g, &tau).unwrap();
    let s = weyl_split(&rho, &g).unwrap();
    assert!(s.sigma.is_zero());
    assert_eq!(s.tau, tau);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn weyl_split_properties(seed in any::<u64>(), n in 3usize..=5, lorentz in any::<bool>()) {
        let g = if lorentz { Metric::minkowski(n) } else { Metric::euclidean(n) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_curvature(&g, &mut rng, 2, 4).unwrap();
        assert_split(&g, &rho);
    }
}
