//! Built-in checks run by `delos selftest` and the acceptance target: the
//! worked examples, the algebraic identities, and the example corpus.

use std::sync::Arc;
use std::time::{Duration, Instant};

use delos_core::basis::{diff_rank, module_compare, syzygies, Budget, ModuleComparison};
use delos_core::diffpoly::{linearize, DiffPolynomial, GenericPoint};
use delos_core::duality::*;
use delos_core::field::{DiffField, FieldElement};
use delos_core::geometry::*;
use delos_core::involution::*;
use delos_core::ore::{constant_equivalence, polynomial_multiple, proportional, render_row, DiffOperator, OperatorMatrix};
use delos_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::report::Report;
use crate::system::{from_system, parse_system, print_system, SystemFile};
use crate::workflows::{self, Options};

/// The shipped example systems.
pub const CORPUS: &[(&str, &str)] = &[
    ("killing-n2.sys", include_str!("../examples/killing-n2.sys")),
    ("airy.sys", include_str!("../examples/airy.sys")),
    ("stress-n2.sys", include_str!("../examples/stress-n2.sys")),
    ("grad.sys", include_str!("../examples/grad.sys")),
    ("curl.sys", include_str!("../examples/curl.sys")),
    ("div.sys", include_str!("../examples/div.sys")),
    ("div-minimal-image.sys", include_str!("../examples/div-minimal-image.sys")),
    ("pendulum.sys", include_str!("../examples/pendulum.sys")),
    ("pendulum-equal.sys", include_str!("../examples/pendulum-equal.sys")),
    ("contact-n3.sys", include_str!("../examples/contact-n3.sys")),
    ("contact-c0.sys", include_str!("../examples/contact-c0.sys")),
    ("contact-n5.sys", include_str!("../examples/contact-n5.sys")),
    ("hamilton-jacobi.sys", include_str!("../examples/hamilton-jacobi.sys")),
    ("killing-n3.sys", include_str!("../examples/killing-n3.sys")),
    ("conformal-n3.sys", include_str!("../examples/conformal-n3.sys")),
    ("conformal-n4.sys", include_str!("../examples/conformal-n4.sys")),
    ("einstein-n4.sys", include_str!("../examples/einstein-n4.sys")),
    ("linearized-quadratic.sys", include_str!("../examples/linearized-quadratic.sys")),
    ("linearized-cubic.sys", include_str!("../examples/linearized-cubic.sys")),
];

pub fn corpus(name: &str) -> SystemFile {
    let (_, text) = CORPUS.iter().find(|(n, _)| *n == name).unwrap_or_else(|| panic!("no corpus entry {name}"));
    parse_system(text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub id: String,
    pub title: String,
    /// Required checks must pass; the others are exploratory.
    pub required: bool,
    pub result: Result<String, String>,
    pub elapsed: Duration,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.result.is_ok()
    }

    pub fn line(&self) -> String {
        let (tag, msg) = match &self.result {
            Ok(m) => ("PASS", m.as_str()),
            Err(m) => ("FAIL", m.as_str()),
        };
        let ms = self.elapsed.as_secs_f64() * 1000.0;
        format!("{tag} {:>2} {:<26} {ms:>9.1} ms  {msg}", self.id, self.title)
    }
}

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: Error) -> String {
    e.to_string()
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn ops(field: &Arc<DiffField>, unknowns: &[&str], rows: &[&str]) -> Result<OperatorMatrix, String> {
    OperatorMatrix::parse_rows(field.clone(), &names(unknowns), rows).map_err(err)
}

fn column(m: &OperatorMatrix, j: usize) -> Vec<DiffOperator> {
    (0..m.rows()).map(|i| m.get(i, j).clone()).collect()
}

fn equal_modules(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<bool, String> {
    Ok(module_compare(a, b).map_err(err)? == ModuleComparison::Equal)
}

// ------------------------------------------------------------------ criteria

fn airy() -> Check {
    let k = corpus("killing-n2.sys").system.equations;
    ensure(k == killing_system(&Metric::euclidean(2)).map_err(err)?.equations, || "killing-n2.sys differs".into())?;
    let f = k.field().clone();
    let cc = syzygies(&k).map_err(err)?.cc_matrix;
    ensure(cc.rows() == 1 && cc.order() == 2, || format!("{} CC rows of order {}", cc.rows(), cc.order()))?;
    let want = ops(&f, &["Omega11", "Omega12", "Omega22"], &["Omega22[1,1] + Omega11[2,2] - 2*Omega12[1,2]"])?;
    ensure(proportional(cc.row(0), want.row(0)).is_some(), || format!("CC is {}", cc.render_row(0)))?;
    // Omega12 is paired with 2*sigma12, so the middle entry of ad(CC) is
    // twice the Airy one.
    let ad = cc.adjoint().map_err(err)?;
    let paired = ops(&f, &["phi"], &["phi[2,2]", "-2*phi[1,2]", "phi[1,1]"])?;
    ensure(proportional(&column(&ad, 0), &column(&paired, 0)).is_some(), || format!("ad(CC) = {}", ad.render()))?;
    let stress = corpus("stress-n2.sys").system.equations;
    let potential = corpus("airy.sys").system.equations;
    ensure(stress.mul(&potential).map_err(err)?.is_zero(), || "the Airy potential does not solve the stress equations".into())?;
    Ok(format!("CC {}; ad(CC) is Airy with sigma12 paired to Omega12/2", cc.render_row(0)))
}

fn poincare() -> Check {
    let grad = corpus("grad.sys").system.equations;
    let curl = corpus("curl.sys").system.equations;
    let div = corpus("div.sys").system.equations;
    ensure(equal_modules(&syzygies(&grad).map_err(err)?.cc_matrix, &curl)?, || "CC(grad) is not curl".into())?;
    ensure(equal_modules(&syzygies(&curl).map_err(err)?.cc_matrix, &div)?, || "CC(curl) is not div".into())?;
    let r = five_step_test(&div, Stages::Ext2).map_err(err)?;
    let ext2 = r.ext2.as_ref().map(|s| s.verdict);
    ensure(r.verdict_ext1 == Verdict::Zero && ext2 == Some(Verdict::Zero), || format!("div: ext1 {:?}, ext2 {ext2:?}", r.verdict_ext1))?;
    let m = minimal_parametrization(&curl, &[2]).map_err(err)?;
    ensure(m.op.cols() == 2 && m.rank == 2 && equal_modules(&m.cc, &div)?, || "minimal parametrization is wrong".into())?;
    let d1 = corpus("div-minimal-image.sys").system.equations;
    let ws = torsion_witnesses(&d1).map_err(err)?;
    let shown: Vec<String> = ws.iter().map(|w| w.render(d1.field(), &d1.col_labels)).collect();
    ensure(shown == ["xi1", "xi2"], || format!("witnesses {shown:?}"))?;
    Ok(format!("grad -> curl -> div; ext1 = ext2 = 0; curl without xi3 validates; witnesses {}", shown.join(", ")))
}

fn pendulum() -> Check {
    let d1 = corpus("pendulum.sys").system.equations;
    let f = d1.field().clone();
    let r = five_step_test(&d1, Stages::Ext1).map_err(err)?;
    ensure(r.verdict_ext1 == Verdict::Zero, || "l1 != l2 should be parametrizable".into())?;
    let d = r.parametrization.clone().unwrap();
    ensure(equal_modules(&syzygies(&d).map_err(err)?.cc_matrix, &d1)?, || "CC of the parametrization differ from the input".into())?;
    let want = ops(
        &f,
        &["phi"],
        &["-l1*l2*phi[1,1,1,1] - g*(l1 + l2)*phi[1,1] - g^2*phi", "l2*phi[1,1,1,1] + g*phi[1,1]", "l1*phi[1,1,1,1] + g*phi[1,1]"],
    )?;
    ensure(proportional(&column(&d, 0), &column(&want, 0)).is_some(), || format!("parametrization {}", d.render()))?;

    let d1 = corpus("pendulum-equal.sys").system.equations;
    let f = d1.field().clone();
    let ws = torsion_witnesses(&d1).map_err(err)?;
    ensure(ws.len() == 1, || format!("{} witnesses", ws.len()))?;
    let theta = ops(&f, &["x", "theta1", "theta2"], &["theta1 - theta2"])?;
    ensure(proportional(&ws[0].row, theta.row(0)).is_some(), || format!("witness {}", ws[0].render(&f, &d1.col_labels)))?;
    let ann = ops(&f, &["u"], &["l*u[1,1] + g*u"])?;
    ensure(!ws[0].annihilators.is_empty() && proportional(&ws[0].annihilators[..1], ann.row(0)).is_some(), || {
        format!("annihilators {:?}", ws[0].annihilators.iter().map(|p| p.render(&f)).collect::<Vec<_>>())
    })?;
    let killer = polynomial_multiple(&ws[0].annihilators[..1]);
    Ok(format!("4th-order parametrization; l1 = l2: torsion {} killed by {}", ws[0].render(&f, &d1.col_labels), killer[0].render(&f)))
}

fn contact_three() -> Check {
    let f = Arc::new(DiffField::standard(3));
    let one = vec![FieldElement::int(1), -f.coord(2), FieldElement::int(0)];
    let zero = vec![FieldElement::int(1), FieldElement::int(0), FieldElement::int(0)];
    let (c1, c0) = (vessiot_scalar(&f, &one).map_err(err)?, vessiot_scalar(&f, &zero).map_err(err)?);
    ensure(c1 == FieldElement::int(1) && c0.is_zero(), || format!("structure constants {}, {}", f.render(&c1), f.render(&c0)))?;
    let s = contact_form_system(&f, &one).map_err(err)?;
    ensure(s.equations == corpus("contact-n3.sys").system.equations, || "contact-n3.sys differs".into())?;
    let c = formal_integrability_complete(&s, CompletionBudget::default()).map_err(err)?;
    ensure(c.added.len() == 1, || format!("{} added equations", c.added.len()))?;
    let classes = match &c.certificate {
        Certificate::Involutive(t) => t.describe(),
        other => return Err(format!("certificate {other:?}")),
    };
    ensure(classes == "2 of class 3, 1 of class 2", || classes.clone())?;
    let cc = syzygies(&c.system.equations).map_err(err)?.cc_matrix;
    let want = ops(&f, &["Phi1", "Phi2", "Phi3"], &["Phi1[3] - Phi2[2] - x3*Phi2[1] + Phi3"])?;
    ensure(cc.rows() == 1 && cc.order() == 1, || format!("{} CC", cc.rows()))?;
    let same = proportional(cc.row(0), want.row(0)).is_some() || constant_equivalence(&cc, &want).map_err(err)?.is_some();
    ensure(same, || format!("CC {}", cc.render_row(0)))?;
    ensure(projectivity_check(&s.equations).map_err(err)?.is_projective(), || "c = 1 should be projective".into())?;
    let s0 = contact_form_system(&f, &zero).map_err(err)?;
    let w = match projectivity_check(&s0.equations).map_err(err)? {
        Projectivity::NotProjective { torsion, .. } => torsion.first().map(|t| t.render(&f, &s0.unknowns)).unwrap_or_default(),
        Projectivity::Projective => return Err("c = 0 should not be projective".into()),
    };
    ensure(w == "xi1", || format!("witness {w}"))?;
    let shown = render_row(&f, &polynomial_multiple(cc.row(0)), &names(&["Phi1", "Phi2", "Phi3"]));
    Ok(format!("c = 1 and 0; one added equation; {classes}; CC {shown}; c = 1 projective, c = 0 torsion {w}"))
}

fn killing_three() -> Check {
    let g = Metric::euclidean(3);
    let k = corpus("killing-n3.sys").system.equations;
    ensure(k == killing_system(&g).map_err(err)?.equations, || "killing-n3.sys differs".into())?;
    let (dims, _) = cc_chain(&k, Budget::default()).map_err(err)?;
    ensure(dims == [3, 6, 6, 3], || format!("dims {dims:?}"))?;
    let r = riemann_operator(&g).map_err(err)?;
    ensure(equal_modules(&syzygies(&k).map_err(err)?.cc_matrix, &r)?, || "CC(Killing) is not the Riemann operator".into())?;
    let shown = OperatorMatrix::parse_rows(
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
    .map_err(err)?;
    ensure(r == shown, || "central operator differs from the displayed matrix".into())?;
    ensure(adjoint_mismatch(&r).map_err(err)?.is_none(), || "central operator is not self-adjoint".into())?;
    Ok("dims 3 -> 6 -> 6 -> 3; 6x6 central operator matches and equals its adjoint".into())
}

fn conformal_three() -> Check {
    let s = conformal_killing_system(&Metric::euclidean(3)).map_err(err)?;
    ensure(s.equations == corpus("conformal-n3.sys").system.equations, || "conformal-n3.sys differs".into())?;
    let probe = cc_count_probe(&s, 3).map_err(err)?;
    let got: Vec<(i64, usize, usize, usize)> = probe.iter().map(|p| (p.count, p.g, p.s, p.f)).collect();
    ensure(got == [(0, 3, 18, 15), (0, 0, 30, 30), (5, 0, 45, 50)], || format!("probe (count, g, s, f) {got:?}"))?;
    let k = cc_order_estimate(&s, CompletionBudget::default()).map_err(err)?;
    ensure(k == 3, || format!("cc order {k}"))?;
    let (dims, orders) = cc_chain(&s.equations, Budget::default()).map_err(err)?;
    ensure(dims == [3, 5, 5, 3], || format!("dims {dims:?}"))?;
    let c1 = syzygies(&s.equations).map_err(err)?.cc_matrix;
    let c2 = syzygies(&c1).map_err(err)?.cc_matrix;
    let adj = s.equations.adjoint().map_err(err)?;
    ensure(constant_equivalence(&c2, &adj).map_err(err)?.is_some(), || "5 -> 3 operator is not equivalent to the adjoint".into())?;
    Ok(format!("0 = 3-18+15, 0 = 0-30+30, 5 = 0-45+50; order 3; dims {dims:?}, orders {orders:?}; 5 -> 3 ~ ad"))
}

fn einstein() -> Check {
    let g = Metric::minkowski(4);
    let o = riemann_einstein_ops(&g).map_err(err)?;
    ensure(corpus("einstein-n4.sys").system.equations == o.einstein, || "einstein-n4.sys differs".into())?;
    ensure(adjoint_mismatch(&raise_pairs(&g, &o.einstein).map_err(err)?).map_err(err)?.is_none(), || "Einstein is not self-adjoint".into())?;
    let (ri, rj) = match adjoint_mismatch(&raise_pairs(&g, &o.ricci).map_err(err)?).map_err(err)? {
        Some((i, j, _, _)) => (i + 1, j + 1),
        None => return Err("Ricci should not be self-adjoint".into()),
    };
    let div = syzygies(&o.einstein).map_err(err)?.cc_matrix;
    ensure(div.rows() == 4 && div.order() == 1, || format!("CC(Einstein) has {} rows", div.rows()))?;
    let r = five_step_test(&o.einstein, Stages::Ext1).map_err(err)?;
    ensure(r.verdict_ext1 == Verdict::Nonzero, || "Einstein should not be parametrizable".into())?;
    ensure(r.d1_prime.rows() == 20 && equal_modules(&r.d1_prime, &o.riemann)?, || "D1' is not the Riemann operator".into())?;
    ensure(matches!(module_compare(&o.einstein, &r.d1_prime).map_err(err)?, ModuleComparison::ASubsetB { .. }), || {
        "Einstein is not strictly inside Riemann".into()
    })?;
    ensure(!r.witnesses.is_empty(), || "no witnesses".into())?;
    let (re, rr) = (diff_rank(&o.einstein).map_err(err)?, diff_rank(&o.riemann).map_err(err)?);
    ensure(re == 6 && rr == 6, || format!("ranks {re}, {rr}"))?;
    Ok(format!(
        "self-adjoint; Ricci mismatch at entry ({ri}, {rj}); 4-row div; D1' = Riemann (20) > Einstein (10); {} witnesses; ranks 6, 6",
        r.witnesses.len()
    ))
}

fn check_split(g: &Metric, rho: &CurvatureTensor) -> Result<(), String> {
    let n = g.n() as i64;
    let s = weyl_split(rho, g).map_err(err)?;
    let zero = |m: &Vec<Vec<FieldElement>>| m.iter().flatten().all(|x| x.is_zero());
    ensure(zero(&s.sigma.first_trace()) && zero(&s.sigma.ricci()), || "sigma is not trace-free".into())?;
    let tr_tau = contract(&g.inverse().map_err(err)?, &s.tau);
    ensure(&FieldElement::int(n) * &s.trace == &FieldElement::int(2 * (n - 1)) * &tr_tau, || "trace identity fails".into())?;
    ensure(&s.ricci_part.add(&s.sigma) == rho, || "reconstruction fails".into())?;
    ensure(n != 3 || s.sigma.is_zero(), || "sigma is nonzero at n = 3".into())
}

fn weyl() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in 3..=6 {
        let metrics = [Metric::euclidean(n), Metric::minkowski(n)];
        for k in 0..100 {
            let g = &metrics[k % 2];
            let rho = random_curvature(g, &mut rng, 2, 3).map_err(err)?;
            check_split(g, &rho).map_err(|e| format!("n = {n}, sample {k}: {e}"))?;
        }
    }
    Ok("100 random tensors for each n = 3..6".into())
}

fn factorial(k: usize) -> usize {
    (1..=k).product()
}

fn contact_general() -> Check {
    let c = contact_parametrization(5, ContactLayout::Trailing).map_err(err)?;
    let f = c.op.field().clone();
    let lie = OperatorMatrix::from_rows(f.clone(), 5, lie_form_rows(&f, &c.form).map_err(err)?);
    let image = lie.mul(&c.op).map_err(err)?;
    for (i, w) in c.form.iter().enumerate() {
        let want = DiffOperator::dirs(&[4]).scale(w);
        ensure(image.get(i, 0) == &want, || format!("component {} of L(xi)chi is {}", i + 1, image.get(i, 0).render(&f)))?;
    }
    let raw = corpus("contact-n5.sys").system;
    ensure(raw.equations == contact_system(&f, &c.form).map_err(err)?.equations, || "contact-n5.sys differs".into())?;
    ensure(raw.equations.mul(&c.op).map_err(err)?.is_zero(), || "the parametrization does not solve the system".into())?;
    let comp = formal_integrability_complete(&raw, CompletionBudget::default()).map_err(err)?;
    ensure(!comp.added.is_empty(), || "raw system reported formally integrable".into())?;
    let dims = bundle_dims(BundleKind::Janet, &comp.system).map_err(err)?;
    let n = 5;
    let formula: Vec<usize> = (0..4).map(|r| factorial(n) / (factorial(r + 2) * factorial(n - r - 2))).collect();
    ensure(dims.len() >= 4 && dims[..4] == formula[..], || format!("Janet dims {dims:?}, expected {formula:?}"))?;
    Ok(format!("L(xi)chi = (d5 phi) chi; raw system gains {} equations; F_r = {:?}", comp.added.len(), formula))
}

fn hamilton_jacobi() -> Check {
    let s = corpus("hamilton-jacobi.sys").system;
    ensure(s.equations == hj_contact_system().map_err(err)?.equations, || "hamilton-jacobi.sys differs".into())?;
    let c = formal_integrability_complete(&s, CompletionBudget::default()).map_err(err)?;
    ensure(c.added.len() == 1, || format!("{} added", c.added.len()))?;
    let row = render_row(&s.field, &c.added[0].row, &s.unknowns);
    let want = OperatorMatrix::parse_rows(s.field.clone(), &s.unknowns, &["eta[1] - xi[2] + zeta[3] + 2*p*eta[2]"]).map_err(err)?;
    ensure(proportional(&c.added[0].row, want.row(0)).is_some(), || row.clone())?;
    ensure(matches!(c.certificate, Certificate::Involutive(_)), || "not certified involutive".into())?;
    let dim = jet_dim(s.n(), s.m(), 1) - equation_rank(&c.system).map_err(err)?;
    ensure(dim == 9, || format!("dimension {dim}"))?;
    Ok(format!("added {row}; involutive; dimension 9"))
}

fn example_field(gens: &[&str], table: &[(&str, usize, &str)]) -> Result<Arc<DiffField>, String> {
    let coords = names(&["x1", "x2"]);
    let gens = names(gens);
    let bare = DiffField::new_unchecked(coords.clone(), gens.clone(), Vec::new()).map_err(err)?;
    let mut entries = Vec::new();
    for (g, i, v) in table {
        entries.push((g.to_string(), *i, bare.parse(v).map_err(err)?));
    }
    DiffField::new(coords, gens, entries).map(Arc::new).map_err(err)
}

/// A nonlinear system, its generic point and the expected linearization.
struct Example {
    field: Arc<DiffField>,
    point: Vec<(&'static str, &'static str)>,
    equations: [&'static str; 2],
    linear: [&'static str; 2],
}

fn linearized(e: &Example) -> Result<LinearSystem, String> {
    let at = GenericPoint::from_names(e.field.clone(), &["y"], &e.point).map_err(err)?;
    let u = names(&["y"]);
    let mut sys = Vec::new();
    for t in e.equations {
        sys.push(DiffPolynomial::parse(e.field.clone(), &u, t).map_err(err)?);
    }
    let lin = linearize(&sys, &at).map_err(err)?;
    let want = OperatorMatrix::parse_rows(e.field.clone(), &lin.unknowns, &e.linear).map_err(err)?;
    ensure(lin.equations == want, || format!("linearization {}", lin.equations.render()))?;
    Ok(lin)
}

/// `y22 = y11²/2, y12 = y11` over `k(y, y1, y2, y11)` with `y111 = 0`.
pub fn quadratic_example() -> Result<LinearSystem, String> {
    let field = example_field(
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
    )?;
    linearized(&Example {
        field,
        point: vec![("y[1,2]", "y11"), ("y[2,2]", "1/2*y11^2")],
        equations: ["y[2,2] - 1/2*y[1,1]^2", "y[1,2] - y[1,1]"],
        linear: ["Y[2,2] - y11*Y[1,1]", "Y[1,2] - Y[1,1]"],
    })
}

/// `y22 = y11³/3, y12 = y11²/2` over `k(y, y1, y2, y11, y111)`.
pub fn cubic_example() -> Result<LinearSystem, String> {
    let field = example_field(
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
    )?;
    linearized(&Example {
        field,
        point: vec![("y[1,2]", "1/2*y11^2"), ("y[2,2]", "1/3*y11^3")],
        equations: ["y[2,2] - 1/3*y[1,1]^3", "y[1,2] - 1/2*y[1,1]^2"],
        linear: ["Y[2,2] - y11^2*Y[1,1]", "Y[1,2] - y11*Y[1,1]"],
    })
}

fn linearization() -> Check {
    let quad = quadratic_example()?;
    let file = corpus("linearized-quadratic.sys").system;
    ensure(file.equations == quad.equations && file.jet_generators == quad.jet_generators, || "linearized-quadratic.sys differs".into())?;
    let pivots = match is_involutive(&quad).map_err(err)? {
        Involutivity::No(NotInvolutiveReason::GenericRank { pivots }) => pivots,
        other => return Err(format!("expected a generic-rank failure, got {other:?}")),
    };
    ensure(pivots == ["y11 - 1"], || format!("pivots {pivots:?}"))?;
    let cubic = cubic_example()?;
    let file = corpus("linearized-cubic.sys").system;
    ensure(file.equations == cubic.equations && file.jet_generators == cubic.jet_generators, || "linearized-cubic.sys differs".into())?;
    ensure(is_involutive(&cubic).map_err(err)?.is_yes(), || "cubic example should be involutive".into())?;
    Ok("both linear systems reproduced; quadratic case fails generic rank at y11 - 1; cubic case involutive".into())
}

// ----------------------------------------------------------- property suites

const CASES: usize = 200;

fn random_row(rng: &mut ChaCha8Rng, unknowns: usize, variable: bool) -> String {
    const JETS: [&str; 6] = ["", "[1]", "[2]", "[1,1]", "[1,2]", "[2,2]"];
    const COEFFS: [&str; 5] = ["", "x1*", "x2*", "x1*x2*", "x2^2*"];
    let terms: Vec<String> = (0..rng.gen_range(1..4))
        .map(|_| {
            let c = rng.gen_range(-3..=3);
            let a = if variable { COEFFS[rng.gen_range(0..COEFFS.len())] } else { "" };
            format!("{c}*{a}u{}{}", rng.gen_range(1..=unknowns), JETS[rng.gen_range(0..JETS.len())])
        })
        .collect();
    terms.join(" + ")
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, variable: bool) -> Result<OperatorMatrix, String> {
    let text: Vec<String> = (0..rows).map(|_| random_row(rng, cols, variable)).collect();
    let text: Vec<&str> = text.iter().map(String::as_str).collect();
    let u: Vec<String> = (1..=cols).map(|k| format!("u{k}")).collect();
    OperatorMatrix::parse_rows(Arc::new(DiffField::standard(2)), &u, &text).map_err(err)
}

fn partest_json(a: &OperatorMatrix) -> String {
    let sf = from_system("random", LinearSystem::new(a.clone()));
    let text = print_system(&sf);
    match workflows::partest(&sf, &text, &Options::default()) {
        Ok(r) => serde_json::to_string(&r.to_json(false)).unwrap(),
        Err(e) => format!("error: {e}"),
    }
}

fn properties() -> Check {
    let f = DiffField::standard(2);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for k in 0..CASES {
        let rows = rng.gen_range(1..3);
        let a = random_matrix(&mut rng, rows, 2, true)?;
        let mut back = a.adjoint().map_err(err)?.adjoint().map_err(err)?;
        back.convention = a.convention;
        ensure(back == a, || format!("ad(ad(A)) != A for {}", a.render()))?;
        let cols = rng.gen_range(1..3);
        let b = random_matrix(&mut rng, 2, cols, true)?;
        let lhs = a.mul(&b).map_err(err)?.adjoint().map_err(err)?;
        let rhs = b.adjoint().map_err(err)?.mul(&a.adjoint().map_err(err)?).map_err(err)?;
        ensure(lhs == rhs, || format!("ad(AB) != ad(B)ad(A) at case {k}"))?;
        let (p, q) = (a.get(0, 0), a.get(0, 1));
        let lhs = p.mul(&f, q).map_err(err)?.adjoint(&f).map_err(err)?;
        let rhs = q.adjoint(&f).map_err(err)?.mul(&f, &p.adjoint(&f).map_err(err)?).map_err(err)?;
        ensure(lhs == rhs, || format!("ad(PQ) != ad(Q)ad(P) at case {k}"))?;
        if !a.is_zero() {
            let mut ad = a.adjoint().map_err(err)?;
            ad.convention = a.convention;
            ensure(diff_rank(&a).map_err(err)? == diff_rank(&ad).map_err(err)?, || format!("rank differs from adjoint rank at case {k}"))?;
        }
    }
    for k in 0..CASES {
        let rows = rng.gen_range(1..4);
        let a = random_matrix(&mut rng, rows, 2, false)?;
        if a.is_zero() {
            continue;
        }
        let cc = syzygies(&a).map_err(err)?.cc_matrix;
        ensure(cc.rows() == 0 || cc.mul(&a).map_err(err)?.is_zero(), || format!("CC do not compose to zero at case {k}"))?;
        let t = delta_cohomology(&LinearSystem::new(a.clone()), 1).map_err(err)?;
        ensure(t.delta_squared_zero, || format!("delta^2 != 0 at case {k}"))?;
        if a.rows() <= 2 {
            ensure(partest_json(&a) == partest_json(&a), || format!("reports differ at case {k}"))?;
        }
    }
    Ok(format!("{CASES} cases per suite: ad ad = id, ad(AB), rank duality, CC o A = 0, delta^2 = 0, determinism"))
}

fn conformal_four() -> Check {
    let s = conformal_killing_system(&Metric::minkowski(4)).map_err(err)?;
    ensure(s.equations == corpus("conformal-n4.sys").system.equations, || "conformal-n4.sys differs".into())?;
    let (dims, orders) = cc_chain(&s.equations, Budget::default()).map_err(err)?;
    ensure(dims.len() >= 5, || format!("chain stopped early: {dims:?}"))?;
    // dims[0] counts the unknowns, so the third bundle sits at index 3.
    let f2 = dims[3];
    let verdict = if f2 == 9 { "agrees with the predicted 9" } else { "disagrees with the predicted 9" };
    Ok(format!("dims {dims:?}, orders {orders:?}; dim F2 = {f2}, {verdict}"))
}

/// `(id, title, required, time limit in seconds, check)`.
pub type Criterion = (&'static str, &'static str, bool, u64, fn() -> Check);

pub const CRITERIA: &[Criterion] = &[
    ("1", "Airy / 2D elasticity", true, 1, airy),
    ("2", "grad-curl-div", true, 5, poincare),
    ("3", "double pendulum", true, 5, pendulum),
    ("4", "contact n=3", true, 10, contact_three),
    ("5", "Killing n=3", true, 60, killing_three),
    ("6", "conformal n=3", true, 300, conformal_three),
    ("7", "Einstein n=4", true, 600, einstein),
    ("8", "Weyl split", true, 30, weyl),
    ("9", "contact n=5", true, 120, contact_general),
    ("10", "Hamilton-Jacobi", true, 10, hamilton_jacobi),
    ("11", "linearization", true, 5, linearization),
    ("12", "property suites", true, 120, properties),
    ("13", "conformal n=4 probe", false, 1800, conformal_four),
];

pub fn run_criterion(c: &Criterion) -> Outcome {
    let t = Instant::now();
    let result = std::panic::catch_unwind(c.4).unwrap_or_else(|_| Err("panicked".into()));
    let elapsed = t.elapsed();
    let result = match result {
        Ok(m) if elapsed > Duration::from_secs(c.3) => Err(format!("{m} (over the {}s limit)", c.3)),
        other => other,
    };
    Outcome { id: c.0.into(), title: c.1.into(), required: c.2, result, elapsed }
}

// -------------------------------------------------------------------- corpus

fn expectation(sf: &SystemFile, key: &str, want: &str) -> Check {
    let sys = &sf.system;
    let yes_no = |b: bool| if b { "yes" } else { "no" }.to_string();
    let got = match key {
        "cc_rows" => syzygies(&sys.equations).map_err(err)?.cc_matrix.rows().to_string(),
        "cc_order" => syzygies(&sys.equations).map_err(err)?.cc_matrix.order().to_string(),
        "ext1" => match five_step_test(&sys.equations, Stages::Ext1).map_err(err)?.verdict_ext1 {
            Verdict::Zero => "zero".into(),
            Verdict::Nonzero => "nonzero".into(),
        },
        "witnesses" => torsion_witnesses(&sys.equations).map_err(err)?.len().to_string(),
        "involutive" => yes_no(is_involutive(sys).map_err(err)?.is_yes()),
        "added" => match formal_integrability_complete(sys, CompletionBudget::default()) {
            Ok(c) => c.added.len().to_string(),
            Err(Error::RankDrop { .. }) => "rank drop".into(),
            Err(e) => return Err(err(e)),
        },
        "chain" => {
            let (dims, _) = cc_chain(&sys.equations, Budget::default()).map_err(err)?;
            dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",")
        }
        "self_adjoint" => yes_no(adjoint_mismatch(&sys.equations).map_err(err)?.is_none()),
        "projective" => yes_no(projectivity_check(&sys.equations).map_err(err)?.is_projective()),
        other => return Err(format!("unknown expectation `{other}`")),
    };
    if got == want {
        Ok(format!("{key} = {got}"))
    } else {
        Err(format!("{key}: expected {want}, got {got}"))
    }
}

fn corpus_check(text: &str) -> Check {
    let sf = parse_system(text).map_err(err)?;
    let printed = print_system(&sf);
    let again = parse_system(&printed).map_err(|e| format!("reparse: {e}"))?;
    ensure(again.system.equations == sf.system.equations && print_system(&again) == printed, || "round trip changed the system".into())?;
    let mut done = vec!["round trip".to_string()];
    for (k, v) in &sf.expect {
        done.push(expectation(&sf, k, v)?);
    }
    Ok(done.join("; "))
}

/// Round trip and `expect:` entries of every corpus file.
pub fn corpus_outcomes() -> Vec<Outcome> {
    CORPUS
        .iter()
        .map(|(name, text)| {
            let t = Instant::now();
            let result = std::panic::catch_unwind(|| corpus_check(text)).unwrap_or_else(|_| Err("panicked".into()));
            Outcome { id: "c".into(), title: name.to_string(), required: true, result, elapsed: t.elapsed() }
        })
        .collect()
}

fn outcome_json(o: &Outcome) -> Value {
    let detail = match &o.result {
        Ok(m) | Err(m) => m,
    };
    json!({"id": o.id, "title": o.title, "required": o.required, "passed": o.passed(), "detail": detail})
}

/// All criteria and corpus checks; the flag is false when a required one
/// fails.
pub fn selftest() -> (Report, bool) {
    let mut r = Report::new("selftest", "");
    let mut all: Vec<Outcome> = CRITERIA.iter().map(run_criterion).collect();
    all.extend(corpus_outcomes());
    let ok = all.iter().all(|o| o.passed() || !o.required);
    for o in &all {
        r.line(o.line());
    }
    let passed = all.iter().filter(|o| o.passed()).count();
    r.line(format!("{passed}/{} checks passed", all.len()));
    // Per-check times stay in the text so the JSON stays reproducible.
    r.set("checks", Value::Array(all.iter().map(outcome_json).collect()));
    r.set("passed", json!(ok));
    (r, ok)
}
