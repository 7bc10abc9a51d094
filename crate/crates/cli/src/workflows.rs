//! One function per subcommand, each producing a [`Report`].

use std::sync::Arc;

use delos_core::basis::{diff_rank, syzygies_with, Budget};
use delos_core::duality::{five_step_test_with, projectivity_check, Projectivity, Stages, TorsionWitness, Verdict};
use delos_core::field::{DiffField, FieldElement};
use delos_core::geometry::*;
use delos_core::involution::*;
use delos_core::ore::{polynomial_multiple, OperatorMatrix};
use delos_core::{Error, Result};
use serde_json::{json, Value};

use crate::report::{elements, matrix_json, square, Report};
use crate::system::{from_system, print_system, SystemFile};

#[derive(Clone, Copy, Debug)]
pub struct Options {
    /// Largest derivation order in basis computations.
    pub bound: Option<usize>,
    pub seed: u64,
    pub stages: Stages,
}

impl Default for Options {
    fn default() -> Self {
        Options { bound: None, seed: COORDINATE_SEED, stages: Stages::Ext1 }
    }
}

impl Options {
    pub fn budget(&self) -> Budget {
        let mut b = Budget::default();
        if let Some(d) = self.bound {
            b.max_degree = d;
        }
        b
    }

    pub fn completion(&self) -> CompletionBudget {
        CompletionBudget { seed: self.seed, ..CompletionBudget::default() }
    }

    fn disclose(&self, r: &mut Report) {
        r.decide("degree_bound", json!(self.budget().max_degree));
        r.decide("coordinate_seed", json!(self.seed));
    }
}

fn start(workflow: &str, sf: &SystemFile, input: &str, opts: &Options) -> Report {
    let mut r = Report::new(workflow, input);
    opts.disclose(&mut r);
    if let Some(name) = &sf.name {
        r.set("name", json!(name));
        r.line(format!("system: {name}"));
    }
    r.set("input", matrix_json(&sf.system.equations));
    r
}

/// Rows of a CC matrix rescaled to polynomial coefficients where possible;
/// this does not change the module they generate.
fn tidy(m: &OperatorMatrix) -> OperatorMatrix {
    let rows = (0..m.rows()).map(|i| polynomial_multiple(m.row(i))).collect();
    OperatorMatrix::from_rows(m.field().clone(), m.cols(), rows).with_labels(m.row_labels.clone(), m.col_labels.clone())
}

pub fn adjoint(sf: &SystemFile, input: &str, opts: &Options) -> Result<Report> {
    let mut r = start("adjoint", sf, input, opts);
    let m = &sf.system.equations;
    r.decide("adjoint", json!("transpose of entry-wise formal adjoints, ad(a d_mu) = (-1)^|mu| d_mu a"));
    let ad = m.adjoint()?;
    r.matrix("adjoint", "ad(D)", &ad);
    if m.rows() == m.cols() {
        let same = adjoint_mismatch(m)?;
        r.set("self_adjoint", json!(same.is_none()));
        r.line(format!("self-adjoint: {}", if same.is_none() { "yes" } else { "no" }));
        if let Some((i, j, a, b)) = same {
            let f = m.field();
            r.set("mismatch", json!({"row": i + 1, "col": j + 1, "entry": a.render(f), "adjoint_entry": b.render(f)}));
            r.line(format!("  first mismatch at ({}, {}): {} vs {}", i + 1, j + 1, a.render(f), b.render(f)));
        }
    }
    Ok(r)
}

pub fn cc(sf: &SystemFile, input: &str, opts: &Options) -> Result<Report> {
    let mut r = start("cc", sf, input, opts);
    let s = syzygies_with(&sf.system.equations, opts.budget())?;
    r.matrix("cc", "compatibility conditions", &tidy(&s.cc_matrix));
    let c = &s.certificate;
    r.set(
        "certificate",
        json!({
            "composition_verified": c.composition_verified,
            "degree_reached": c.degree_reached,
            "candidates": c.candidates,
            "zero_rows": c.zero_rows.iter().map(|k| k + 1).collect::<Vec<_>>(),
        }),
    );
    r.line(format!("certificate: cc*D = 0 checked, basis closed at order {}", c.degree_reached));
    if s.cc_matrix.rows() > 0 {
        let mut ad = s.cc_matrix.adjoint()?;
        ad.convention = ad.convention.flip();
        r.matrix("cc_adjoint", "ad(CC)", &ad);
    }
    Ok(r)
}

fn cells_json(t: &DimTable) -> Value {
    Value::Array(t.cells.iter().map(|c| json!({"r": c.r, "s": c.s, "z": c.z, "b": c.b, "h": c.h})).collect())
}

fn cells_text(t: &DimTable) -> Vec<String> {
    let mut out = vec!["  level  s  dim Z  dim B  dim H".to_string()];
    for c in &t.cells {
        out.push(format!("  q+{:<4}{:>2}{:>7}{:>7}{:>7}", c.r, c.s, c.z, c.b, c.h));
    }
    out
}

fn tableau_json(t: &ClassTableau) -> Value {
    json!({"betas": t.betas, "classes": t.describe(), "transform": t.transform, "seed": t.seed})
}

fn symbol_dims(sys: &LinearSystem, upto: usize) -> Result<Vec<usize>> {
    (0..=upto).map(|k| symbol(sys, k)?.dim()).collect()
}

pub fn involution(sf: &SystemFile, input: &str, opts: &Options) -> Result<Report> {
    let mut r = start("involution", sf, input, opts);
    let sys = &sf.system;
    let dims = symbol_dims(sys, 2)?;
    r.set("q", json!(sys.q));
    r.set("symbol_dims", json!(dims));
    r.line(format!("order q = {}; dim g_q, g_q+1, g_q+2 = {dims:?}", sys.q));
    let t = delta_cohomology(sys, 1)?;
    r.set("delta_cohomology", cells_json(&t));
    r.set("delta_squared_zero", json!(t.delta_squared_zero));
    r.line("delta-cohomology of the symbol:");
    r.text.extend(cells_text(&t));
    let tab = cartan_test_with(sys, opts.seed)?;
    r.set("cartan", tab.as_ref().map(tableau_json).unwrap_or(Value::Null));
    match &tab {
        Some(t) => r.line(format!("Cartan test passes: {}", t.describe())),
        None => r.line("Cartan test fails in the given and random coordinates"),
    }
    let verdict = is_involutive(sys)?;
    let (yes, why) = match &verdict {
        Involutivity::Yes(_) => (true, Value::Null),
        Involutivity::No(w) => (false, json!(format!("{w:?}"))),
    };
    r.set("involutive", json!(yes));
    r.set("reason", why.clone());
    r.line(format!("involutive: {}", if yes { "yes".to_string() } else { format!("no ({})", why.as_str().unwrap_or("")) }));
    Ok(r)
}

fn certificate_json(c: &Certificate) -> Value {
    match c {
        Certificate::Involutive(t) => json!({"kind": "involutive", "tableau": tableau_json(t)}),
        Certificate::TwoAcyclic { levels_checked } => json!({"kind": "two_acyclic", "levels_checked": levels_checked}),
    }
}

pub fn complete(sf: &SystemFile, input: &str, opts: &Options) -> Result<Report> {
    let mut r = start("complete", sf, input, opts);
    let sys = &sf.system;
    let c = formal_integrability_complete(sys, opts.completion())?;
    let f = &sys.field;
    let added: Vec<Value> = c
        .added
        .iter()
        .map(|a| json!({"round": a.round + 1, "order": a.order, "expr": delos_core::ore::render_row(f, &a.row, &sys.unknowns)}))
        .collect();
    r.line(format!("added equations: {}", c.added.len()));
    for a in &c.added {
        r.line(format!("  round {}, order {}: {}", a.round + 1, a.order, delos_core::ore::render_row(f, &a.row, &sys.unknowns)));
    }
    r.set("added", Value::Array(added));
    r.set("formally_integrable_as_given", json!(c.added.is_empty()));
    r.set("prolongations", json!(c.prolongations));
    r.set("certificate", certificate_json(&c.certificate));
    r.set("pivots", json!(c.pivots));
    r.line(format!("prolongations to a 2-acyclic symbol: {}", c.prolongations));
    match &c.certificate {
        Certificate::Involutive(t) => r.line(format!("certificate: involutive, {}", t.describe())),
        Certificate::TwoAcyclic { levels_checked } => {
            r.line(format!("certificate: 2-acyclic symbol on {levels_checked} further levels"))
        }
    }
    if !c.pivots.is_empty() {
        r.line(format!("generic ranks assume nonvanishing of: {}", c.pivots.join(", ")));
    }
    let dim = equation_rank(&c.system)?;
    r.set("equation_rank", json!(dim));
    r.set("unknowns_at_order", json!(jet_dim(c.system.n(), c.system.m(), c.system.q) - dim));
    let out = SystemFile { name: sf.name.clone(), system: c.system.clone(), expect: Vec::new() };
    r.set("system", json!(print_system(&out)));
    r.matrix("completed", "completed system", &c.system.equations);
    Ok(r)
}

fn witness_json(w: &TorsionWitness, f: &DiffField, unknowns: &[String]) -> Value {
    json!({
        "element": w.render(f, unknowns),
        "annihilators": w.annihilators.iter().map(|p| polynomial_multiple(std::slice::from_ref(p))[0].render(f)).collect::<Vec<_>>(),
    })
}

pub fn partest(sf: &SystemFile, input: &str, opts: &Options) -> Result<Report> {
    let mut r = start("partest", sf, input, opts);
    let d1 = &sf.system.equations;
    let rep = five_step_test_with(d1, opts.stages, opts.budget())?;
    r.decide("stages", json!(if opts.stages == Stages::Ext2 { "ext1,ext2" } else { "ext1" }));
    r.matrix("ad_d1", "ad(D1)", &rep.ad_d1);
    r.matrix("ad_d", "ad(D) = CC(ad(D1))", &rep.ad_d);
    r.matrix("d", "D = ad(ad(D))", &rep.d);
    r.matrix("d1_prime", "D1' = CC(D)", &tidy(&rep.d1_prime));
    let zero = rep.verdict_ext1 == Verdict::Zero;
    r.parametrizable = Some(zero);
    r.set("ext1", json!(if zero { "zero" } else { "nonzero" }));
    r.set("parametrizable", json!(zero));
    r.line(format!("ext1: {}", if zero { "zero (parametrizable by D)" } else { "nonzero (not parametrizable)" }));
    let f = d1.field();
    r.set("witnesses", Value::Array(rep.witnesses.iter().map(|w| witness_json(w, f, &d1.col_labels)).collect()));
    if !rep.witnesses.is_empty() {
        r.line(format!("torsion witnesses ({}):", rep.witnesses.len()));
        for w in &rep.witnesses {
            let ann: Vec<String> = w.annihilators.iter().map(|p| polynomial_multiple(std::slice::from_ref(p))[0].render(f)).collect();
            r.line(format!("  {}  annihilated by {}", w.render(f, &d1.col_labels), ann.join(", ")));
        }
    }
    if let Some(s2) = &rep.ext2 {
        r.matrix("ad_dm1", "ad(D-1) = CC(ad(D))", &s2.ad_dm1);
        r.matrix("dm1", "D-1", &s2.dm1);
        r.matrix("d_prime", "D' = CC(D-1)", &s2.d_prime);
        let z = s2.verdict == Verdict::Zero;
        r.set("ext2", json!(if z { "zero" } else { "nonzero" }));
        r.line(format!("ext2: {}", if z { "zero" } else { "nonzero" }));
    }
    Ok(r)
}

pub fn dims(sf: &SystemFile, input: &str, opts: &Options) -> Result<Report> {
    let mut r = start("dims", sf, input, opts);
    let sys = &sf.system;
    let g = symbol_dims(sys, 3)?;
    r.set("q", json!(sys.q));
    r.set("symbol_dims", json!(g));
    r.line(format!("dim g_q .. g_q+3 = {g:?}"));
    let f0 = equation_rank(sys)?;
    r.set("equation_rank", json!(f0));
    let probe = cc_count_probe(sys, 3)?;
    r.set(
        "cc_probe",
        Value::Array(probe.iter().map(|p| json!({"r": p.r, "g": p.g, "s": p.s, "f": p.f, "count": p.count})).collect()),
    );
    r.line("symbol-level CC count, count = dim g_q+r - dim S_q+r(E) + dim S_r(F0):");
    for p in &probe {
        r.line(format!("  r={}: {} = {} - {} + {}", p.r, p.count, p.g, p.s, p.f));
    }
    match cc_order_estimate(sys, opts.completion()) {
        Ok(k) => {
            r.set("cc_order_estimate", json!(k));
            r.line(format!("order of generating CC (2-acyclicity rule): {k}"));
        }
        Err(e) => r.set("cc_order_estimate", json!({"error": e.to_string()})),
    }
    if is_involutive(sys)?.is_yes() {
        let janet = bundle_dims(BundleKind::Janet, sys)?;
        let spencer = bundle_dims(BundleKind::Spencer, sys)?;
        r.set("janet_dims", json!(janet));
        r.set("spencer_dims", json!(spencer));
        r.line(format!("Janet bundles F_0.. = {janet:?}"));
        r.line(format!("Spencer bundles C_0.. = {spencer:?}"));
    } else {
        r.set("janet_dims", Value::Null);
        r.line("not involutive: bundle dimensions need a completed system (run `complete`)");
    }
    let (chain, orders) = cc_chain(&sys.equations, opts.budget())?;
    r.set("cc_chain", json!({"dims": chain, "orders": orders}));
    r.line(format!("operator sequence dims {chain:?}, orders {orders:?}"));
    Ok(r)
}

// ---------------------------------------------------------------- geometry

#[derive(Clone, Debug, Default)]
pub struct GeomArgs {
    pub metric: Option<String>,
    pub n: Option<usize>,
    pub omega: Option<String>,
    pub layout: Option<String>,
    /// Contents of the tensor file for `weyl-split`.
    pub tensor: Option<String>,
}

pub fn metric(name: &str, n: usize) -> Result<Metric> {
    match name {
        "euclidean" => Ok(Metric::euclidean(n)),
        "minkowski" => Ok(Metric::minkowski(n)),
        other => Err(Error::Invalid(format!("unknown metric `{other}` (euclidean or minkowski)"))),
    }
}

fn geom_metric(a: &GeomArgs, r: &mut Report) -> Result<Metric> {
    let n = a.n.ok_or_else(|| Error::Invalid("--n is required".into()))?;
    let g = metric(a.metric.as_deref().unwrap_or("euclidean"), n)?;
    r.decide("metric", json!(g.signature));
    r.set("n", json!(n));
    r.line(format!("metric: {}, n = {n}", g.signature));
    Ok(g)
}

fn chain(r: &mut Report, op: &OperatorMatrix, opts: &Options) -> Result<()> {
    let (dims, orders) = cc_chain(op, opts.budget())?;
    r.set("chain", json!({"dims": dims, "orders": orders}));
    r.line(format!("operator sequence dims {dims:?}, orders {orders:?}"));
    Ok(())
}

/// The system a `geom` run works on, in system-file form.
pub type Emitted = Option<SystemFile>;

pub fn geom(kind: &str, a: &GeomArgs, opts: &Options) -> Result<(Report, Emitted)> {
    let canon = format!("{kind} metric={:?} n={:?} omega={:?} layout={:?} tensor={:?}", a.metric, a.n, a.omega, a.layout, a.tensor);
    let mut r = Report::new(&format!("geom {kind}"), &canon);
    opts.disclose(&mut r);
    let mut emitted = None;
    match kind {
        "killing" | "conformal" => {
            let g = geom_metric(a, &mut r)?;
            let sys = if kind == "killing" { killing_system(&g)? } else { conformal_killing_system(&g)? };
            if kind == "conformal" {
                r.decide("conformal_normalization", json!("metric divided by |det|^(1/n) when that root is rational; rows made monic"));
            }
            r.matrix("system", "system", &sys.equations);
            r.set("symbol_dims", json!(symbol_dims(&sys, 2)?));
            match cc_order_estimate(&sys, opts.completion()) {
                Ok(k) => {
                    r.set("cc_order_estimate", json!(k));
                    r.line(format!("order of generating CC: {k}"));
                }
                Err(e) => r.set("cc_order_estimate", json!({"error": e.to_string()})),
            }
            chain(&mut r, &sys.equations, opts)?;
            emitted = Some(from_system(&format!("{kind}-{}-n{}", a.metric.as_deref().unwrap_or("euclidean"), g.n()), sys));
        }
        "riemann" => {
            let g = geom_metric(a, &mut r)?;
            r.decide("riemann_rows", json!("rows indexed by pairs (ij,kl), ij <= kl lexicographically; Omega_ij with i<j enters doubled"));
            let m = riemann_operator(&g)?;
            r.matrix("riemann", "Riemann operator", &m);
            r.set("self_adjoint", json!(adjoint_mismatch(&m)?.is_none()));
        }
        "einstein" => {
            let g = geom_metric(a, &mut r)?;
            r.decide("einstein_pairing", json!("self-adjointness checked after raising both indices with the metric"));
            let ops = riemann_einstein_ops(&g)?;
            r.matrix("einstein", "Einstein operator", &ops.einstein);
            let e = adjoint_mismatch(&raise_pairs(&g, &ops.einstein)?)?;
            let ri = adjoint_mismatch(&raise_pairs(&g, &ops.ricci)?)?;
            r.set("einstein_self_adjoint", json!(e.is_none()));
            r.set("ricci_self_adjoint", json!(ri.is_none()));
            r.line(format!("Einstein self-adjoint: {}", e.is_none()));
            if let Some((i, j, _, _)) = ri {
                r.set("ricci_mismatch", json!([i + 1, j + 1]));
                r.line(format!("Ricci not self-adjoint, first mismatch at ({}, {})", i + 1, j + 1));
            }
            let div = syzygies_with(&ops.einstein, opts.budget())?.cc_matrix;
            r.matrix("einstein_cc", "CC(Einstein)", &div);
            let (re, rr) = (diff_rank(&ops.einstein)?, diff_rank(&ops.riemann)?);
            r.set("diff_rank", json!({"einstein": re, "riemann": rr}));
            r.line(format!("differential ranks: Einstein {re}, Riemann {rr}"));
            emitted = Some(from_system(&format!("einstein-n{}", g.n()), LinearSystem::new(ops.einstein)));
        }
        "contact" => {
            let text = a.omega.as_deref().ok_or_else(|| Error::Invalid("--omega is required".into()))?;
            let parts: Vec<&str> = text.split(',').collect();
            let field = Arc::new(DiffField::standard(parts.len()));
            let w: Vec<FieldElement> = parts.iter().map(|p| field.parse(p.trim())).collect::<Result<_>>()?;
            r.set("omega", elements(&field, &w));
            if field.n() == 3 {
                let c = vessiot_scalar(&field, &w)?;
                r.set("structure_constant", json!(field.render(&c)));
                r.line(format!("structure constant c = {}", field.render(&c)));
            }
            let pf = contact_form_system(&field, &w)?;
            r.matrix("form_system", "first-order system of L(xi)omega = rho omega", &pf.equations);
            let mut completed = None;
            match formal_integrability_complete(&pf, opts.completion()) {
                Ok(c) => {
                    let f = &field;
                    let added: Vec<String> = c.added.iter().map(|x| delos_core::ore::render_row(f, &x.row, &pf.unknowns)).collect();
                    r.set("completion", json!({"added": added, "certificate": certificate_json(&c.certificate)}));
                    r.line(format!("completion adds {} equation(s)", added.len()));
                    for s in &added {
                        r.line(format!("  {s}"));
                    }
                    if let Certificate::Involutive(t) = &c.certificate {
                        r.line(format!("involutive: {}", t.describe()));
                    }
                    completed = Some(c.system);
                }
                Err(e) => r.set("completion", json!({"error": e.to_string()})),
            }
            let full = completed.as_ref().unwrap_or(&pf);
            let mut cc = syzygies_with(&full.equations, opts.budget())?.cc_matrix;
            cc.col_labels = (1..=full.equations.rows()).map(|i| format!("Phi{i}")).collect();
            r.matrix("completed_cc", "compatibility conditions of the completed system", &tidy(&cc));
            match projectivity_check(&pf.equations) {
                Ok(Projectivity::Projective) => {
                    r.set("projective", json!(true));
                    r.line("projective: yes");
                }
                Ok(Projectivity::NotProjective { torsion, .. }) => {
                    r.set("projective", json!(false));
                    let ws: Vec<Value> = torsion.iter().map(|t| witness_json(t, &field, &pf.unknowns)).collect();
                    r.line(format!("projective: no; torsion {}", ws.iter().map(|w| w["element"].as_str().unwrap_or("").to_string()).collect::<Vec<_>>().join(", ")));
                    r.set("torsion", Value::Array(ws));
                }
                Err(e) => r.set("projective", json!({"error": e.to_string()})),
            }
            emitted = Some(from_system("contact", pf));
        }
        "contact-param" => {
            let n = a.n.ok_or_else(|| Error::Invalid("--n is required".into()))?;
            let layout = match a.layout.as_deref().unwrap_or("trailing") {
                "trailing" => ContactLayout::Trailing,
                "leading" => ContactLayout::Leading,
                other => return Err(Error::Invalid(format!("unknown layout `{other}`"))),
            };
            r.decide("contact_layout", json!(format!("{layout:?}")));
            let c = contact_parametrization(n, layout)?;
            let f = c.op.field().clone();
            r.set("form", elements(&f, &c.form));
            r.matrix("parametrization", "parametrization phi -> xi", &c.op);
            r.matrix("left_inverse", "left inverse xi -> i(xi)chi", &c.left_inverse);
            let med = contact_system(&f, &c.form)?;
            let ok = med.equations.mul(&c.op)?.is_zero() && c.left_inverse.mul(&c.op)? == OperatorMatrix::identity(f.clone(), 1);
            r.set("verified", json!(ok));
            r.line(format!("system * parametrization = 0 and left inverse: {ok}"));
            let comp = formal_integrability_complete(&med, opts.completion())?;
            r.set("medolaghi_added", json!(comp.added.len()));
            r.line(format!("raw Medolaghi system: completion adds {} equation(s)", comp.added.len()));
            if is_involutive(&comp.system)?.is_yes() {
                let janet = bundle_dims(BundleKind::Janet, &comp.system)?;
                r.set("janet_dims", json!(janet));
                r.line(format!("Janet bundles of the completed system: {janet:?}"));
            }
            emitted = Some(from_system(&format!("contact-n{n}"), med));
        }
        "hj" => {
            let sys = hj_contact_system()?;
            r.matrix("system", "system", &sys.equations);
            let c = formal_integrability_complete(&sys, opts.completion())?;
            let added: Vec<String> = c.added.iter().map(|x| delos_core::ore::render_row(&sys.field, &x.row, &sys.unknowns)).collect();
            let free = jet_dim(c.system.n(), c.system.m(), c.system.q) - equation_rank(&c.system)?;
            r.set("added", json!(added));
            r.set("certificate", certificate_json(&c.certificate));
            r.set("dimension", json!(free));
            for s in &added {
                r.line(format!("added: {s}"));
            }
            r.line(format!("dimension count: {free}"));
            emitted = Some(from_system("hamilton-jacobi", sys));
        }
        "weyl-split" => {
            let g = geom_metric(a, &mut r)?;
            let text = a.tensor.as_deref().ok_or_else(|| Error::Invalid("--input is required".into()))?;
            let rho = parse_tensor(&g.field, text)?;
            let s = weyl_split(&rho, &g)?;
            let f = &g.field;
            r.set("ricci", square(f, &s.ricci));
            r.set("trace", json!(f.render(&s.trace)));
            r.set("tau", square(f, &s.tau));
            r.set("sigma_is_zero", json!(s.sigma.is_zero()));
            r.set("sigma", tensor_json(f, &s.sigma));
            r.line(format!("tr = {}", f.render(&s.trace)));
            r.line("tau:");
            for row in &s.tau {
                r.line(format!("  [{}]", row.iter().map(|x| f.render(x)).collect::<Vec<_>>().join(", ")));
            }
            r.line(format!("Weyl part vanishes: {}", s.sigma.is_zero()));
        }
        other => return Err(Error::Invalid(format!("unknown geometry `{other}`"))),
    }
    Ok((r, emitted))
}

fn tensor_json(f: &DiffField, t: &CurvatureTensor) -> Value {
    let nested = t.to_nested();
    Value::Array(nested.iter().map(|a| Value::Array(a.iter().map(|b| square(f, b)).collect())).collect())
}

/// Nested arrays `[k][l][i][j]` of expression strings.
pub fn parse_tensor(field: &DiffField, text: &str) -> Result<CurvatureTensor> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Syntax { line: e.line(), col: e.column(), msg: e.to_string() })?;
    fn level<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
        v.as_array().ok_or_else(|| Error::Invalid(format!("expected an array at {what}")))
    }
    let mut data = Vec::new();
    for a in level(&v, "depth 1")? {
        let mut da = Vec::new();
        for b in level(a, "depth 2")? {
            let mut db = Vec::new();
            for c in level(b, "depth 3")? {
                let mut dc = Vec::new();
                for x in level(c, "depth 4")? {
                    let s = match x {
                        Value::String(s) => s.clone(),
                        Value::Number(k) => k.to_string(),
                        _ => return Err(Error::Invalid("tensor entries must be expression strings".into())),
                    };
                    dc.push(field.parse(&s)?);
                }
                db.push(dc);
            }
            da.push(db);
        }
        data.push(da);
    }
    if data.len() != field.n() {
        return Err(Error::ShapeMismatch(format!("tensor has n = {}, expected {}", data.len(), field.n())));
    }
    CurvatureTensor::from_nested(data)
}
