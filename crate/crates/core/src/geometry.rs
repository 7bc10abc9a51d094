//! Builders for the classical systems of infinitesimal Lie equations
//! (Killing, conformal Killing, contact) and for the curvature operators of
//! a flat metric, plus the Weyl splitting of curvature-like tensors.

use std::sync::Arc;

use rand::Rng;

use crate::field::{DiffField, FieldElement};
use crate::involution::LinearSystem;
use crate::linalg;
use crate::ore::{DiffOperator, MultiIndex, OperatorMatrix};
use crate::{Error, Result};

fn fe(n: i64) -> FieldElement {
    FieldElement::int(n)
}

fn zero_row(m: usize) -> Vec<DiffOperator> {
    vec![DiffOperator::zero(); m]
}

fn d(dirs: &[usize], c: &FieldElement) -> DiffOperator {
    if c.is_zero() {
        DiffOperator::zero()
    } else {
        DiffOperator::term(MultiIndex::from_dirs(dirs), c.clone())
    }
}

fn vector_unknowns(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("xi{i}")).collect()
}

/// Index pairs `i ≤ j` in lexicographic order (0-based).
pub fn sym_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for i in 0..n {
        for j in i..n {
            v.push((i, j));
        }
    }
    v
}

fn pair_label(prefix: &str, i: usize, j: usize) -> String {
    format!("{prefix}{}{}", i + 1, j + 1)
}

#[derive(Debug, Clone)]
pub struct Metric {
    pub field: Arc<DiffField>,
    pub comps: Vec<Vec<FieldElement>>,
    pub signature: String,
}

impl Metric {
    pub fn new(field: Arc<DiffField>, comps: Vec<Vec<FieldElement>>, signature: &str) -> Result<Self> {
        let n = field.n();
        if comps.len() != n || comps.iter().any(|r| r.len() != n) {
            return Err(Error::ShapeMismatch(format!("metric must be {n}x{n}")));
        }
        for i in 0..n {
            for j in 0..i {
                if comps[i][j] != comps[j][i] {
                    return Err(Error::Invalid(format!("metric is not symmetric at ({}, {})", i + 1, j + 1)));
                }
            }
        }
        if linalg::determinant(&comps)?.is_zero() {
            return Err(Error::SingularMetric);
        }
        Ok(Metric { field, comps, signature: signature.to_string() })
    }

    pub fn diagonal(field: Arc<DiffField>, diag: &[FieldElement], signature: &str) -> Result<Self> {
        let n = diag.len();
        let comps = (0..n)
            .map(|i| (0..n).map(|j| if i == j { diag[i].clone() } else { FieldElement::zero() }).collect())
            .collect();
        Metric::new(field, comps, signature)
    }

    pub fn euclidean(n: usize) -> Self {
        Metric::diagonal(Arc::new(DiffField::standard(n)), &vec![fe(1); n], "euclidean").expect("identity is regular")
    }

    /// `diag(+1, -1, ..., -1)`.
    pub fn minkowski(n: usize) -> Self {
        let diag: Vec<FieldElement> = (0..n).map(|i| fe(if i == 0 { 1 } else { -1 })).collect();
        Metric::diagonal(Arc::new(DiffField::standard(n)), &diag, "minkowski(+,-,...,-)").expect("regular")
    }

    pub fn n(&self) -> usize {
        self.comps.len()
    }

    pub fn det(&self) -> Result<FieldElement> {
        linalg::determinant(&self.comps)
    }

    pub fn inverse(&self) -> Result<Vec<Vec<FieldElement>>> {
        linalg::inverse(&self.comps)?.ok_or(Error::SingularMetric)
    }

    pub fn is_constant(&self) -> bool {
        self.comps.iter().flatten().all(|x| x.is_constant())
    }

    /// A constant multiple of this metric.
    pub fn scaled(&self, a: &FieldElement) -> Result<Self> {
        let comps = self.comps.iter().map(|r| r.iter().map(|x| x * a).collect()).collect();
        Metric::new(self.field.clone(), comps, &self.signature)
    }
}

/// Levi-Civita symbols `γ^k_ij`, indexed `[k][i][j]`.
pub fn christoffel(g: &Metric) -> Result<Vec<Vec<Vec<FieldElement>>>> {
    let n = g.n();
    let inv = g.inverse()?;
    let f = &g.field;
    let mut dg = vec![vec![vec![FieldElement::zero(); n]; n]; n];
    for (r, slab) in dg.iter_mut().enumerate() {
        for i in 0..n {
            for j in 0..n {
                slab[i][j] = f.derive(&g.comps[i][j], r)?;
            }
        }
    }
    let half = FieldElement::ratio(1, 2);
    let mut out = vec![vec![vec![FieldElement::zero(); n]; n]; n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut acc = FieldElement::zero();
                for s in 0..n {
                    if inv[k][s].is_zero() {
                        continue;
                    }
                    let t = &(&dg[i][s][j] + &dg[j][i][s]) - &dg[s][i][j];
                    acc = &acc + &(&inv[k][s] * &t);
                }
                out[k][i][j] = &acc * &half;
            }
        }
    }
    Ok(out)
}

/// Row `Ω_ij = ω_rj ∂_iξ^r + ω_ir ∂_jξ^r + ξ^r ∂_rω_ij` over the unknowns ξ.
fn lie_metric_row(g: &Metric, i: usize, j: usize) -> Result<Vec<DiffOperator>> {
    let n = g.n();
    let mut row = zero_row(n);
    for (r, entry) in row.iter_mut().enumerate() {
        let mut op = d(&[i], &g.comps[r][j]).add(&d(&[j], &g.comps[i][r]));
        let z = g.field.derive(&g.comps[i][j], r)?;
        op = op.add(&d(&[], &z));
        *entry = op;
    }
    Ok(row)
}

pub fn killing_system(g: &Metric) -> Result<LinearSystem> {
    let n = g.n();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, j) in sym_pairs(n) {
        rows.push(lie_metric_row(g, i, j)?);
        labels.push(pair_label("Omega", i, j));
    }
    let m = OperatorMatrix::from_rows(g.field.clone(), n, rows).with_labels(labels, vector_unknowns(n));
    Ok(LinearSystem::new(m))
}

/// All `n(n+1)/2` rows of `ℒ(ξ)ω̂` multiplied by `|det ω|^{1/n}`, which keeps
/// every coefficient in K:
/// `Ω_ij - (2/n) ω_ij ∂_rξ^r - (1/n) ω_ij ξ^r ∂_r(det ω)/det ω`.
pub fn conformal_rows(g: &Metric) -> Result<Vec<((usize, usize), Vec<DiffOperator>)>> {
    let n = g.n();
    let det = g.det()?;
    let mut dlog = Vec::with_capacity(n);
    for r in 0..n {
        dlog.push(g.field.derive(&det, r)?.div(&det)?);
    }
    let two_n = FieldElement::ratio(2, n as i64);
    let one_n = FieldElement::ratio(1, n as i64);
    let mut out = Vec::new();
    for (i, j) in sym_pairs(n) {
        let mut row = lie_metric_row(g, i, j)?;
        let w = &g.comps[i][j];
        if !w.is_zero() {
            for (r, entry) in row.iter_mut().enumerate() {
                let extra = d(&[r], &(w * &two_n)).add(&d(&[], &(&(w * &one_n) * &dlog[r])));
                *entry = entry.sub(&extra);
            }
        }
        out.push(((i, j), row));
    }
    Ok(out)
}

/// Divides a row by the coefficient of its first leading term.
fn monic_row(row: Vec<DiffOperator>) -> Result<Vec<DiffOperator>> {
    let Some(lc) = row.iter().find_map(|p| p.leading().map(|t| t.1.clone())) else { return Ok(row) };
    let inv = lc.inv()?;
    Ok(row.iter().map(|p| p.scale(&inv)).collect())
}

/// Conformal Killing system: the trace-free rows, the last row carrying a
/// nonzero trace coefficient being dropped, each row made monic.
pub fn conformal_killing_system(g: &Metric) -> Result<LinearSystem> {
    let n = g.n();
    if n < 3 {
        return Err(Error::Invalid("the conformal Killing system needs n >= 3".into()));
    }
    let inv = g.inverse()?;
    let rows = conformal_rows(g)?;
    let drop = rows.iter().rposition(|((i, j), _)| !inv[*i][*j].is_zero()).expect("inverse metric is nonzero");
    let mut out = Vec::new();
    let mut labels = Vec::new();
    for (k, ((i, j), row)) in rows.into_iter().enumerate() {
        if k != drop {
            out.push(monic_row(row)?);
            labels.push(pair_label("Omega", i, j));
        }
    }
    let m = OperatorMatrix::from_rows(g.field.clone(), n, out).with_labels(labels, vector_unknowns(n));
    Ok(LinearSystem::new(m))
}

// ------------------------------------------------------------------ contact

/// Where the distinguished coordinate of the standard contact form sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContactLayout {
    /// `χ = dx^n - Σ x^{α+p} dx^α`, `α = 1..p`.
    Trailing,
    /// `χ = dx^1 - Σ x^{α+p} dx^α`, `α = 2..p+1` (for n = 3: `dx^1 - x^3 dx^2`).
    Leading,
}

struct ContactIndices {
    special: usize,
    pairs: Vec<(usize, usize)>,
}

fn contact_indices(n: usize, layout: ContactLayout) -> Result<ContactIndices> {
    if n < 3 || n % 2 == 0 {
        return Err(Error::Invalid(format!("contact structures need an odd n >= 3, got {n}")));
    }
    let p = (n - 1) / 2;
    Ok(match layout {
        ContactLayout::Trailing => ContactIndices { special: n - 1, pairs: (0..p).map(|a| (a, a + p)).collect() },
        ContactLayout::Leading => ContactIndices { special: 0, pairs: (1..=p).map(|a| (a, a + p)).collect() },
    })
}

pub fn standard_contact_form(n: usize, layout: ContactLayout) -> Result<(Arc<DiffField>, Vec<FieldElement>)> {
    let ix = contact_indices(n, layout)?;
    let field = Arc::new(DiffField::standard(n));
    let mut w = vec![FieldElement::zero(); n];
    w[ix.special] = fe(1);
    for &(a, b) in &ix.pairs {
        w[a] = -field.coord(b);
    }
    Ok((field, w))
}

/// Rows `(ℒ(ξ)χ)_i = χ_r ∂_iξ^r + ξ^r ∂_rχ_i` for a 1-form χ.
pub fn lie_form_rows(field: &Arc<DiffField>, w: &[FieldElement]) -> Result<Vec<Vec<DiffOperator>>> {
    let n = field.n();
    let mut rows = Vec::new();
    for i in 0..n {
        let mut row = zero_row(n);
        for (r, entry) in row.iter_mut().enumerate() {
            *entry = d(&[i], &w[r]).add(&d(&[], &field.derive(&w[i], r)?));
        }
        rows.push(row);
    }
    Ok(rows)
}

fn check_form(field: &DiffField, w: &[FieldElement]) -> Result<()> {
    let n = field.n();
    if w.len() != n {
        return Err(Error::ShapeMismatch(format!("form has {} components, expected {n}", w.len())));
    }
    if n % 2 == 0 {
        return Err(Error::Invalid(format!("contact structures need odd n, got {n}")));
    }
    if w.iter().all(|x| x.is_zero()) {
        return Err(Error::Invalid("contact form is zero".into()));
    }
    Ok(())
}

/// Medolaghi system of a 1-form density:
/// `χ_r ∂_iξ^r - (1/(p+1)) χ_i ∂_rξ^r + ξ^r ∂_rχ_i`, one row per `i`.
pub fn contact_system(field: &Arc<DiffField>, w: &[FieldElement]) -> Result<LinearSystem> {
    check_form(field, w)?;
    let n = field.n();
    let c = FieldElement::ratio(2, n as i64 + 1);
    let mut rows = lie_form_rows(field, w)?;
    for (i, row) in rows.iter_mut().enumerate() {
        let wi = &w[i] * &c;
        for (r, entry) in row.iter_mut().enumerate() {
            *entry = entry.sub(&d(&[r], &wi));
        }
    }
    let labels = (1..=n).map(|i| format!("Omega{i}")).collect();
    let m = OperatorMatrix::from_rows(field.clone(), n, rows).with_labels(labels, vector_unknowns(n));
    Ok(LinearSystem::new(m))
}

/// The Pfaffian form of `ℒ(ξ)α = ρ α`: ρ is eliminated with the first
/// nonzero component `α_s`, leaving the `n - 1` rows
/// `(ℒ(ξ)α)_i - (α_i/α_s)(ℒ(ξ)α)_s`.
pub fn contact_form_system(field: &Arc<DiffField>, w: &[FieldElement]) -> Result<LinearSystem> {
    check_form(field, w)?;
    let n = field.n();
    let s = (0..n).find(|&i| !w[i].is_zero() && w[i].is_constant()).or_else(|| (0..n).find(|&i| !w[i].is_zero()));
    let s = s.expect("form is nonzero");
    let lie = lie_form_rows(field, w)?;
    let mut rows = Vec::new();
    for (i, li) in lie.iter().enumerate() {
        if i == s {
            continue;
        }
        let f = w[i].div(&w[s])?;
        rows.push(li.iter().zip(&lie[s]).map(|(a, b)| a.sub(&b.scale(&f))).collect());
    }
    let labels = (1..n).map(|i| format!("Phi{i}")).collect();
    let m = OperatorMatrix::from_rows(field.clone(), n, rows).with_labels(labels, vector_unknowns(n));
    Ok(LinearSystem::new(m))
}

/// `ω_1(∂_2ω_3 - ∂_3ω_2) + ω_2(∂_3ω_1 - ∂_1ω_3) + ω_3(∂_1ω_2 - ∂_2ω_1)`.
pub fn vessiot_scalar(field: &DiffField, w: &[FieldElement]) -> Result<FieldElement> {
    if field.n() != 3 || w.len() != 3 {
        return Err(Error::Invalid("the structure scalar is defined for n = 3".into()));
    }
    let dd = |a: usize, i: usize| field.derive(&w[a], i);
    let t1 = &w[0] * &(&dd(2, 1)? - &dd(1, 2)?);
    let t2 = &w[1] * &(&dd(0, 2)? - &dd(2, 0)?);
    let t3 = &w[2] * &(&dd(1, 0)? - &dd(0, 1)?);
    Ok(&(&t1 + &t2) + &t3)
}

/// Injective parametrization `φ ↦ ξ` of infinitesimal contact
/// transformations of the standard form, with its left inverse `ξ ↦ i(ξ)χ`.
pub struct ContactParametrization {
    pub form: Vec<FieldElement>,
    pub op: OperatorMatrix,
    pub left_inverse: OperatorMatrix,
}

pub fn contact_parametrization(n: usize, layout: ContactLayout) -> Result<ContactParametrization> {
    let ix = contact_indices(n, layout)?;
    let (field, form) = standard_contact_form(n, layout)?;
    let one = fe(1);
    let mut col = zero_row(n);
    let mut special = d(&[], &one);
    for &(a, b) in &ix.pairs {
        let xb = field.coord(b);
        col[a] = d(&[b], &-&one);
        col[b] = d(&[a], &one).add(&d(&[ix.special], &xb));
        special = special.sub(&d(&[b], &xb));
    }
    col[ix.special] = special;
    let rows: Vec<Vec<DiffOperator>> = col.into_iter().map(|p| vec![p]).collect();
    let op = OperatorMatrix::from_rows(field.clone(), 1, rows).with_labels(vector_unknowns(n), vec!["phi".into()]);
    let inv_row: Vec<DiffOperator> = form.iter().map(|c| d(&[], c)).collect();
    let left_inverse =
        OperatorMatrix::from_rows(field.clone(), n, vec![inv_row]).with_labels(vec!["phi".into()], vector_unknowns(n));
    Ok(ContactParametrization { form, op, left_inverse })
}

/// Linearized contact pseudogroup of the Hamilton–Jacobi setting, over
/// coordinates `(x, z, p)` with unknowns `(xi, eta, zeta)`.
pub fn hj_contact_system() -> Result<LinearSystem> {
    let field = Arc::new(DiffField::coordinates(&["x", "z", "p"]));
    let unknowns: Vec<String> = ["xi", "eta", "zeta"].iter().map(|s| s.to_string()).collect();
    let m = OperatorMatrix::parse_rows(
        field,
        &unknowns,
        &["xi[1] - p*eta[1] - zeta + p*(xi[2] - p*eta[2])", "xi[3] - p*eta[3]"],
    )?;
    Ok(LinearSystem::new(m))
}

// ---------------------------------------------------------------- curvature

/// Accumulates an expression in the components `Ω_ij` (symmetric) into a row
/// over the columns `Ω_ij, i ≤ j`.
struct SymRow {
    n: usize,
    row: Vec<DiffOperator>,
}

impl SymRow {
    fn new(n: usize) -> Self {
        SymRow { n, row: zero_row(n * (n + 1) / 2) }
    }

    fn col(&self, i: usize, j: usize) -> usize {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        a * self.n - a * (a + 1) / 2 + b
    }

    /// Adds `c · d_dirs Ω_ij`.
    fn add(&mut self, i: usize, j: usize, dirs: &[usize], c: &FieldElement) {
        let k = self.col(i, j);
        self.row[k] = self.row[k].add(&d(dirs, c));
    }

    fn scaled(self, c: &FieldElement) -> Vec<DiffOperator> {
        self.row.iter().map(|p| p.scale(c)).collect()
    }
}

/// Linearized curvature `R_{kl,ij} = d_li Ω_kj + d_kj Ω_li - d_ki Ω_lj - d_lj Ω_ki`.
fn riemann_component(n: usize, k: usize, l: usize, i: usize, j: usize) -> SymRow {
    let mut r = SymRow::new(n);
    let one = fe(1);
    let m1 = fe(-1);
    r.add(k, j, &[l, i], &one);
    r.add(l, i, &[k, j], &one);
    r.add(l, j, &[k, i], &m1);
    r.add(k, i, &[l, j], &m1);
    r
}

fn omega_labels(n: usize) -> Vec<String> {
    sym_pairs(n).into_iter().map(|(i, j)| pair_label("Omega", i, j)).collect()
}

/// Riemann operator rows for a flat metric. n = 2: the single row `tr(R)`.
/// n = 3: the self-adjoint 6-row form indexed like Ω, row `(a,b)` being
/// `-(2-δ_ab) s_a s_b R_{a*,b*}` with `1* = (2,3)`, `2* = (1,3)`, `3* = (1,2)`
/// and `s = (+,-,+)`. n ≥ 4: `R_{kl,ij}` for pairs `kl ≤ ij`, lexicographic,
/// skipping rows dependent on earlier ones (first skipped: `R_{14,23}`).
pub fn riemann_operator(g: &Metric) -> Result<OperatorMatrix> {
    if !g.is_constant() {
        return Err(Error::NonConstantMetric);
    }
    let n = g.n();
    let field = g.field.clone();
    let cols = omega_labels(n);
    let (rows, labels): (Vec<Vec<DiffOperator>>, Vec<String>) = match n {
        0 | 1 => (Vec::new(), Vec::new()),
        2 => (vec![riemann_component(2, 0, 1, 0, 1).scaled(&fe(-1))], vec!["trR".into()]),
        3 => {
            let pair = [(1, 2), (0, 2), (0, 1)];
            let sign = [1i64, -1, 1];
            let mut rows = Vec::new();
            let mut labels = Vec::new();
            for (a, b) in sym_pairs(3) {
                let c = -(if a == b { 1 } else { 2 }) * sign[a] * sign[b];
                let (k, l) = pair[a];
                let (i, j) = pair[b];
                rows.push(riemann_component(3, k, l, i, j).scaled(&fe(c)));
                labels.push(pair_label("R", a, b));
            }
            (rows, labels)
        }
        _ => {
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|k| (k + 1..n).map(move |l| (k, l))).collect();
            let mut acc = linalg::Echelon { rows: Vec::new(), pivots: Vec::new(), forced: Vec::new(), ncols: 0 };
            let mut coords: Vec<(usize, MultiIndex)> = Vec::new();
            for (c, _) in cols.iter().enumerate() {
                for mu in MultiIndex::all_of_len(n, 2) {
                    coords.push((c, mu));
                }
            }
            acc.ncols = coords.len();
            let mut rows = Vec::new();
            let mut labels = Vec::new();
            for (x, &(k, l)) in pairs.iter().enumerate() {
                for &(i, j) in &pairs[x..] {
                    let row = riemann_component(n, k, l, i, j).row;
                    let v: Vec<FieldElement> = coords.iter().map(|(c, mu)| row[*c].coeff(mu)).collect();
                    if acc.try_insert(v)? {
                        rows.push(row);
                        labels.push(format!("R{}{}{}{}", k + 1, l + 1, i + 1, j + 1));
                    }
                }
            }
            (rows, labels)
        }
    };
    Ok(OperatorMatrix::from_rows(field, cols.len(), rows).with_labels(labels, cols))
}

pub struct CurvatureOps {
    pub riemann: OperatorMatrix,
    pub ricci: OperatorMatrix,
    pub einstein: OperatorMatrix,
}

/// Riemann, Ricci and Einstein operators for a constant metric. The Ricci and
/// Einstein rows `ij` with `i < j` are doubled, matching the symmetric pairing
/// of the columns, so the Einstein matrix is literally its own adjoint.
pub fn riemann_einstein_ops(g: &Metric) -> Result<CurvatureOps> {
    if !g.is_constant() {
        return Err(Error::NonConstantMetric);
    }
    let n = g.n();
    let inv = g.inverse()?;
    let half = FieldElement::ratio(1, 2);
    let ricci_component = |i: usize, j: usize| -> SymRow {
        let mut r = SymRow::new(n);
        for a in 0..n {
            for b in 0..n {
                let w = &inv[a][b];
                if w.is_zero() {
                    continue;
                }
                let h = w * &half;
                // □Ω_ij + d_ij tr Ω
                r.add(i, j, &[a, b], &h);
                r.add(a, b, &[i, j], &h);
                // - d_ri Ω^r_j - d_rj Ω^r_i with Ω^r_j = ω^{rs} Ω_sj
                r.add(b, j, &[a, i], &-&h);
                r.add(b, i, &[a, j], &-&h);
            }
        }
        r
    };
    let mut ricci_rows = Vec::new();
    let mut ricci_full = vec![vec![zero_row(n * (n + 1) / 2); n]; n];
    for i in 0..n {
        for j in 0..n {
            ricci_full[i][j] = ricci_component(i, j).row;
        }
    }
    let mut tr = zero_row(n * (n + 1) / 2);
    for i in 0..n {
        for j in 0..n {
            if !inv[i][j].is_zero() {
                tr = tr.iter().zip(&ricci_full[i][j]).map(|(a, b)| a.add(&b.scale(&inv[i][j]))).collect();
            }
        }
    }
    let mut einstein_rows = Vec::new();
    let mut labels_r = Vec::new();
    let mut labels_e = Vec::new();
    for (i, j) in sym_pairs(n) {
        let f = fe(if i == j { 1 } else { 2 });
        let ric: Vec<DiffOperator> = ricci_full[i][j].iter().map(|p| p.scale(&f)).collect();
        let c = &(&g.comps[i][j] * &half) * &f;
        let ein: Vec<DiffOperator> = ric.iter().zip(&tr).map(|(a, t)| a.sub(&t.scale(&c))).collect();
        ricci_rows.push(ric);
        einstein_rows.push(ein);
        labels_r.push(pair_label("Ric", i, j));
        labels_e.push(pair_label("E", i, j));
    }
    let cols = omega_labels(n);
    let f = g.field.clone();
    Ok(CurvatureOps {
        riemann: riemann_operator(g)?,
        ricci: OperatorMatrix::from_rows(f.clone(), cols.len(), ricci_rows).with_labels(labels_r, cols.clone()),
        einstein: OperatorMatrix::from_rows(f, cols.len(), einstein_rows).with_labels(labels_e, cols),
    })
}

/// Rows of an operator valued in symmetric 2-tensors, re-expressed with
/// both indices raised by the metric. Rows are ordered as [`sym_pairs`] with
/// off-diagonal rows doubled, as produced by [`riemann_einstein_ops`]. The
/// result pairs with the unknowns `Ω_ij` directly, so self-adjointness of a
/// metric-valued operator is `adjoint_mismatch(&raise_pairs(g, m)?)` being `None`.
pub fn raise_pairs(g: &Metric, m: &OperatorMatrix) -> Result<OperatorMatrix> {
    let n = g.n();
    let pairs = sym_pairs(n);
    if m.rows() != pairs.len() {
        return Err(Error::ShapeMismatch(format!("{} rows, expected {}", m.rows(), pairs.len())));
    }
    let inv = g.inverse()?;
    let index = |a: usize, b: usize| pairs.iter().position(|&p| p == (a.min(b), a.max(b))).expect("pair");
    let half = FieldElement::ratio(1, 2);
    let mut rows = Vec::new();
    for &(i, j) in &pairs {
        let f = fe(if i == j { 1 } else { 2 });
        let mut row = zero_row(m.cols());
        for a in 0..n {
            for b in 0..n {
                let w = &inv[i][a] * &inv[j][b];
                if w.is_zero() {
                    continue;
                }
                let w = if a == b { &w * &f } else { &(&w * &f) * &half };
                let src = m.row(index(a, b));
                row = row.iter().zip(src).map(|(x, y)| x.add(&y.scale(&w))).collect();
            }
        }
        rows.push(row);
    }
    let labels = m.row_labels.iter().map(|l| format!("{l}^")).collect();
    Ok(OperatorMatrix::from_rows(g.field.clone(), m.cols(), rows).with_labels(labels, m.col_labels.clone()))
}

/// First entry `(row, col)` where a square operator matrix differs from its
/// adjoint, with both entries.
pub fn adjoint_mismatch(m: &OperatorMatrix) -> Result<Option<(usize, usize, DiffOperator, DiffOperator)>> {
    let a = m.adjoint()?;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if m.get(i, j) != a.get(i, j) {
                return Ok(Some((i, j, m.get(i, j).clone(), a.get(i, j).clone())));
            }
        }
    }
    Ok(None)
}

// ------------------------------------------------------------- Weyl split

/// `ρ^k_{l,ij}`, antisymmetric in `(i, j)`; stored densely `[k][l][i][j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurvatureTensor {
    pub n: usize,
    data: Vec<FieldElement>,
}

impl CurvatureTensor {
    pub fn zero(n: usize) -> Self {
        CurvatureTensor { n, data: vec![FieldElement::zero(); n * n * n * n] }
    }

    fn at(&self, k: usize, l: usize, i: usize, j: usize) -> usize {
        ((k * self.n + l) * self.n + i) * self.n + j
    }

    pub fn get(&self, k: usize, l: usize, i: usize, j: usize) -> &FieldElement {
        &self.data[self.at(k, l, i, j)]
    }

    pub fn set(&mut self, k: usize, l: usize, i: usize, j: usize, v: FieldElement) {
        let x = self.at(k, l, i, j);
        self.data[x] = v;
    }

    /// Builds from nested arrays `[k][l][i][j]`, checking antisymmetry in `(i, j)`.
    pub fn from_nested(data: Vec<Vec<Vec<Vec<FieldElement>>>>) -> Result<Self> {
        let n = data.len();
        let mut t = CurvatureTensor::zero(n);
        let ragged = data.iter().any(|a| a.len() != n || a.iter().any(|b| b.len() != n || b.iter().any(|c| c.len() != n)));
        if ragged {
            return Err(Error::ShapeMismatch("tensor must be n x n x n x n".into()));
        }
        for (k, a) in data.into_iter().enumerate() {
            for (l, b) in a.into_iter().enumerate() {
                for (i, c) in b.into_iter().enumerate() {
                    if c.len() != n {
                        return Err(Error::ShapeMismatch("tensor must be n x n x n x n".into()));
                    }
                    for (j, v) in c.into_iter().enumerate() {
                        t.set(k, l, i, j, v);
                    }
                }
            }
        }
        if t.data.len() != n * n * n * n {
            return Err(Error::ShapeMismatch("tensor must be n x n x n x n".into()));
        }
        for k in 0..n {
            for l in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        if t.get(k, l, i, j) != &-t.get(k, l, j, i) {
                            return Err(Error::Invalid("tensor is not antisymmetric in its last two indices".into()));
                        }
                    }
                }
            }
        }
        Ok(t)
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<Vec<FieldElement>>>> {
        let n = self.n;
        (0..n)
            .map(|k| (0..n).map(|l| (0..n).map(|i| (0..n).map(|j| self.get(k, l, i, j).clone()).collect()).collect()).collect())
            .collect()
    }

    /// `ρ_ij = ρ^r_{i,rj}`.
    pub fn ricci(&self) -> Vec<Vec<FieldElement>> {
        let n = self.n;
        let mut out = vec![vec![FieldElement::zero(); n]; n];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                for r in 0..n {
                    *x = &*x + self.get(r, i, r, j);
                }
            }
        }
        out
    }

    /// `ρ^r_{r,ij}`.
    pub fn first_trace(&self) -> Vec<Vec<FieldElement>> {
        let n = self.n;
        let mut out = vec![vec![FieldElement::zero(); n]; n];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                for r in 0..n {
                    *x = &*x + self.get(r, r, i, j);
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn add(&self, o: &CurvatureTensor) -> CurvatureTensor {
        CurvatureTensor { n: self.n, data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect() }
    }
}

pub fn contract(inv: &[Vec<FieldElement>], t: &[Vec<FieldElement>]) -> FieldElement {
    let mut acc = FieldElement::zero();
    for (a, b) in inv.iter().zip(t) {
        for (x, y) in a.iter().zip(b) {
            if !x.is_zero() {
                acc = &acc + &(x * y);
            }
        }
    }
    acc
}

/// `(δ^k_i S_lj - δ^k_j S_li) - ω^{ks}(ω_li S_sj - ω_lj S_si)`.
fn lift(g: &Metric, inv: &[Vec<FieldElement>], s: &[Vec<FieldElement>]) -> CurvatureTensor {
    let n = g.n();
    let w = &g.comps;
    let mut t = CurvatureTensor::zero(n);
    for k in 0..n {
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = FieldElement::zero();
                    if k == i {
                        v = &v + &s[l][j];
                    }
                    if k == j {
                        v = &v - &s[l][i];
                    }
                    for (x, inv_ks) in inv[k].iter().enumerate() {
                        if inv_ks.is_zero() {
                            continue;
                        }
                        let inner = &(&w[l][i] * &s[x][j]) - &(&w[l][j] * &s[x][i]);
                        v = &v - &(inv_ks * &inner);
                    }
                    t.set(k, l, i, j, v);
                }
            }
        }
    }
    t
}

/// `n ρ^k_{l,ij} = (δ^k_i τ_lj - δ^k_j τ_li) - ω^{ks}(ω_li τ_sj - ω_lj τ_si)`.
pub fn curvature_from_trace(g: &Metric, tau: &[Vec<FieldElement>]) -> Result<CurvatureTensor> {
    let inv = g.inverse()?;
    let t = lift(g, &inv, tau);
    let c = FieldElement::ratio(1, g.n() as i64);
    Ok(CurvatureTensor { n: t.n, data: t.data.iter().map(|x| x * &c).collect() })
}

#[derive(Debug, Clone)]
pub struct WeylSplit {
    /// `ρ_ij`.
    pub ricci: Vec<Vec<FieldElement>>,
    /// `ω^{ij} ρ_ij`.
    pub trace: FieldElement,
    pub tau: Vec<Vec<FieldElement>>,
    pub sigma: CurvatureTensor,
    /// The Ricci-determined part, so that `ρ = ricci_part + σ`.
    pub ricci_part: CurvatureTensor,
}

/// `τ_ij = n/(n-2) ρ_ij - n/(2(n-1)(n-2)) ω_ij tr(ρ)` and
/// `σ = ρ - 1/(n-2) lift(ρ_ij) + 1/((n-1)(n-2)) (δ^k_i ω_lj - δ^k_j ω_li) tr(ρ)`.
pub fn weyl_split(rho: &CurvatureTensor, g: &Metric) -> Result<WeylSplit> {
    let n = g.n();
    if rho.n != n {
        return Err(Error::ShapeMismatch(format!("tensor has n = {}, metric has n = {n}", rho.n)));
    }
    if n < 3 {
        return Err(Error::Invalid("the Weyl splitting needs n >= 3".into()));
    }
    let inv = g.inverse()?;
    let nn = n as i64;
    let ric = rho.ricci();
    let tr = contract(&inv, &ric);
    let a = FieldElement::ratio(nn, nn - 2);
    let b = FieldElement::ratio(nn, 2 * (nn - 1) * (nn - 2));
    let tau: Vec<Vec<FieldElement>> =
        (0..n).map(|i| (0..n).map(|j| &(&a * &ric[i][j]) - &(&(&b * &g.comps[i][j]) * &tr)).collect()).collect();
    let c1 = FieldElement::ratio(1, nn - 2);
    let c2 = FieldElement::ratio(1, (nn - 1) * (nn - 2));
    let l = lift(g, &inv, &ric);
    let mut part = CurvatureTensor::zero(n);
    for k in 0..n {
        for li in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut w = FieldElement::zero();
                    if k == i {
                        w = &w + &g.comps[li][j];
                    }
                    if k == j {
                        w = &w - &g.comps[li][i];
                    }
                    let v = &(&c1 * l.get(k, li, i, j)) - &(&(&c2 * &w) * &tr);
                    part.set(k, li, i, j, v);
                }
            }
        }
    }
    let sigma = CurvatureTensor { n, data: rho.data.iter().zip(&part.data).map(|(x, y)| x - y).collect() };
    Ok(WeylSplit { ricci: ric, trace: tr, tau, sigma, ricci_part: part })
}

/// A random algebraic curvature tensor with integer data: a sum of
/// Kulkarni–Nomizu products `h ⊙ h'` of symmetric integer matrices, with the
/// first index raised by the metric.
pub fn random_curvature<R: Rng>(g: &Metric, rng: &mut R, terms: usize, range: i64) -> Result<CurvatureTensor> {
    let n = g.n();
    let inv = g.inverse()?;
    let sym = |rng: &mut R| {
        let mut h = vec![vec![0i64; n]; n];
        for i in 0..n {
            for j in i..n {
                let v = rng.gen_range(-range..=range);
                h[i][j] = v;
                h[j][i] = v;
            }
        }
        h
    };
    let mut low = vec![0i64; n * n * n * n];
    let at = |k: usize, l: usize, i: usize, j: usize| ((k * n + l) * n + i) * n + j;
    for _ in 0..terms {
        let h = sym(rng);
        let h2 = sym(rng);
        for k in 0..n {
            for l in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        low[at(k, l, i, j)] +=
                            h[k][i] * h2[l][j] + h[l][j] * h2[k][i] - h[k][j] * h2[l][i] - h[l][i] * h2[k][j];
                    }
                }
            }
        }
    }
    let mut t = CurvatureTensor::zero(n);
    for k in 0..n {
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = FieldElement::zero();
                    for (s, w) in inv[k].iter().enumerate() {
                        let x = low[at(s, l, i, j)];
                        if !w.is_zero() && x != 0 {
                            v = &v + &(w * &fe(x));
                        }
                    }
                    t.set(k, l, i, j, v);
                }
            }
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn killing_n2_rows() {
        let s = killing_system(&Metric::euclidean(2)).unwrap();
        assert_eq!(s.equations.render_row(0), "2*xi1[1]");
        assert_eq!(s.equations.render_row(1), "xi1[2] + xi2[1]");
        assert_eq!(s.equations.render_row(2), "2*xi2[2]");
        assert_eq!(killing_system(&Metric::minkowski(4)).unwrap().equations.rows(), 10);
    }

    #[test]
    fn vessiot_examples() {
        let f = DiffField::standard(3);
        let x3 = f.coord(2);
        let w = vec![fe(1), -&x3, fe(0)];
        assert_eq!(vessiot_scalar(&f, &w).unwrap(), fe(1));
        assert_eq!(vessiot_scalar(&f, &[fe(1), fe(0), fe(0)]).unwrap(), fe(0));
        let w3: Vec<FieldElement> = w.iter().map(|x| x * &fe(3)).collect();
        assert_eq!(vessiot_scalar(&f, &w3).unwrap(), fe(9));
    }

    #[test]
    fn singular_metric_rejected() {
        let f = Arc::new(DiffField::standard(2));
        let e = Metric::new(f, vec![vec![fe(1), fe(1)], vec![fe(1), fe(1)]], "x").unwrap_err();
        assert_eq!(e, Error::SingularMetric);
    }

    #[test]
    fn flat_christoffel_vanishes() {
        let g = christoffel(&Metric::minkowski(3)).unwrap();
        assert!(g.iter().flatten().flatten().all(|x| x.is_zero()));
    }
}
