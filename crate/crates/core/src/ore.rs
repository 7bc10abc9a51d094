//! The ring `D = K[d₁..dₙ]` of linear differential operators, operator
//! matrices and the formal adjoint.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{self, Domain, Pos};
use crate::field::{DiffField, FieldElement, Rat};

pub const MAX_DIRS: usize = 8;

/// Exponents of a derivation monomial `d_μ`. Unused slots are zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct MultiIndex {
    e: [u8; MAX_DIRS],
}

impl MultiIndex {
    pub fn zero() -> Self {
        MultiIndex::default()
    }

    pub fn unit(i: usize) -> Self {
        let mut m = MultiIndex::zero();
        m.e[i] = 1;
        m
    }

    pub fn from_exps(exps: &[u8]) -> Self {
        assert!(exps.len() <= MAX_DIRS, "at most {MAX_DIRS} directions supported");
        let mut m = MultiIndex::zero();
        m.e[..exps.len()].copy_from_slice(exps);
        m
    }

    /// From a list of directions with repetition, e.g. `[0, 2]` is `d₁d₃`.
    pub fn from_dirs(dirs: &[usize]) -> Self {
        let mut m = MultiIndex::zero();
        for &i in dirs {
            m.e[i] += 1;
        }
        m
    }

    pub fn get(&self, i: usize) -> u8 {
        self.e[i]
    }

    pub fn exps(&self) -> &[u8; MAX_DIRS] {
        &self.e
    }

    pub fn len(&self) -> usize {
        self.e.iter().map(|&x| x as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.e.iter().all(|&x| x == 0)
    }

    pub fn add(&self, o: &MultiIndex) -> MultiIndex {
        let mut m = *self;
        for i in 0..MAX_DIRS {
            m.e[i] += o.e[i];
        }
        m
    }

    pub fn plus(&self, i: usize) -> MultiIndex {
        let mut m = *self;
        m.e[i] += 1;
        m
    }

    pub fn divides(&self, o: &MultiIndex) -> bool {
        (0..MAX_DIRS).all(|i| self.e[i] <= o.e[i])
    }

    /// `self - o`, assuming `o` divides `self`.
    pub fn sub(&self, o: &MultiIndex) -> MultiIndex {
        let mut m = *self;
        for i in 0..MAX_DIRS {
            m.e[i] -= o.e[i];
        }
        m
    }

    pub fn lcm(&self, o: &MultiIndex) -> MultiIndex {
        let mut m = *self;
        for i in 0..MAX_DIRS {
            m.e[i] = m.e[i].max(o.e[i]);
        }
        m
    }

    /// Directions with repetition, ascending.
    pub fn dirs(&self) -> Vec<usize> {
        let mut v = Vec::with_capacity(self.len());
        for i in 0..MAX_DIRS {
            for _ in 0..self.e[i] {
                v.push(i);
            }
        }
        v
    }

    /// Class: the smallest direction that occurs (0-based); `None` for `μ = 0`.
    pub fn class(&self) -> Option<usize> {
        self.e.iter().position(|&x| x > 0)
    }

    /// Every multi-index of length `len` in `n` directions, descending in the
    /// term order.
    pub fn all_of_len(n: usize, len: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = [0u8; MAX_DIRS];
        fn rec(i: usize, n: usize, left: usize, cur: &mut [u8; MAX_DIRS], out: &mut Vec<MultiIndex>) {
            if i + 1 == n {
                cur[i] = left as u8;
                out.push(MultiIndex { e: *cur });
                cur[i] = 0;
                return;
            }
            for k in (0..=left).rev() {
                cur[i] = k as u8;
                rec(i + 1, n, left - k, cur, out);
            }
            cur[i] = 0;
        }
        if n == 0 {
            if len == 0 {
                out.push(MultiIndex::zero());
            }
            return out;
        }
        rec(0, n, len, &mut cur, &mut out);
        out.sort_by(|a, b| b.cmp(a));
        out
    }

    /// Binomial coefficient `C(self, sub)` = Π C(μ_i, λ_i).
    pub fn binom(&self, sub: &MultiIndex) -> u64 {
        let mut acc = 1u64;
        for i in 0..MAX_DIRS {
            acc *= binom(self.e[i] as u64, sub.e[i] as u64);
        }
        acc
    }

    /// Text form `[1,3]` (1-based), empty for order zero.
    pub fn bracket(&self) -> String {
        if self.is_zero() {
            return String::new();
        }
        let d: Vec<String> = self.dirs().iter().map(|i| (i + 1).to_string()).collect();
        format!("[{}]", d.join(","))
    }
}

pub fn binom(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r = 1u64;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

impl Ord for MultiIndex {
    /// Graded reverse lexicographic with `d₁ > d₂ > … > dₙ`.
    fn cmp(&self, o: &MultiIndex) -> Ordering {
        let (a, b) = (self.len(), o.len());
        if a != b {
            return a.cmp(&b);
        }
        for i in (0..MAX_DIRS).rev() {
            if self.e[i] != o.e[i] {
                return o.e[i].cmp(&self.e[i]);
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, o: &MultiIndex) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d{}", if self.is_zero() { "0".into() } else { self.bracket() })
    }
}

/// `Σ a_μ d_μ`, coefficients on the left, terms sorted descending.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct DiffOperator {
    terms: Vec<(MultiIndex, FieldElement)>,
}

impl DiffOperator {
    pub fn zero() -> Self {
        DiffOperator { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Self::scalar(FieldElement::one())
    }

    pub fn scalar(a: FieldElement) -> Self {
        Self::term(MultiIndex::zero(), a)
    }

    pub fn term(m: MultiIndex, a: FieldElement) -> Self {
        if a.is_zero() {
            Self::zero()
        } else {
            DiffOperator { terms: vec![(m, a)] }
        }
    }

    /// `d_i` (0-based).
    pub fn d(i: usize) -> Self {
        Self::term(MultiIndex::unit(i), FieldElement::one())
    }

    /// `d_μ` from a direction list.
    pub fn dirs(dirs: &[usize]) -> Self {
        Self::term(MultiIndex::from_dirs(dirs), FieldElement::one())
    }

    pub fn from_terms(terms: Vec<(MultiIndex, FieldElement)>) -> Self {
        let mut map: BTreeMap<MultiIndex, FieldElement> = BTreeMap::new();
        for (m, a) in terms {
            if a.is_zero() {
                continue;
            }
            match map.get_mut(&m) {
                Some(x) => *x = &*x + &a,
                None => {
                    map.insert(m, a);
                }
            }
        }
        DiffOperator { terms: map.into_iter().rev().filter(|(_, a)| !a.is_zero()).collect() }
    }

    /// Terms in descending term order.
    pub fn terms(&self) -> &[(MultiIndex, FieldElement)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Order, or `-1` for the zero operator.
    pub fn order(&self) -> i32 {
        self.terms.iter().map(|t| t.0.len() as i32).max().unwrap_or(-1)
    }

    pub fn leading(&self) -> Option<&(MultiIndex, FieldElement)> {
        self.terms.first()
    }

    pub fn coeff(&self, m: &MultiIndex) -> FieldElement {
        self.terms.iter().find(|t| t.0 == *m).map(|t| t.1.clone()).unwrap_or_default()
    }

    pub fn is_constant_coeff(&self) -> bool {
        self.terms.iter().all(|t| t.1.is_constant())
    }

    pub fn add(&self, o: &DiffOperator) -> DiffOperator {
        merge(&self.terms, &o.terms, None)
    }

    pub fn sub(&self, o: &DiffOperator) -> DiffOperator {
        merge(&self.terms, &o.terms, Some(&FieldElement::int(-1)))
    }

    pub fn neg(&self) -> DiffOperator {
        DiffOperator { terms: self.terms.iter().map(|(m, a)| (*m, -a)).collect() }
    }

    /// `a ∘ self` (left multiplication by a scalar).
    pub fn scale(&self, a: &FieldElement) -> DiffOperator {
        if a.is_zero() {
            return DiffOperator::zero();
        }
        if a.is_one() {
            return self.clone();
        }
        DiffOperator { terms: self.terms.iter().map(|(m, c)| (*m, a * c)).filter(|t| !t.1.is_zero()).collect() }
    }

    /// `d_i ∘ self = Σ a d_{μ+1_i} + ∂_i(a) d_μ`.
    pub fn d_left(&self, field: &DiffField, i: usize) -> Result<DiffOperator> {
        let shifted: Vec<(MultiIndex, FieldElement)> = self.terms.iter().map(|(m, a)| (m.plus(i), a.clone())).collect();
        let mut derived = Vec::new();
        for (m, a) in &self.terms {
            if !a.is_constant() {
                let da = field.derive(a, i)?;
                if !da.is_zero() {
                    derived.push((*m, da));
                }
            }
        }
        let s = DiffOperator { terms: shifted };
        if derived.is_empty() {
            return Ok(s);
        }
        Ok(s.add(&DiffOperator::from_terms(derived)))
    }

    /// `d_μ ∘ self`.
    pub fn d_mu_left(&self, field: &DiffField, mu: &MultiIndex) -> Result<DiffOperator> {
        if self.is_constant_coeff() {
            return Ok(DiffOperator { terms: self.terms.iter().map(|(m, a)| (m.add(mu), a.clone())).collect() });
        }
        let mut acc = self.clone();
        for i in mu.dirs() {
            acc = acc.d_left(field, i)?;
        }
        Ok(acc)
    }

    /// `self ∘ q` in normal form.
    pub fn mul(&self, field: &DiffField, q: &DiffOperator) -> Result<DiffOperator> {
        if self.is_zero() || q.is_zero() {
            return Ok(DiffOperator::zero());
        }
        let mut acc: Vec<(MultiIndex, FieldElement)> = Vec::new();
        for (mu, a) in &self.terms {
            let dq = q.d_mu_left(field, mu)?;
            acc.extend(dq.terms.into_iter().map(|(m, b)| (m, a * &b)));
        }
        Ok(DiffOperator::from_terms(acc))
    }

    /// Formal adjoint `Σ (-1)^{|μ|} d_μ ∘ a_μ`.
    pub fn adjoint(&self, field: &DiffField) -> Result<DiffOperator> {
        let mut acc: Vec<(MultiIndex, FieldElement)> = Vec::new();
        for (mu, a) in &self.terms {
            let t = DiffOperator::scalar(a.clone()).d_mu_left(field, mu)?;
            let sign = if mu.len() % 2 == 1 { FieldElement::int(-1) } else { FieldElement::one() };
            acc.extend(t.terms.into_iter().map(|(m, b)| (m, &sign * &b)));
        }
        Ok(DiffOperator::from_terms(acc))
    }

    /// Apply to a function given as a field element.
    pub fn apply(&self, field: &DiffField, f: &FieldElement) -> Result<FieldElement> {
        let mut acc = FieldElement::zero();
        for (mu, a) in &self.terms {
            let df = field.derive_dirs(f, &mu.dirs())?;
            acc = &acc + &(a * &df);
        }
        Ok(acc)
    }

    /// Render applied to the unknown `name`, e.g. `x3*xi2[3] - xi1`.
    pub fn render_on(&self, field: &DiffField, name: &str) -> String {
        let mut out = String::new();
        for (k, (m, a)) in self.terms.iter().enumerate() {
            push_term(&mut out, field, a, &format!("{name}{}", m.bracket()), k == 0);
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }

    /// Render as an operator in `d` notation, e.g. `d[1,2] - x1*d[1]`.
    pub fn render(&self, field: &DiffField) -> String {
        let mut out = String::new();
        for (k, (m, a)) in self.terms.iter().enumerate() {
            let sym = if m.is_zero() { String::new() } else { format!("d{}", m.bracket()) };
            push_term(&mut out, field, a, &sym, k == 0);
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }
}

impl fmt::Debug for DiffOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.terms.iter().map(|(m, a)| format!("({a:?}){m:?}")).collect();
        write!(f, "{}", if parts.is_empty() { "0".to_string() } else { parts.join(" + ") })
    }
}

fn is_negative(a: &FieldElement) -> bool {
    use num_traits::Signed;
    match a {
        FieldElement::Rat(r) => r.is_negative(),
        FieldElement::Frac(b) => b.0.lc().is_negative(),
    }
}

/// Append `± a*sym` in the expression grammar (`sym` may be empty).
pub(crate) fn push_term(out: &mut String, field: &DiffField, a: &FieldElement, sym: &str, first: bool) {
    let neg = is_negative(a);
    let abs = if neg { -a } else { a.clone() };
    if first {
        if neg {
            out.push('-');
        }
    } else {
        out.push_str(if neg { " - " } else { " + " });
    }
    if sym.is_empty() {
        out.push_str(&field.render_factor(&abs));
    } else if abs.is_one() {
        out.push_str(sym);
    } else {
        out.push_str(&field.render_factor(&abs));
        out.push('*');
        out.push_str(sym);
    }
}

fn merge(a: &[(MultiIndex, FieldElement)], b: &[(MultiIndex, FieldElement)], scale_b: Option<&FieldElement>) -> DiffOperator {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    let sb = |c: &FieldElement| match scale_b {
        Some(s) => s * c,
        None => c.clone(),
    };
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            Ordering::Greater => {
                out.push(a[i].clone());
                i += 1;
            }
            Ordering::Less => {
                out.push((b[j].0, sb(&b[j].1)));
                j += 1;
            }
            Ordering::Equal => {
                let c = &a[i].1 + &sb(&b[j].1);
                if !c.is_zero() {
                    out.push((a[i].0, c));
                }
                i += 1;
                j += 1;
            }
        }
    }
    out.extend(a[i..].iter().cloned());
    out.extend(b[j..].iter().map(|t| (t.0, sb(&t.1))));
    DiffOperator { terms: out }
}

/// Which way a matrix acts (operator vs module reading of the same array).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Convention {
    ActsLeftOnColumns,
    ActsRightOnRows,
}

impl Convention {
    pub fn flip(self) -> Self {
        match self {
            Convention::ActsLeftOnColumns => Convention::ActsRightOnRows,
            Convention::ActsRightOnRows => Convention::ActsLeftOnColumns,
        }
    }
}

/// Rectangular matrix over `D`; row `i` is the operator producing output
/// `row_labels[i]` from the unknowns `col_labels`.
#[derive(Clone)]
pub struct OperatorMatrix {
    field: Arc<DiffField>,
    rows: usize,
    cols: usize,
    entries: Vec<DiffOperator>,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub convention: Convention,
}

impl PartialEq for OperatorMatrix {
    /// Entry-wise equality (labels and convention are metadata).
    fn eq(&self, o: &Self) -> bool {
        self.rows == o.rows && self.cols == o.cols && self.entries == o.entries
    }
}

fn default_labels(prefix: &str, k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("{prefix}{i}")).collect()
}

impl OperatorMatrix {
    pub fn new(field: Arc<DiffField>, rows: usize, cols: usize, entries: Vec<DiffOperator>) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count");
        OperatorMatrix {
            field,
            rows,
            cols,
            entries,
            row_labels: default_labels("r", rows),
            col_labels: default_labels("c", cols),
            convention: Convention::ActsLeftOnColumns,
        }
    }

    pub fn from_rows(field: Arc<DiffField>, cols: usize, rows: Vec<Vec<DiffOperator>>) -> Self {
        let r = rows.len();
        let mut entries = Vec::with_capacity(r * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "ragged rows");
            entries.extend(row);
        }
        Self::new(field, r, cols, entries)
    }

    pub fn zero(field: Arc<DiffField>, rows: usize, cols: usize) -> Self {
        Self::new(field, rows, cols, vec![DiffOperator::zero(); rows * cols])
    }

    pub fn identity(field: Arc<DiffField>, m: usize) -> Self {
        let mut z = Self::zero(field, m, m);
        for i in 0..m {
            z.entries[i * m + i] = DiffOperator::one();
        }
        z
    }

    pub fn with_labels(mut self, rows: Vec<String>, cols: Vec<String>) -> Self {
        assert_eq!(rows.len(), self.rows);
        assert_eq!(cols.len(), self.cols);
        self.row_labels = rows;
        self.col_labels = cols;
        self
    }

    pub fn field(&self) -> &Arc<DiffField> {
        &self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &DiffOperator {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, p: DiffOperator) {
        self.entries[i * self.cols + j] = p;
    }

    pub fn row(&self, i: usize) -> &[DiffOperator] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<DiffOperator>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// The 1×m matrix holding row `i`.
    pub fn row_matrix(&self, i: usize) -> OperatorMatrix {
        let mut m = OperatorMatrix::new(self.field.clone(), 1, self.cols, self.row(i).to_vec());
        m.row_labels = vec![self.row_labels[i].clone()];
        m.col_labels = self.col_labels.clone();
        m.convention = self.convention;
        m
    }

    /// Submatrix on the given rows (same columns).
    pub fn select_rows(&self, idx: &[usize]) -> OperatorMatrix {
        let mut m = OperatorMatrix::from_rows(self.field.clone(), self.cols, idx.iter().map(|&i| self.row(i).to_vec()).collect());
        m.row_labels = idx.iter().map(|&i| self.row_labels[i].clone()).collect();
        m.col_labels = self.col_labels.clone();
        m.convention = self.convention;
        m
    }

    /// Submatrix on the given columns (same rows).
    pub fn select_cols(&self, idx: &[usize]) -> OperatorMatrix {
        let rows = (0..self.rows).map(|i| idx.iter().map(|&j| self.get(i, j).clone()).collect()).collect();
        let mut m = OperatorMatrix::from_rows(self.field.clone(), idx.len(), rows);
        m.row_labels = self.row_labels.clone();
        m.col_labels = idx.iter().map(|&j| self.col_labels[j].clone()).collect();
        m.convention = self.convention;
        m
    }

    /// Stack the rows of `other` below `self`.
    pub fn vstack(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        if self.cols != other.cols {
            return Err(Error::ShapeMismatch(format!("vstack {} vs {} columns", self.cols, other.cols)));
        }
        let mut m = self.clone();
        m.entries.extend(other.entries.iter().cloned());
        m.rows += other.rows;
        m.row_labels.extend(other.row_labels.iter().cloned());
        Ok(m)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    pub fn order(&self) -> i32 {
        self.entries.iter().map(|e| e.order()).max().unwrap_or(-1)
    }

    pub fn row_order(&self, i: usize) -> i32 {
        self.row(i).iter().map(|e| e.order()).max().unwrap_or(-1)
    }

    pub fn is_constant_coeff(&self) -> bool {
        self.entries.iter().all(|e| e.is_constant_coeff())
    }

    /// `self · b`.
    pub fn mul(&self, b: &OperatorMatrix) -> Result<OperatorMatrix> {
        if self.cols != b.rows {
            return Err(Error::ShapeMismatch(format!("{}x{} times {}x{}", self.rows, self.cols, b.rows, b.cols)));
        }
        if self.convention != b.convention {
            return Err(Error::ShapeMismatch("incompatible conventions".into()));
        }
        let f = &*self.field;
        let mut entries = Vec::with_capacity(self.rows * b.cols);
        for i in 0..self.rows {
            for j in 0..b.cols {
                let mut acc = DiffOperator::zero();
                for k in 0..self.cols {
                    let (p, q) = (self.get(i, k), b.get(k, j));
                    if p.is_zero() || q.is_zero() {
                        continue;
                    }
                    acc = acc.add(&p.mul(f, q)?);
                }
                entries.push(acc);
            }
        }
        let mut m = OperatorMatrix::new(self.field.clone(), self.rows, b.cols, entries);
        m.row_labels = self.row_labels.clone();
        m.col_labels = b.col_labels.clone();
        m.convention = self.convention;
        Ok(m)
    }

    /// Transposed matrix of entry-wise adjoints; flips the convention.
    pub fn adjoint(&self) -> Result<OperatorMatrix> {
        let f = &*self.field;
        let mut entries = Vec::with_capacity(self.entries.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                entries.push(self.get(i, j).adjoint(f)?);
            }
        }
        let mut m = OperatorMatrix::new(self.field.clone(), self.cols, self.rows, entries);
        m.row_labels = self.col_labels.clone();
        m.col_labels = self.row_labels.clone();
        m.convention = self.convention.flip();
        Ok(m)
    }

    /// Image of the vector `f` of field elements.
    pub fn apply(&self, f: &[FieldElement]) -> Result<Vec<FieldElement>> {
        if f.len() != self.cols {
            return Err(Error::ShapeMismatch(format!("vector of length {} for {} columns", f.len(), self.cols)));
        }
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut acc = FieldElement::zero();
            for j in 0..self.cols {
                acc = &acc + &self.get(i, j).apply(&self.field, &f[j])?;
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// Row `i` in equation syntax over the column labels.
    pub fn render_row(&self, i: usize) -> String {
        render_row(&self.field, self.row(i), &self.col_labels)
    }

    /// One line per row: `label: expression`.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for i in 0..self.rows {
            s.push_str(&format!("{}: {}\n", self.row_labels[i], self.render_row(i)));
        }
        s
    }

    /// Parse rows given as linear expressions in jets of the column labels.
    pub fn parse_rows(field: Arc<DiffField>, unknowns: &[String], rows: &[&str]) -> Result<OperatorMatrix> {
        let mut out = Vec::new();
        for (k, r) in rows.iter().enumerate() {
            out.push(parse_row_at(&field, unknowns, r, Pos { line: k + 1, col: 1 })?);
        }
        Ok(OperatorMatrix::from_rows(field, unknowns.len(), out).with_labels(default_labels("r", rows.len()), unknowns.to_vec()))
    }
}

impl fmt::Debug for OperatorMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

pub fn render_row(field: &DiffField, row: &[DiffOperator], unknowns: &[String]) -> String {
    let mut out = String::new();
    let mut first = true;
    for (j, p) in row.iter().enumerate() {
        for (m, a) in p.terms() {
            push_term(&mut out, field, a, &format!("{}{}", unknowns[j], m.bracket()), first);
            first = false;
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// Linear combination of unknown jets plus a scalar part.
#[derive(Clone)]
struct Lin {
    jets: Vec<(usize, MultiIndex, FieldElement)>,
    konst: FieldElement,
}

struct LinDomain<'a> {
    field: &'a DiffField,
    unknowns: &'a [String],
}

impl Lin {
    fn scalar(a: FieldElement) -> Lin {
        Lin { jets: Vec::new(), konst: a }
    }

    fn scale(&self, a: &FieldElement) -> Lin {
        Lin { jets: self.jets.iter().map(|(k, m, c)| (*k, *m, a * c)).collect(), konst: a * &self.konst }
    }
}

impl Domain for LinDomain<'_> {
    type V = Lin;

    fn int(&mut self, n: &num_bigint::BigInt) -> Result<Lin> {
        Ok(Lin::scalar(FieldElement::Rat(Rat::from_integer(n.clone()))))
    }

    fn ident(&mut self, name: &str, pos: Pos) -> Result<Lin> {
        if let Some(k) = self.unknowns.iter().position(|u| u == name) {
            return Ok(Lin { jets: vec![(k, MultiIndex::zero(), FieldElement::one())], konst: FieldElement::zero() });
        }
        match self.field.var_index(name) {
            Some(v) => Ok(Lin::scalar(FieldElement::var(v))),
            None => Err(Error::UnknownIdentifier { name: name.into(), line: pos.line, col: pos.col }),
        }
    }

    fn jet(&mut self, name: &str, dirs: &[usize], pos: Pos) -> Result<Lin> {
        let k = self
            .unknowns
            .iter()
            .position(|u| u == name)
            .ok_or_else(|| Error::UnknownIdentifier { name: name.into(), line: pos.line, col: pos.col })?;
        if let Some(&d) = dirs.iter().find(|&&d| d > self.field.n()) {
            return Err(Error::Syntax { line: pos.line, col: pos.col, msg: format!("direction {d} exceeds n = {}", self.field.n()) });
        }
        let zero_based: Vec<usize> = dirs.iter().map(|d| d - 1).collect();
        Ok(Lin { jets: vec![(k, MultiIndex::from_dirs(&zero_based), FieldElement::one())], konst: FieldElement::zero() })
    }

    fn add(&mut self, mut a: Lin, b: Lin) -> Result<Lin> {
        a.jets.extend(b.jets);
        a.konst = &a.konst + &b.konst;
        Ok(a)
    }

    fn neg(&mut self, a: Lin) -> Result<Lin> {
        Ok(a.scale(&FieldElement::int(-1)))
    }

    fn mul(&mut self, a: Lin, b: Lin, pos: Pos) -> Result<Lin> {
        match (a.jets.is_empty(), b.jets.is_empty()) {
            (true, _) => Ok(b.scale(&a.konst)),
            (_, true) => Ok(a.scale(&b.konst)),
            _ => Err(Error::Syntax { line: pos.line, col: pos.col, msg: "product of two unknowns: equation is not linear".into() }),
        }
    }

    fn div(&mut self, a: Lin, b: Lin, pos: Pos) -> Result<Lin> {
        if !b.jets.is_empty() {
            return Err(Error::Syntax { line: pos.line, col: pos.col, msg: "division by an unknown".into() });
        }
        if b.konst.is_zero() {
            return Err(Error::Syntax { line: pos.line, col: pos.col, msg: "division by zero".into() });
        }
        Ok(a.scale(&b.konst.inv()?))
    }
}

/// Parse `lhs` or `lhs = rhs` into one operator row over `unknowns`.
pub fn parse_row_at(field: &DiffField, unknowns: &[String], text: &str, origin: Pos) -> Result<Vec<DiffOperator>> {
    let (lhs, rhs) = match text.find('=') {
        Some(k) => (&text[..k], Some((&text[k + 1..], k + 1))),
        None => (text, None),
    };
    let mut dom = LinDomain { field, unknowns };
    let mut v = expr::eval(&expr::parse_at(lhs, origin)?, &mut dom)?;
    if let Some((r, off)) = rhs {
        let w = expr::eval(&expr::parse_at(r, Pos { line: origin.line, col: origin.col + off })?, &mut dom)?;
        let w = dom.neg(w)?;
        v = dom.add(v, w)?;
    }
    if !v.konst.is_zero() {
        return Err(Error::Syntax { line: origin.line, col: origin.col, msg: "equation has a nonzero right-hand side; only homogeneous linear rows are accepted".into() });
    }
    let mut per: Vec<Vec<(MultiIndex, FieldElement)>> = vec![Vec::new(); unknowns.len()];
    for (k, m, c) in v.jets {
        per[k].push((m, c));
    }
    Ok(per.into_iter().map(DiffOperator::from_terms).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f2() -> Arc<DiffField> {
        Arc::new(DiffField::standard(2))
    }

    #[test]
    fn polynomial_multiples() {
        let f = f2();
        let u = vec!["u".to_string(), "v".to_string()];
        let row = parse_row_at(&f, &u, "-1/(x1)*u[2] + v[1] + 1/(x1)*v", Pos { line: 1, col: 1 }).unwrap();
        assert_eq!(render_row(&f, &polynomial_multiple(&row), &u), "u[2] - x1*v[1] - v");
        let row = parse_row_at(&f, &u, "u[1,1] + 2/(x1*x2)*u", Pos { line: 1, col: 1 }).unwrap();
        assert_eq!(render_row(&f, &polynomial_multiple(&row), &u), "1/2*x1*x2*u[1,1] + u");
    }

    #[test]
    fn leibniz_commutation() {
        let f = f2();
        let x1 = DiffOperator::scalar(f.coord(0));
        let p = DiffOperator::d(0).mul(&f, &x1).unwrap();
        let expect = DiffOperator::from_terms(vec![(MultiIndex::unit(0), f.coord(0)), (MultiIndex::zero(), FieldElement::one())]);
        assert_eq!(p, expect);
        let a = DiffOperator::d(0).add(&DiffOperator::d(1));
        let b = DiffOperator::d(0).sub(&DiffOperator::d(1));
        assert_eq!(a.mul(&f, &b).unwrap(), DiffOperator::dirs(&[0, 0]).sub(&DiffOperator::dirs(&[1, 1])));
    }

    #[test]
    fn adjoint_examples() {
        let f = Arc::new(DiffField::standard(3));
        assert_eq!(DiffOperator::d(0).adjoint(&f).unwrap(), DiffOperator::d(0).neg());
        let p = DiffOperator::term(MultiIndex::unit(2), f.coord(2));
        let expect = DiffOperator::from_terms(vec![(MultiIndex::unit(2), -&f.coord(2)), (MultiIndex::zero(), FieldElement::int(-1))]);
        assert_eq!(p.adjoint(&f).unwrap(), expect);
        let col = OperatorMatrix::from_rows(f2(), 1, vec![vec![DiffOperator::dirs(&[0, 1])], vec![DiffOperator::dirs(&[1, 1])]]);
        let ad = col.adjoint().unwrap();
        assert_eq!((ad.rows(), ad.cols()), (1, 2));
        assert_eq!(ad.row(0), &[DiffOperator::dirs(&[0, 1]), DiffOperator::dirs(&[1, 1])]);
        assert_eq!(ad.convention, Convention::ActsRightOnRows);
        assert_eq!(ad.adjoint().unwrap(), col);
    }

    #[test]
    fn elementary_cc_composes_to_zero() {
        let f = f2();
        let d = OperatorMatrix::from_rows(f.clone(), 1, vec![vec![DiffOperator::dirs(&[0, 1])], vec![DiffOperator::dirs(&[1, 1])]]);
        let cc = OperatorMatrix::from_rows(f, 2, vec![vec![DiffOperator::d(1).neg(), DiffOperator::d(0)]]);
        assert!(cc.mul(&d).unwrap().is_zero());
    }

    #[test]
    fn apply_gradient() {
        let f = f2();
        let grad = OperatorMatrix::from_rows(f.clone(), 1, vec![vec![DiffOperator::d(0)], vec![DiffOperator::d(1)]]);
        let out = grad.apply(&[f.parse("x1*x2").unwrap()]).unwrap();
        assert_eq!(out, vec![f.coord(1), f.coord(0)]);
    }

    #[test]
    fn row_parse_and_render() {
        let f = Arc::new(DiffField::standard(3));
        let u: Vec<String> = vec!["xi1".into(), "xi2".into(), "xi3".into()];
        let m = OperatorMatrix::parse_rows(f.clone(), &u, &["xi1[3] - x3*xi2[3] = 0", "xi1[2] - x3*xi2[2] + x3*(xi1[1] - x3*xi2[1]) - xi3"]).unwrap();
        assert_eq!(m.render_row(0), "xi1[3] - x3*xi2[3]");
        assert_eq!(m.render_row(1), "x3*xi1[1] + xi1[2] - x3^2*xi2[1] - x3*xi2[2] - xi3");
        let again = OperatorMatrix::parse_rows(f, &u, &[&m.render_row(0), &m.render_row(1)]).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn multi_index_enumeration() {
        let all = MultiIndex::all_of_len(3, 2);
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], MultiIndex::from_dirs(&[0, 0]));
        assert_eq!(all[5], MultiIndex::from_dirs(&[2, 2]));
        assert_eq!(MultiIndex::from_dirs(&[1, 2]).class(), Some(1));
    }
}

/// Constant invertible `U`, `P` with `U·a = b·P`, when the two operators have
/// constant coefficients and such matrices exist. Candidates are seeded
/// integer combinations of a basis of the linear solution space.
pub fn constant_equivalence(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<Option<(Vec<Vec<FieldElement>>, Vec<Vec<FieldElement>>)>> {
    use rand::{Rng, SeedableRng};
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Ok(None);
    }
    if !a.is_constant_coeff() || !b.is_constant_coeff() {
        return Err(Error::Invalid("constant equivalence needs constant coefficients".into()));
    }
    let (r, c) = (a.rows(), a.cols());
    let nu = r * r;
    let nvars = nu + c * c;
    let mut mus: Vec<MultiIndex> = Vec::new();
    for m in [a, b] {
        for e in &m.entries {
            for (mu, _) in e.terms() {
                if !mus.contains(mu) {
                    mus.push(*mu);
                }
            }
        }
    }
    let mut eqs = Vec::new();
    for i in 0..r {
        for j in 0..c {
            for mu in &mus {
                let mut v = vec![FieldElement::zero(); nvars];
                for k in 0..r {
                    v[i * r + k] = a.get(k, j).coeff(mu);
                }
                for k in 0..c {
                    v[nu + k * c + j] = -b.get(i, k).coeff(mu);
                }
                eqs.push(v);
            }
        }
    }
    let basis = crate::linalg::echelon(eqs, nvars)?.kernel();
    if basis.is_empty() {
        return Ok(None);
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x0e9a);
    for attempt in 0..24 {
        let mut x = vec![FieldElement::zero(); nvars];
        for v in &basis {
            let w = if attempt == 0 { 1 } else { rng.gen_range(-3i64..=3) };
            for (xi, vi) in x.iter_mut().zip(v) {
                *xi = &*xi + &(vi * &FieldElement::int(w));
            }
        }
        let u: Vec<Vec<FieldElement>> = (0..r).map(|i| x[i * r..(i + 1) * r].to_vec()).collect();
        let p: Vec<Vec<FieldElement>> = (0..c).map(|i| x[nu + i * c..nu + (i + 1) * c].to_vec()).collect();
        if !crate::linalg::determinant(&u)?.is_zero() && !crate::linalg::determinant(&p)?.is_zero() {
            return Ok(Some((u, p)));
        }
    }
    Ok(None)
}

/// The scalar `c` with `a = c·b` entry-wise, if one exists (`None` when
/// either row is zero or they are not proportional).
pub fn proportional(a: &[DiffOperator], b: &[DiffOperator]) -> Option<FieldElement> {
    if a.len() != b.len() {
        return None;
    }
    let (ja, jb) = (a.iter().position(|p| !p.is_zero())?, b.iter().position(|p| !p.is_zero())?);
    if ja != jb {
        return None;
    }
    let (m, ca) = a[ja].leading()?;
    let (mb, cb) = b[jb].leading()?;
    if m != mb {
        return None;
    }
    let c = ca.div(cb).ok()?;
    a.iter().zip(b).all(|(p, q)| *p == q.scale(&c)).then_some(c)
}

/// The row divided by one of its own coefficients, chosen so that every
/// coefficient becomes a polynomial; the row itself when no coefficient
/// works. Only used for display.
pub fn polynomial_multiple(row: &[DiffOperator]) -> Vec<DiffOperator> {
    let coeffs: Vec<&FieldElement> = row.iter().flat_map(|p| p.terms().iter().map(|(_, c)| c)).collect();
    if coeffs.iter().all(|c| c.is_polynomial()) {
        return row.to_vec();
    }
    let mut candidates: Vec<FieldElement> = coeffs.iter().filter_map(|c| c.inv().ok()).collect();
    let mut dens: Vec<FieldElement> = Vec::new();
    for c in &coeffs {
        let d = FieldElement::from_poly(c.denom());
        if !dens.contains(&d) {
            dens.push(d);
        }
    }
    candidates.push(dens.iter().fold(FieldElement::one(), |acc, d| &acc * d));
    for m in &candidates {
        if coeffs.iter().all(|x| (*x * m).is_polynomial()) {
            return row.iter().map(|p| p.scale(m)).collect();
        }
    }
    row.to_vec()
}
