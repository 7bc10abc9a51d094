//! Left Gröbner bases of submodules of `D^m`: normal forms, syzygies
//! (compatibility conditions), module comparison and differential rank.
//!
//! Module elements are stored as term lists keyed by a `u128` that encodes
//! the module order, so comparisons are single integer comparisons.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{DiffField, FieldElement};
use crate::ore::{DiffOperator, MultiIndex, OperatorMatrix, MAX_DIRS};

/// How terms in different components compare.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OrderKind {
    /// Position over term: the component decides first (component 0 largest).
    Pot,
    /// Term over position: the derivation monomial decides first.
    Top,
}

/// Module order: components are grouped in blocks (block 0 dominates every
/// later block); inside a block `kind` applies, with grevlex on derivation
/// exponents (`d₁ > … > dₙ`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ModuleOrder {
    pub kind: OrderKind,
    pub blocks: Vec<u8>,
}

impl ModuleOrder {
    pub fn pot(m: usize) -> Self {
        ModuleOrder { kind: OrderKind::Pot, blocks: vec![0; m] }
    }

    pub fn top(m: usize) -> Self {
        ModuleOrder { kind: OrderKind::Top, blocks: vec![0; m] }
    }

    /// Two blocks: the first `m` components eliminate the last `k`.
    pub fn elimination(m: usize, k: usize, kind: OrderKind) -> Self {
        let mut blocks = vec![0; m];
        blocks.extend(std::iter::repeat(1).take(k));
        ModuleOrder { kind, blocks }
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    /// Larger key means larger term.
    pub fn key(&self, comp: usize, mi: &MultiIndex) -> u128 {
        let block = (255 - self.blocks[comp] as u128) << 112;
        let cs = 65535 - comp as u128;
        let deg = mi.len() as u128;
        let mut rev: u128 = 0;
        for i in (0..MAX_DIRS).rev() {
            rev = (rev << 8) | (255 - mi.get(i) as u128);
        }
        match self.kind {
            OrderKind::Pot => block | (cs << 96) | (deg << 64) | rev,
            OrderKind::Top => block | (deg << 96) | (rev << 16) | cs,
        }
    }
}

/// Budget guarding basis computations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    /// Largest derivation order allowed in a critical pair.
    pub max_degree: usize,
    /// Largest number of basis elements.
    pub max_basis: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_degree: 40, max_basis: 20_000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Term {
    key: u128,
    comp: u16,
    mi: MultiIndex,
    c: FieldElement,
}

/// A row of `D^m` in sparse form, terms descending.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ModRow {
    terms: Vec<Term>,
}

impl ModRow {
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn lead(&self) -> &Term {
        &self.terms[0]
    }

    pub fn leading_component(&self) -> Option<usize> {
        self.terms.first().map(|t| t.comp as usize)
    }

    pub fn leading_index(&self) -> Option<MultiIndex> {
        self.terms.first().map(|t| t.mi)
    }

    fn is_constant_coeff(&self) -> bool {
        self.terms.iter().all(|t| t.c.is_constant())
    }

    pub fn from_ops(row: &[DiffOperator], order: &ModuleOrder, offset: usize) -> ModRow {
        let mut terms = Vec::new();
        for (j, p) in row.iter().enumerate() {
            let comp = j + offset;
            for (mi, c) in p.terms() {
                terms.push(Term { key: order.key(comp, mi), comp: comp as u16, mi: *mi, c: c.clone() });
            }
        }
        terms.sort_by(|a, b| b.key.cmp(&a.key));
        ModRow { terms }
    }

    /// Components `[from, to)` as operators indexed from `from`.
    pub fn to_ops(&self, from: usize, to: usize) -> Vec<DiffOperator> {
        let mut per: Vec<Vec<(MultiIndex, FieldElement)>> = vec![Vec::new(); to - from];
        for t in &self.terms {
            let c = t.comp as usize;
            if c >= from && c < to {
                per[c - from].push((t.mi, t.c.clone()));
            }
        }
        per.into_iter().map(DiffOperator::from_terms).collect()
    }

    fn has_component_below(&self, bound: usize) -> bool {
        self.terms.iter().any(|t| (t.comp as usize) < bound)
    }

    fn scale(&self, a: &FieldElement) -> ModRow {
        if a.is_one() {
            return self.clone();
        }
        ModRow { terms: self.terms.iter().map(|t| Term { c: a * &t.c, ..t.clone() }).collect() }
    }

    fn monic(&self) -> Result<ModRow> {
        match self.terms.first() {
            None => Ok(self.clone()),
            Some(t) if t.c.is_one() => Ok(self.clone()),
            Some(t) => Ok(self.scale(&t.c.inv()?)),
        }
    }

    /// `self - a * other`.
    fn sub_scaled(&self, a: &FieldElement, other: &ModRow) -> ModRow {
        let (x, y) = (&self.terms, &other.terms);
        let mut out = Vec::with_capacity(x.len() + y.len());
        let (mut i, mut j) = (0, 0);
        while i < x.len() && j < y.len() {
            if x[i].key > y[j].key {
                out.push(x[i].clone());
                i += 1;
            } else if x[i].key < y[j].key {
                out.push(Term { c: -&(a * &y[j].c), ..y[j].clone() });
                j += 1;
            } else {
                let c = &x[i].c - &(a * &y[j].c);
                if !c.is_zero() {
                    out.push(Term { c, ..x[i].clone() });
                }
                i += 1;
                j += 1;
            }
        }
        out.extend(x[i..].iter().cloned());
        out.extend(y[j..].iter().map(|t| Term { c: -&(a * &t.c), ..t.clone() }));
        ModRow { terms: out }
    }

    /// `d_λ ∘ self`.
    fn shift(&self, field: &DiffField, order: &ModuleOrder, lambda: &MultiIndex) -> Result<ModRow> {
        if lambda.is_zero() {
            return Ok(self.clone());
        }
        if self.is_constant_coeff() {
            let terms = self
                .terms
                .iter()
                .map(|t| {
                    let mi = t.mi.add(lambda);
                    Term { key: order.key(t.comp as usize, &mi), comp: t.comp, mi, c: t.c.clone() }
                })
                .collect();
            return Ok(ModRow { terms });
        }
        let mut cur: BTreeMap<u128, Term> = self.terms.iter().map(|t| (t.key, t.clone())).collect();
        for i in lambda.dirs() {
            let mut next: BTreeMap<u128, Term> = BTreeMap::new();
            let mut put = |t: Term| match next.get_mut(&t.key) {
                Some(x) => x.c = &x.c + &t.c,
                None => {
                    next.insert(t.key, t);
                }
            };
            for t in cur.values() {
                let mi = t.mi.plus(i);
                put(Term { key: order.key(t.comp as usize, &mi), comp: t.comp, mi, c: t.c.clone() });
                if !t.c.is_constant() {
                    let dc = field.derive(&t.c, i)?;
                    if !dc.is_zero() {
                        put(Term { c: dc, ..t.clone() });
                    }
                }
            }
            cur = next.into_iter().filter(|(_, t)| !t.c.is_zero()).collect();
        }
        Ok(ModRow { terms: cur.into_values().rev().collect() })
    }
}

/// Incremental Buchberger engine for left submodules of `D^m`.
#[derive(Clone)]
pub struct Engine {
    field: Arc<DiffField>,
    order: ModuleOrder,
    budget: Budget,
    basis: Vec<ModRow>,
    by_comp: Vec<Vec<usize>>,
    pending: BTreeSet<(u128, usize, usize)>,
    max_degree_seen: usize,
}

impl Engine {
    pub fn new(field: Arc<DiffField>, order: ModuleOrder, budget: Budget) -> Self {
        let m = order.len();
        Engine { field, order, budget, basis: Vec::new(), by_comp: vec![Vec::new(); m], pending: BTreeSet::new(), max_degree_seen: 0 }
    }

    pub fn order(&self) -> &ModuleOrder {
        &self.order
    }

    /// Highest derivation order reached by a processed critical pair.
    pub fn degree_reached(&self) -> usize {
        self.max_degree_seen
    }

    fn find_reducer(&self, t: &Term) -> Option<usize> {
        self.by_comp[t.comp as usize].iter().copied().find(|&g| self.basis[g].lead().mi.divides(&t.mi))
    }

    /// Reduce the leading term until it is irreducible (or zero).
    fn top_reduce(&self, mut h: ModRow) -> Result<ModRow> {
        while let Some(t) = h.terms.first() {
            let Some(g) = self.find_reducer(t) else { break };
            let lam = t.mi.sub(&self.basis[g].lead().mi);
            let a = t.c.clone();
            let sh = self.basis[g].shift(&self.field, &self.order, &lam)?;
            h = h.sub_scaled(&a, &sh);
        }
        Ok(h)
    }

    /// Full normal form: no term divisible by a leading term.
    pub fn normal_form(&self, h: &ModRow) -> Result<ModRow> {
        let mut done: Vec<Term> = Vec::new();
        let mut rest = h.clone();
        loop {
            rest = self.top_reduce(rest)?;
            if rest.is_zero() {
                break;
            }
            done.push(rest.terms.remove(0));
        }
        Ok(ModRow { terms: done })
    }

    /// Add a generator (reduced against the current basis first).
    pub fn insert(&mut self, row: ModRow) -> Result<bool> {
        let h = self.top_reduce(row)?;
        if h.is_zero() {
            return Ok(false);
        }
        self.push(h.monic()?)?;
        Ok(true)
    }

    fn push(&mut self, g: ModRow) -> Result<()> {
        if self.basis.len() >= self.budget.max_basis {
            return Err(Error::ResourceBound(format!("basis exceeds {} elements", self.budget.max_basis)));
        }
        let k = self.basis.len();
        let (c, mi) = (g.lead().comp as usize, g.lead().mi);
        for &i in &self.by_comp[c] {
            let l = self.basis[i].lead().mi.lcm(&mi);
            self.pending.insert((self.order.key(c, &l), i, k));
        }
        self.by_comp[c].push(k);
        self.basis.push(g);
        Ok(())
    }

    /// Chain criterion: some other element's leading term divides the lcm and
    /// both companion pairs are already treated.
    fn chain_skip(&self, i: usize, j: usize, l: &MultiIndex, c: usize) -> bool {
        for &k in &self.by_comp[c] {
            if k == i || k == j || !self.basis[k].lead().mi.divides(l) {
                continue;
            }
            let pend = |a: usize, b: usize| {
                let (a, b) = if a < b { (a, b) } else { (b, a) };
                let lm = self.basis[a].lead().mi.lcm(&self.basis[b].lead().mi);
                self.pending.contains(&(self.order.key(c, &lm), a, b))
            };
            if !pend(i, k) && !pend(j, k) {
                return true;
            }
        }
        false
    }

    /// Process all critical pairs.
    pub fn complete(&mut self) -> Result<()> {
        while let Some(&(key, i, j)) = self.pending.iter().next() {
            self.pending.remove(&(key, i, j));
            let (gi, gj) = (&self.basis[i], &self.basis[j]);
            let c = gi.lead().comp as usize;
            let (mi, mj) = (gi.lead().mi, gj.lead().mi);
            let l = mi.lcm(&mj);
            if l.len() > self.budget.max_degree {
                return Err(Error::ResourceBound(format!("critical pair of order {} exceeds the degree budget {}", l.len(), self.budget.max_degree)));
            }
            self.max_degree_seen = self.max_degree_seen.max(l.len());
            if self.chain_skip(i, j, &l, c) {
                continue;
            }
            let si = gi.shift(&self.field, &self.order, &l.sub(&mi))?;
            let sj = gj.shift(&self.field, &self.order, &l.sub(&mj))?;
            let s = si.sub_scaled(&FieldElement::one(), &sj);
            let h = self.top_reduce(s)?;
            if !h.is_zero() {
                self.push(h.monic()?)?;
            }
        }
        Ok(())
    }

    /// Reduced basis: minimal leading terms, tails fully reduced, monic,
    /// sorted ascending by leading term.
    pub fn reduced(&self) -> Result<Vec<ModRow>> {
        let mut keep: Vec<usize> = Vec::new();
        for (k, g) in self.basis.iter().enumerate() {
            let lt = g.lead();
            let redundant = self.basis.iter().enumerate().any(|(o, h)| {
                o != k && h.lead().comp == lt.comp && h.lead().mi.divides(&lt.mi) && (h.lead().mi != lt.mi || o < k)
            });
            if !redundant {
                keep.push(k);
            }
        }
        let mut sub = Engine::new(self.field.clone(), self.order.clone(), self.budget);
        for &k in &keep {
            let g = &self.basis[k];
            let c = g.lead().comp as usize;
            sub.by_comp[c].push(sub.basis.len());
            sub.basis.push(g.clone());
        }
        let mut out = Vec::with_capacity(sub.basis.len());
        for idx in 0..sub.basis.len() {
            let g = &sub.basis[idx];
            let mut others = sub.clone();
            let c = g.lead().comp as usize;
            others.by_comp[c].retain(|&x| x != idx);
            let head = ModRow { terms: vec![g.lead().clone()] };
            let tail = ModRow { terms: g.terms[1..].to_vec() };
            let tail = others.normal_form(&tail)?;
            let mut terms = head.terms;
            terms.extend(tail.terms);
            out.push(ModRow { terms }.monic()?);
        }
        out.sort_by(|a, b| a.lead().key.cmp(&b.lead().key));
        Ok(out)
    }

    pub fn basis_len(&self) -> usize {
        self.basis.len()
    }
}

/// Reduced left basis of a row module.
#[derive(Clone)]
pub struct LeftBasis {
    pub field: Arc<DiffField>,
    pub cols: usize,
    pub col_labels: Vec<String>,
    pub order: ModuleOrder,
    pub reduced: bool,
    rows: Vec<ModRow>,
    engine: Engine,
    /// Indices of input rows that were identically zero and dropped.
    pub dropped_zero_rows: Vec<usize>,
}

impl LeftBasis {
    /// Generators as a matrix (one row per basis element).
    pub fn generators(&self) -> OperatorMatrix {
        let rows = self.rows.iter().map(|r| r.to_ops(0, self.cols)).collect();
        let mut m = OperatorMatrix::from_rows(self.field.clone(), self.cols, rows);
        m.col_labels = self.col_labels.clone();
        m.row_labels = (1..=self.rows.len()).map(|i| format!("g{i}")).collect();
        m
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Leading (component, multi-index) of each generator.
    pub fn leading_terms(&self) -> Vec<(usize, MultiIndex)> {
        self.rows.iter().map(|r| (r.lead().comp as usize, r.lead().mi)).collect()
    }

    /// Normal form of one row given as operators.
    pub fn normal_form_row(&self, row: &[DiffOperator]) -> Result<Vec<DiffOperator>> {
        if row.len() != self.cols {
            return Err(Error::ShapeMismatch(format!("row of length {} against {} columns", row.len(), self.cols)));
        }
        let r = ModRow::from_ops(row, &self.order, 0);
        Ok(self.engine.normal_form(&r)?.to_ops(0, self.cols))
    }

    pub fn contains_row(&self, row: &[DiffOperator]) -> Result<bool> {
        Ok(self.normal_form_row(row)?.iter().all(|p| p.is_zero()))
    }

    /// Components carrying no leading term: the free unknowns.
    pub fn free_components(&self) -> Vec<usize> {
        let mut used = vec![false; self.cols];
        for r in &self.rows {
            used[r.lead().comp as usize] = true;
        }
        (0..self.cols).filter(|&c| !used[c]).collect()
    }

    pub fn degree_reached(&self) -> usize {
        self.engine.degree_reached()
    }
}

fn build_engine(field: &Arc<DiffField>, rows: &[Vec<DiffOperator>], order: &ModuleOrder, budget: Budget) -> Result<Engine> {
    let mut e = Engine::new(field.clone(), order.clone(), budget);
    let mut sorted: Vec<ModRow> = rows.iter().map(|r| ModRow::from_ops(r, order, 0)).filter(|r| !r.is_zero()).collect();
    sorted.sort_by(|a, b| a.lead().key.cmp(&b.lead().key));
    for r in sorted {
        e.insert(r)?;
    }
    e.complete()?;
    Ok(e)
}

/// Reduced left basis of the row module of `m` under `order`.
pub fn groebner_with(m: &OperatorMatrix, order: &ModuleOrder, budget: Budget) -> Result<LeftBasis> {
    if order.len() != m.cols() {
        return Err(Error::ShapeMismatch("order does not match the column count".into()));
    }
    let dropped: Vec<usize> = (0..m.rows()).filter(|&i| m.row(i).iter().all(|p| p.is_zero())).collect();
    let e = build_engine(m.field(), &m.row_vecs(), order, budget)?;
    let rows = e.reduced()?;
    let mut e2 = Engine::new(m.field().clone(), order.clone(), budget);
    for r in &rows {
        let c = r.lead().comp as usize;
        e2.by_comp[c].push(e2.basis.len());
        e2.basis.push(r.clone());
    }
    e2.max_degree_seen = e.max_degree_seen;
    Ok(LeftBasis {
        field: m.field().clone(),
        cols: m.cols(),
        col_labels: m.col_labels.clone(),
        order: order.clone(),
        reduced: true,
        rows,
        engine: e2,
        dropped_zero_rows: dropped,
    })
}

/// Reduced left basis under the default position-over-term order.
pub fn groebner(m: &OperatorMatrix) -> Result<LeftBasis> {
    groebner_with(m, &ModuleOrder::pot(m.cols()), Budget::default())
}

/// Normal form of a 1×m row against a basis.
pub fn normal_form(row: &OperatorMatrix, b: &LeftBasis) -> Result<OperatorMatrix> {
    if row.rows() != 1 {
        return Err(Error::ShapeMismatch("normal_form expects a single row".into()));
    }
    let nf = b.normal_form_row(row.row(0))?;
    let mut out = OperatorMatrix::from_rows(row.field().clone(), row.cols(), vec![nf]);
    out.col_labels = row.col_labels.clone();
    out.row_labels = row.row_labels.clone();
    out.convention = row.convention;
    Ok(out)
}

/// Elements of the module generated by the rows `main[i] ⊕ extra[i]` whose
/// `main` part vanishes, returned as their `extra` parts.
pub fn eliminate(
    field: &Arc<DiffField>,
    main: &[Vec<DiffOperator>],
    extra: &[Vec<DiffOperator>],
    kind: OrderKind,
    budget: Budget,
) -> Result<(Vec<Vec<DiffOperator>>, usize)> {
    let m = main.first().map(|r| r.len()).unwrap_or(0);
    let k = extra.first().map(|r| r.len()).unwrap_or(0);
    let order = ModuleOrder::elimination(m, k, kind);
    let rows: Vec<Vec<DiffOperator>> = main.iter().zip(extra).map(|(a, b)| a.iter().chain(b.iter()).cloned().collect()).collect();
    let e = build_engine(field, &rows, &order, budget)?;
    let out = e.reduced()?.into_iter().filter(|r| !r.has_component_below(m)).map(|r| r.to_ops(m, m + k)).collect();
    Ok((out, e.degree_reached()))
}

/// Keep, in order, each candidate not already in the module generated by the
/// previously kept ones.
pub fn minimalize(field: &Arc<DiffField>, cols: usize, mut cands: Vec<Vec<DiffOperator>>, budget: Budget) -> Result<Vec<Vec<DiffOperator>>> {
    let order = ModuleOrder::pot(cols);
    let row_order = |r: &Vec<DiffOperator>| r.iter().map(|p| p.order()).max().unwrap_or(-1);
    let lead_key = |r: &Vec<DiffOperator>| ModRow::from_ops(r, &order, 0).terms.first().map(|t| t.key).unwrap_or(0);
    let nterms = |r: &Vec<DiffOperator>| r.iter().map(|p| p.terms().len()).sum::<usize>();
    cands.sort_by(|a, b| (row_order(a), lead_key(a), nterms(a)).cmp(&(row_order(b), lead_key(b), nterms(b))));
    let mut e = Engine::new(field.clone(), order.clone(), budget);
    let mut kept = Vec::new();
    for c in cands {
        let r = ModRow::from_ops(&c, &order, 0);
        if r.is_zero() || e.normal_form(&r)?.is_zero() {
            continue;
        }
        e.insert(r)?;
        e.complete()?;
        kept.push(c);
    }
    Ok(kept)
}

/// Certificate attached to a syzygy computation.
#[derive(Clone, Debug, PartialEq)]
pub struct SyzygyCertificate {
    /// `cc · M = 0` was checked by exact composition.
    pub composition_verified: bool,
    /// Highest derivation order reached by the elimination basis; the basis
    /// computation terminated, so the generating set is complete.
    pub degree_reached: usize,
    /// Number of syzygy candidates before minimalization.
    pub candidates: usize,
    /// Input rows that were identically zero.
    pub zero_rows: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct SyzygyResult {
    pub cc_matrix: OperatorMatrix,
    pub certificate: SyzygyCertificate,
}

/// Generating compatibility conditions of the rows of `m`: all `N` with
/// `N · m = 0`, minimalized.
pub fn syzygies(m: &OperatorMatrix) -> Result<SyzygyResult> {
    syzygies_with(m, Budget::default())
}

pub fn syzygies_with(m: &OperatorMatrix, budget: Budget) -> Result<SyzygyResult> {
    let r = m.rows();
    let field = m.field();
    let zero_rows: Vec<usize> = (0..r).filter(|&i| m.row(i).iter().all(|p| p.is_zero())).collect();
    let ident: Vec<Vec<DiffOperator>> =
        (0..r).map(|i| (0..r).map(|j| if i == j { DiffOperator::one() } else { DiffOperator::zero() }).collect()).collect();
    let (cands, degree) = if m.cols() == 0 || m.is_zero() {
        (ident.clone(), 0)
    } else {
        eliminate(field, &m.row_vecs(), &ident, OrderKind::Top, budget)?
    };
    let ncand = cands.len();
    let kept = minimalize(field, r, cands, budget)?;
    let mut cc = OperatorMatrix::from_rows(field.clone(), r, kept);
    cc.col_labels = m.row_labels.clone();
    cc.row_labels = (1..=cc.rows()).map(|i| format!("cc{i}")).collect();
    cc.convention = m.convention;
    let prod = cc.mul(m)?;
    if !prod.is_zero() {
        return Err(Error::Invalid("internal error: syzygy does not compose to zero".into()));
    }
    Ok(SyzygyResult {
        cc_matrix: cc,
        certificate: SyzygyCertificate { composition_verified: true, degree_reached: degree, candidates: ncand, zero_rows },
    })
}

/// Outcome of comparing two row modules in the same free module.
#[derive(Clone, Debug, PartialEq)]
pub enum ModuleComparison {
    Equal,
    /// `A ⊊ B`; witnesses are rows of `B` outside `A`.
    ASubsetB { witnesses: Vec<usize> },
    /// `B ⊊ A`; witnesses are rows of `A` outside `B`.
    BSubsetA { witnesses: Vec<usize> },
    Incomparable { a_outside_b: Vec<usize>, b_outside_a: Vec<usize> },
}

fn outside(rows: &OperatorMatrix, b: &LeftBasis) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for i in 0..rows.rows() {
        if !b.contains_row(rows.row(i))? {
            out.push(i);
        }
    }
    Ok(out)
}

pub fn module_compare(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<ModuleComparison> {
    if a.cols() != b.cols() {
        return Err(Error::ShapeMismatch(format!("{} vs {} columns", a.cols(), b.cols())));
    }
    let ga = groebner(a)?;
    let gb = groebner(b)?;
    let b_out = outside(b, &ga)?;
    let a_out = outside(a, &gb)?;
    Ok(match (a_out.is_empty(), b_out.is_empty()) {
        (true, true) => ModuleComparison::Equal,
        (true, false) => ModuleComparison::ASubsetB { witnesses: b_out },
        (false, true) => ModuleComparison::BSubsetA { witnesses: a_out },
        (false, false) => ModuleComparison::Incomparable { a_outside_b: a_out, b_outside_a: b_out },
    })
}

/// Differential rank of the row module: columns minus free unknowns.
pub fn diff_rank(m: &OperatorMatrix) -> Result<usize> {
    if m.is_zero() {
        return Ok(0);
    }
    let g = groebner(m)?;
    Ok(m.cols() - g.free_components().len())
}
