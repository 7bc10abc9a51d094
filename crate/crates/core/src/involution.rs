//! Symbol calculus of linear systems by exact linear algebra over K.
//!
//! A system of order q is stored through its generating equations; the jet
//! space description of R_{q+r} is always "every prolongation of every
//! generator up to order q+r", so lower-order equations take part at each level.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::{syzygies_with, Budget};
use crate::field::{DiffField, FieldElement, Rat};
use crate::linalg::{self, Echelon};
use crate::ore::{binom, DiffOperator, MultiIndex, OperatorMatrix};
use crate::{Error, Result};

#[derive(Clone)]
pub struct LinearSystem {
    pub field: Arc<DiffField>,
    pub unknowns: Vec<String>,
    pub q: usize,
    pub equations: OperatorMatrix,
    /// Field variables whose vanishing loci make a rank non-generic
    /// (the jets of a generic point after linearization).
    pub jet_generators: BTreeSet<usize>,
}

impl std::fmt::Debug for LinearSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "LinearSystem(q={}) {:?}", self.q, self.equations)
    }
}

impl LinearSystem {
    pub fn new(equations: OperatorMatrix) -> Self {
        let q = equations.order().max(0) as usize;
        LinearSystem {
            field: equations.field().clone(),
            unknowns: equations.col_labels.clone(),
            q,
            equations,
            jet_generators: BTreeSet::new(),
        }
    }

    pub fn with_order(mut self, q: usize) -> Result<Self> {
        if (q as i32) < self.equations.order() {
            return Err(Error::Invalid(format!("order {q} is below the order of an equation")));
        }
        self.q = q;
        Ok(self)
    }

    pub fn with_jet_generators(mut self, gens: impl IntoIterator<Item = usize>) -> Self {
        self.jet_generators = gens.into_iter().collect();
        self
    }

    pub fn n(&self) -> usize {
        self.field.n()
    }

    pub fn m(&self) -> usize {
        self.equations.cols()
    }

    /// The same system with extra generating equations.
    pub fn with_rows(&self, rows: Vec<Vec<DiffOperator>>) -> Result<Self> {
        let k = rows.len();
        let mut labels = self.equations.row_labels.clone();
        let start = labels.len();
        labels.extend((0..k).map(|i| format!("r{}", start + i + 1)));
        let extra = OperatorMatrix::from_rows(self.field.clone(), self.m(), rows);
        let eqs = self.equations.vstack(&extra)?.with_labels(labels, self.unknowns.clone());
        let mut out = self.clone();
        out.q = out.q.max(eqs.order().max(0) as usize);
        out.equations = eqs;
        Ok(out)
    }

    fn generators(&self) -> Vec<(usize, usize)> {
        (0..self.equations.rows())
            .filter_map(|i| {
                let o = self.equations.row_order(i);
                (o >= 0).then_some((i, o as usize))
            })
            .collect()
    }
}

/// Column layout of `J_L(E)`: the top level first, then lower levels.
struct JetLayout {
    m: usize,
    offsets: Vec<usize>,
    pos: Vec<HashMap<MultiIndex, usize>>,
    idx: Vec<Vec<MultiIndex>>,
    total: usize,
}

impl JetLayout {
    fn new(n: usize, m: usize, top: usize) -> Self {
        let mut offsets = vec![0; top + 1];
        let mut pos = vec![HashMap::new(); top + 1];
        let mut idx = vec![Vec::new(); top + 1];
        let mut at = 0;
        for l in (0..=top).rev() {
            offsets[l] = at;
            idx[l] = MultiIndex::all_of_len(n, l);
            for (p, mu) in idx[l].iter().enumerate() {
                pos[l].insert(*mu, p);
            }
            at += idx[l].len() * m;
        }
        JetLayout { m, offsets, pos, idx, total: at }
    }

    fn col(&self, k: usize, mu: &MultiIndex) -> usize {
        let l = mu.len();
        self.offsets[l] + self.pos[l][mu] * self.m + k
    }

    fn decode(&self, c: usize) -> (usize, MultiIndex) {
        let l = (0..self.offsets.len()).find(|&l| c >= self.offsets[l] && c < self.offsets[l] + self.idx[l].len() * self.m);
        let l = l.expect("column in range");
        let r = c - self.offsets[l];
        (r % self.m, self.idx[l][r / self.m])
    }
}

/// Memoized prolongations `d_ν Φ_τ`.
struct Prolonger<'a> {
    sys: &'a LinearSystem,
    cache: HashMap<(usize, MultiIndex), Vec<DiffOperator>>,
}

impl<'a> Prolonger<'a> {
    fn new(sys: &'a LinearSystem) -> Self {
        Prolonger { sys, cache: HashMap::new() }
    }

    fn get(&mut self, eq: usize, nu: MultiIndex) -> Result<Vec<DiffOperator>> {
        if nu.is_zero() {
            return Ok(self.sys.equations.row(eq).to_vec());
        }
        if let Some(r) = self.cache.get(&(eq, nu)) {
            return Ok(r.clone());
        }
        let i = (0..self.sys.n()).rev().find(|&i| nu.get(i) > 0).expect("nonzero index");
        let parent = self.get(eq, nu.sub(&MultiIndex::unit(i)))?;
        let row = parent.iter().map(|p| p.d_left(&self.sys.field, i)).collect::<Result<Vec<_>>>()?;
        self.cache.insert((eq, nu), row.clone());
        Ok(row)
    }

    /// All prolongations up to order `l`, as rows over `J_l(E)`.
    fn jet_rows(&mut self, l: usize, layout: &JetLayout) -> Result<Vec<Vec<FieldElement>>> {
        let n = self.sys.n();
        let mut out = Vec::new();
        for (eq, o) in self.sys.generators() {
            if o > l {
                continue;
            }
            for len in 0..=(l - o) {
                for nu in MultiIndex::all_of_len(n, len) {
                    let row = self.get(eq, nu)?;
                    let mut v = vec![FieldElement::zero(); layout.total];
                    for (k, op) in row.iter().enumerate() {
                        for (mu, c) in op.terms() {
                            v[layout.col(k, mu)] = c.clone();
                        }
                    }
                    out.push(v);
                }
            }
        }
        Ok(out)
    }
}

/// Symbol rows at one level, columns `(unknown, μ)` with `|μ| = level`.
#[derive(Debug, Clone)]
pub struct SymbolMatrix {
    pub level: usize,
    pub n: usize,
    pub m: usize,
    pub cols: Vec<(usize, MultiIndex)>,
    pub rows: Vec<Vec<FieldElement>>,
}

impl SymbolMatrix {
    pub fn echelon(&self) -> Result<Echelon> {
        linalg::echelon(self.rows.clone(), self.cols.len())
    }

    /// `dim g_level`.
    pub fn dim(&self) -> Result<usize> {
        Ok(self.cols.len() - self.echelon()?.rank())
    }

    /// Equation counts per class (index 0 is class 1) of the solved form in
    /// which the highest classes are eliminated first.
    pub fn class_counts(&self) -> Result<(Vec<usize>, Echelon)> {
        let mut order: Vec<usize> = (0..self.cols.len()).collect();
        order.sort_by_key(|&c| std::cmp::Reverse(self.cols[c].1.class().unwrap_or(0)));
        let e = linalg::echelon_ordered(self.rows.clone(), self.cols.len(), &order)?;
        let mut betas = vec![0; self.n];
        for &p in &e.pivots {
            betas[self.cols[p].1.class().unwrap_or(0)] += 1;
        }
        Ok((betas, e))
    }
}

fn symbol_cols(n: usize, m: usize, level: usize) -> Vec<(usize, MultiIndex)> {
    let mut cols = Vec::new();
    for mu in MultiIndex::all_of_len(n, level) {
        for k in 0..m {
            cols.push((k, mu));
        }
    }
    cols
}

/// Homogeneous polynomial in the covector, as exponent → coefficient.
type Hom = HashMap<MultiIndex, BigInt>;

fn hom_mul(a: &Hom, b: &Hom) -> Hom {
    let mut out = Hom::new();
    for (ma, ca) in a {
        for (mb, cb) in b {
            *out.entry(ma.add(mb)).or_default() += ca * cb;
        }
    }
    out.retain(|_, c| *c != BigInt::from(0));
    out
}

/// `χ^μ` after substituting `χ_i → Σ_j t[i][j] χ_j`.
fn transform_monomial(mu: &MultiIndex, t: &[Vec<i64>], n: usize) -> Hom {
    let mut acc: Hom = [(MultiIndex::zero(), BigInt::from(1))].into_iter().collect();
    for i in 0..n {
        let lin: Hom = (0..n).filter(|&j| t[i][j] != 0).map(|j| (MultiIndex::unit(j), BigInt::from(t[i][j]))).collect();
        for _ in 0..mu.get(i) {
            acc = hom_mul(&acc, &lin);
        }
    }
    acc
}

/// Principal parts at `level`, optionally after a linear change of the covector.
fn symbol_at(sys: &LinearSystem, level: usize, t: Option<&[Vec<i64>]>) -> SymbolMatrix {
    let (n, m) = (sys.n(), sys.m());
    let cols = symbol_cols(n, m, level);
    let index: HashMap<(usize, MultiIndex), usize> = cols.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let mut rows = Vec::new();
    for (eq, o) in sys.generators() {
        if o > level {
            continue;
        }
        let mut top: Vec<(usize, MultiIndex, FieldElement)> = Vec::new();
        for k in 0..m {
            for (mu, c) in sys.equations.get(eq, k).terms() {
                if mu.len() != o {
                    continue;
                }
                match t {
                    None => top.push((k, *mu, c.clone())),
                    Some(t) => {
                        for (nu, z) in transform_monomial(mu, t, n) {
                            let zc = FieldElement::Rat(Rat::from_integer(z));
                            top.push((k, nu, c * &zc));
                        }
                    }
                }
            }
        }
        for nu in MultiIndex::all_of_len(n, level - o) {
            let mut v = vec![FieldElement::zero(); cols.len()];
            for (k, mu, c) in &top {
                let j = index[&(*k, mu.add(&nu))];
                v[j] = &v[j] + c;
            }
            if v.iter().any(|x| !x.is_zero()) {
                rows.push(v);
            }
        }
    }
    SymbolMatrix { level, n, m, cols, rows }
}

/// Symbol of `R_{q+r}`: principal parts of all prolongations at level `q+r`.
pub fn symbol(sys: &LinearSystem, r: usize) -> Result<SymbolMatrix> {
    Ok(symbol_at(sys, sys.q + r, None))
}

// ---------------------------------------------------------------- δ-complex

/// Basis of `∧^s T* ⊗ S_level T* ⊗ E`.
struct FormSpace {
    m: usize,
    masks: Vec<u8>,
    mpos: HashMap<u8, usize>,
    syms: Vec<MultiIndex>,
    spos: HashMap<MultiIndex, usize>,
}

impl FormSpace {
    fn new(n: usize, m: usize, s: usize, level: i64) -> Self {
        let masks: Vec<u8> = (0u16..(1 << n)).filter(|x| x.count_ones() as usize == s).map(|x| x as u8).collect();
        let syms = if level < 0 { Vec::new() } else { MultiIndex::all_of_len(n, level as usize) };
        FormSpace {
            m,
            mpos: masks.iter().enumerate().map(|(i, &x)| (x, i)).collect(),
            masks,
            spos: syms.iter().enumerate().map(|(i, &x)| (x, i)).collect(),
            syms,
        }
    }

    fn dim(&self) -> usize {
        self.masks.len() * self.syms.len() * self.m
    }

    fn index(&self, mask: u8, mu: &MultiIndex, k: usize) -> usize {
        (self.mpos[&mask] * self.syms.len() + self.spos[mu]) * self.m + k
    }

    fn decode(&self, i: usize) -> (u8, MultiIndex, usize) {
        let k = i % self.m;
        let r = i / self.m;
        (self.masks[r / self.syms.len()], self.syms[r % self.syms.len()], k)
    }
}

/// `(δω)_ν = Σ_i dx^i ∧ ω_{ν+1_i}`.
fn delta(n: usize, src: &FormSpace, tgt: &FormSpace, v: &[FieldElement]) -> Vec<FieldElement> {
    let mut out = vec![FieldElement::zero(); tgt.dim()];
    for (idx, c) in v.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let (mask, mu, k) = src.decode(idx);
        for i in 0..n {
            if mu.get(i) == 0 || mask & (1 << i) != 0 {
                continue;
            }
            let sign = (mask & ((1u8 << i) - 1)).count_ones() % 2 == 1;
            let j = tgt.index(mask | (1 << i), &mu.sub(&MultiIndex::unit(i)), k);
            out[j] = if sign { &out[j] - c } else { &out[j] + c };
        }
    }
    out
}

/// Kernel bases of the symbol at each level, in a fixed coordinate system.
struct Ladder<'a> {
    sys: &'a LinearSystem,
    g: HashMap<usize, (SymbolMatrix, Vec<Vec<FieldElement>>)>,
    forced: Vec<FieldElement>,
}

impl<'a> Ladder<'a> {
    fn new(sys: &'a LinearSystem) -> Self {
        Ladder { sys, g: HashMap::new(), forced: Vec::new() }
    }

    fn level(&mut self, l: usize) -> Result<&(SymbolMatrix, Vec<Vec<FieldElement>>)> {
        if !self.g.contains_key(&l) {
            let sm = symbol_at(self.sys, l, None);
            let e = sm.echelon()?;
            self.forced.extend(e.forced.iter().cloned());
            let k = e.kernel();
            self.g.insert(l, (sm, k));
        }
        Ok(&self.g[&l])
    }

    fn dim(&mut self, l: usize) -> Result<usize> {
        Ok(self.level(l)?.1.len())
    }

    /// Rank of δ on `∧^s ⊗ g_l`, and whether δ∘δ vanished on its image.
    fn delta_rank(&mut self, s: usize, l: usize) -> Result<(usize, bool)> {
        let (n, m) = (self.sys.n(), self.sys.m());
        if s > n {
            return Ok((0, true));
        }
        let basis = self.level(l)?.1.clone();
        let src = FormSpace::new(n, m, s, l as i64);
        let tgt = FormSpace::new(n, m, s + 1, l as i64 - 1);
        let tgt2 = FormSpace::new(n, m, s + 2, l as i64 - 2);
        let sym = symbol_cols(n, m, l);
        let mut rows = Vec::new();
        let mut sq_ok = true;
        for &mask in &src.masks {
            for b in &basis {
                let mut v = vec![FieldElement::zero(); src.dim()];
                for (c, x) in sym.iter().zip(b) {
                    if !x.is_zero() {
                        v[src.index(mask, &c.1, c.0)] = x.clone();
                    }
                }
                let img = delta(n, &src, &tgt, &v);
                if tgt2.dim() > 0 && !delta(n, &tgt, &tgt2, &img).iter().all(|x| x.is_zero()) {
                    sq_ok = false;
                }
                rows.push(img);
            }
        }
        let e = linalg::echelon(rows, tgt.dim())?;
        self.forced.extend(e.forced.iter().cloned());
        Ok((e.rank(), sq_ok))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CohomologyCell {
    pub r: usize,
    pub s: usize,
    pub z: usize,
    pub b: usize,
    pub h: usize,
}

#[derive(Debug, Clone)]
pub struct DimTable {
    pub q: usize,
    /// `(level, dim g_level)` for levels `q ..= q + max_r + 1`.
    pub g_dims: Vec<(usize, usize)>,
    pub cells: Vec<CohomologyCell>,
    /// Equation counts per class at level q (index 0 is class 1).
    pub betas: Vec<usize>,
    pub delta_squared_zero: bool,
}

impl DimTable {
    pub fn h(&self, r: usize, s: usize) -> Option<usize> {
        self.cells.iter().find(|c| c.r == r && c.s == s).map(|c| c.h)
    }

    /// First `(r, s)` with `s ≥ 1` and nonzero cohomology.
    pub fn first_nonzero(&self, max_s: usize) -> Option<(usize, usize)> {
        let mut v: Vec<_> = self.cells.iter().filter(|c| c.s >= 1 && c.s <= max_s && c.h > 0).map(|c| (c.r, c.s)).collect();
        v.sort();
        v.first().copied()
    }

    pub fn vanishes(&self, max_s: usize) -> bool {
        self.first_nonzero(max_s).is_none()
    }
}

/// `Z`, `B`, `H` of `∧^s ⊗ g_{q+r}` for `0 ≤ r ≤ max_r`, `0 ≤ s ≤ n`.
pub fn delta_cohomology(sys: &LinearSystem, max_r: usize) -> Result<DimTable> {
    let mut ladder = Ladder::new(sys);
    table(&mut ladder, max_r, sys.n())
}

fn table(ladder: &mut Ladder, max_r: usize, max_s: usize) -> Result<DimTable> {
    let sys = ladder.sys;
    let (n, q) = (sys.n(), sys.q);
    let mut cells = Vec::new();
    let mut sq = true;
    let mut g_dims = Vec::new();
    for l in q..=q + max_r + 1 {
        g_dims.push((l, ladder.dim(l)?));
    }
    for r in 0..=max_r {
        let l = q + r;
        let g = ladder.dim(l)?;
        for s in 0..=max_s.min(n) {
            let (rk, ok) = ladder.delta_rank(s, l)?;
            sq &= ok;
            let z = binom(n as u64, s as u64) as usize * g - rk;
            let b = if s == 0 {
                0
            } else {
                let (rb, ok) = ladder.delta_rank(s - 1, l + 1)?;
                sq &= ok;
                rb
            };
            cells.push(CohomologyCell { r, s, z, b, h: z - b });
        }
    }
    let (betas, _) = symbol_at(sys, q, None).class_counts()?;
    Ok(DimTable { q, g_dims, cells, betas, delta_squared_zero: sq })
}

// ------------------------------------------------------------- involutivity

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassTableau {
    /// Equation counts per class, index 0 is class 1.
    pub betas: Vec<usize>,
    /// Integer matrix of the linear change of coordinates used, if any.
    pub transform: Option<Vec<Vec<i64>>>,
    pub seed: Option<u64>,
}

impl ClassTableau {
    pub fn describe(&self) -> String {
        let parts: Vec<String> = (0..self.betas.len())
            .rev()
            .filter(|&i| self.betas[i] > 0)
            .map(|i| format!("{} of class {}", self.betas[i], i + 1))
            .collect();
        if parts.is_empty() {
            "no equations".into()
        } else {
            parts.join(", ")
        }
    }
}

pub const COORDINATE_SEED: u64 = 0x5eed_c1a5;

fn random_transform(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<i64>> {
    loop {
        let t: Vec<Vec<i64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-3..=3)).collect()).collect();
        let rows: Vec<Vec<FieldElement>> = t.iter().map(|r| r.iter().map(|&x| FieldElement::int(x)).collect()).collect();
        if linalg::rank(rows, n).map(|r| r == n).unwrap_or(false) {
            return t;
        }
    }
}

/// Cartan's test on `g_q`: the prolonged rank equals `Σ i·β^i`. Retries in
/// random linear coordinates when the given ones are not δ-regular.
pub fn cartan_test(sys: &LinearSystem) -> Result<Option<ClassTableau>> {
    cartan_test_with(sys, COORDINATE_SEED)
}

pub fn cartan_test_with(sys: &LinearSystem, seed: u64) -> Result<Option<ClassTableau>> {
    let q = sys.q;
    let attempt = |t: Option<&[Vec<i64>]>| -> Result<Option<Vec<usize>>> {
        let s0 = symbol_at(sys, q, t);
        let (betas, _) = s0.class_counts()?;
        let s1 = symbol_at(sys, q + 1, t);
        let rank1 = s1.echelon()?.rank();
        let weighted: usize = betas.iter().enumerate().map(|(i, b)| (i + 1) * b).sum();
        Ok((weighted == rank1).then_some(betas))
    };
    if let Some(betas) = attempt(None)? {
        return Ok(Some(ClassTableau { betas, transform: None, seed: None }));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..3 {
        let t = random_transform(&mut rng, sys.n());
        if let Some(betas) = attempt(Some(&t))? {
            return Ok(Some(ClassTableau { betas, transform: Some(t), seed: Some(seed) }));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NotInvolutiveReason {
    /// Some δ-cohomology of the symbol survives; `first` is the first `(r, s)`.
    Symbol { first: Option<(usize, usize)> },
    /// Prolongation followed by projection produces new equations.
    NotFormallyIntegrable { new_equations: usize },
    /// A rank used in the test is only valid off the locus of these pivots.
    GenericRank { pivots: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Involutivity {
    Yes(ClassTableau),
    No(NotInvolutiveReason),
}

impl Involutivity {
    pub fn is_yes(&self) -> bool {
        matches!(self, Involutivity::Yes(_))
    }
}

fn involves_jets(sys: &LinearSystem, a: &FieldElement) -> bool {
    [a.numer(), a.denom()].iter().any(|p| {
        p.terms().iter().any(|(mono, _)| mono.exps().iter().enumerate().any(|(v, &e)| e > 0 && sys.jet_generators.contains(&v)))
    })
}

/// Renders a pivot up to a constant factor (leading coefficient one).
fn render_pivot(field: &DiffField, a: &FieldElement) -> String {
    let lc = a.numer().lc();
    let c = FieldElement::Rat(lc);
    match a.div(&c) {
        Ok(x) => field.render(&x),
        Err(_) => field.render(a),
    }
}

fn dedup_pivots(field: &DiffField, ps: &[FieldElement]) -> Vec<String> {
    let mut seen = Vec::new();
    for p in ps {
        let s = render_pivot(field, p);
        if !seen.contains(&s) {
            seen.push(s);
        }
    }
    seen
}

/// Outcome of one prolong-and-project step at the current order.
struct Step {
    new_rows: Vec<Vec<DiffOperator>>,
    forced: Vec<FieldElement>,
}

fn prolong_project(sys: &LinearSystem) -> Result<Step> {
    let (n, m, q) = (sys.n(), sys.m(), sys.q);
    let mut pr = Prolonger::new(sys);
    let big = JetLayout::new(n, m, q + 1);
    let small = JetLayout::new(n, m, q);
    let rows1 = pr.jet_rows(q + 1, &big)?;
    let rows0 = pr.jet_rows(q, &small)?;
    let mut forced = Vec::new();
    let e0 = linalg::echelon(rows0.clone(), small.total)?;
    forced.extend(e0.forced.iter().cloned());
    let s1 = symbol_at(sys, q + 1, None).echelon()?;
    forced.extend(s1.forced.iter().cloned());
    let order: Vec<usize> = (0..big.total).collect();
    let e1 = linalg::echelon_ordered(rows1, big.total, &order)?;
    let top = big.offsets[q];
    let mut acc = e0;
    let mut fresh = Vec::new();
    for (row, &p) in e1.rows.iter().zip(&e1.pivots) {
        if p < top {
            continue;
        }
        let mut v = vec![FieldElement::zero(); small.total];
        for (c, x) in row.iter().enumerate().skip(top) {
            if !x.is_zero() {
                let (k, mu) = big.decode(c);
                v[small.col(k, &mu)] = x.clone();
            }
        }
        if acc.try_insert(v.clone())? {
            fresh.push(v);
        }
    }
    let new_rows = canonical_new_rows(sys, &small, rows0, fresh)?;
    Ok(Step { new_rows, forced })
}

/// Writes new equations in a canonical way: each is reduced modulo the
/// existing ones (pivots taken in class order, constant entries preferred)
/// and scaled so its first entry in that order is one.
fn canonical_new_rows(
    sys: &LinearSystem,
    layout: &JetLayout,
    existing: Vec<Vec<FieldElement>>,
    fresh: Vec<Vec<FieldElement>>,
) -> Result<Vec<Vec<DiffOperator>>> {
    let m = sys.m();
    let mut order: Vec<usize> = (0..layout.total).collect();
    order.sort_by_key(|&c| {
        let (k, mu) = layout.decode(c);
        (std::cmp::Reverse(mu.len()), std::cmp::Reverse(mu.class().unwrap_or(0)), c, k)
    });
    let mut base = linalg::echelon_prefer(existing, layout.total, &order)?;
    let mut out = Vec::new();
    for v in fresh {
        let r = base.reduce(&v);
        let Some(&lead) = order.iter().find(|&&c| !r[c].is_zero()) else { continue };
        let inv = r[lead].inv()?;
        let r: Vec<FieldElement> = r.iter().map(|x| x * &inv).collect();
        let mut terms: Vec<Vec<(MultiIndex, FieldElement)>> = vec![Vec::new(); m];
        for (c, x) in r.iter().enumerate() {
            if !x.is_zero() {
                let (k, mu) = layout.decode(c);
                terms[k].push((mu, x.clone()));
            }
        }
        out.push(terms.into_iter().map(DiffOperator::from_terms).collect());
        let mut all = base.rows.clone();
        all.push(r);
        base = linalg::echelon_prefer(all, layout.total, &order)?;
    }
    Ok(out)
}

/// Involutive means: involutive symbol and a prolongation that projects onto the system.
pub fn is_involutive(sys: &LinearSystem) -> Result<Involutivity> {
    let step = prolong_project(sys)?;
    let bad: Vec<FieldElement> = step.forced.iter().filter(|p| involves_jets(sys, p)).cloned().collect();
    if !bad.is_empty() {
        return Ok(Involutivity::No(NotInvolutiveReason::GenericRank { pivots: dedup_pivots(&sys.field, &bad) }));
    }
    match cartan_test(sys)? {
        None => {
            let t = delta_cohomology(sys, 2)?;
            Ok(Involutivity::No(NotInvolutiveReason::Symbol { first: t.first_nonzero(sys.n()) }))
        }
        Some(_) if !step.new_rows.is_empty() => {
            Ok(Involutivity::No(NotInvolutiveReason::NotFormallyIntegrable { new_equations: step.new_rows.len() }))
        }
        Some(tab) => Ok(Involutivity::Yes(tab)),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CompletionBudget {
    pub max_rounds: usize,
    /// Levels beyond q inspected when certifying 2-acyclicity.
    pub acyclic_levels: usize,
    /// Seed for the random coordinates of Cartan's test.
    pub seed: u64,
}

impl Default for CompletionBudget {
    fn default() -> Self {
        CompletionBudget { max_rounds: 12, acyclic_levels: 3, seed: COORDINATE_SEED }
    }
}

#[derive(Debug, Clone)]
pub struct AddedEquation {
    pub round: usize,
    pub order: usize,
    pub row: Vec<DiffOperator>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Certificate {
    Involutive(ClassTableau),
    /// H¹ and H² of the symbol vanish on every inspected level.
    TwoAcyclic { levels_checked: usize },
}

#[derive(Debug, Clone)]
pub struct Completion {
    pub system: LinearSystem,
    pub added: Vec<AddedEquation>,
    /// Pure prolongations performed to reach a 2-acyclic symbol.
    pub prolongations: usize,
    pub certificate: Certificate,
    /// Nonconstant pivots met along the way (none involve jet generators).
    pub pivots: Vec<String>,
}

fn two_acyclic(sys: &LinearSystem, levels: usize) -> Result<bool> {
    let mut ladder = Ladder::new(sys);
    for r in 0..=levels {
        let l = sys.q + r;
        for s in 1..=2usize.min(sys.n()) {
            let g = ladder.dim(l)?;
            let (rk, _) = ladder.delta_rank(s, l)?;
            let z = binom(sys.n() as u64, s as u64) as usize * g - rk;
            let (b, _) = ladder.delta_rank(s - 1, l + 1)?;
            if z != b {
                return Ok(false);
            }
        }
        if ladder.dim(l)? == 0 {
            break;
        }
    }
    Ok(true)
}

/// Prolong, project, add the new equations, and prolong further until the
/// symbol is 2-acyclic and the prolongation projects onto the system.
pub fn formal_integrability_complete(sys: &LinearSystem, budget: CompletionBudget) -> Result<Completion> {
    let mut cur = sys.clone();
    let mut added = Vec::new();
    let mut prolongations = 0;
    let mut pivots: Vec<FieldElement> = Vec::new();
    for round in 0..budget.max_rounds {
        let step = prolong_project(&cur)?;
        if let Some(p) = step.forced.iter().find(|p| involves_jets(&cur, p)) {
            return Err(Error::RankDrop { pivot: render_pivot(&cur.field, p) });
        }
        pivots.extend(step.forced.iter().cloned());
        if !step.new_rows.is_empty() {
            for row in step.new_rows.iter() {
                let order = row.iter().map(|p| p.order()).max().unwrap_or(-1).max(0) as usize;
                added.push(AddedEquation { round, order, row: row.clone() });
            }
            cur = cur.with_rows(step.new_rows)?;
            continue;
        }
        let certificate = if let Some(tab) = cartan_test_with(&cur, budget.seed)? {
            Some(Certificate::Involutive(tab))
        } else if two_acyclic(&cur, budget.acyclic_levels)? {
            Some(Certificate::TwoAcyclic { levels_checked: budget.acyclic_levels })
        } else {
            None
        };
        if let Some(certificate) = certificate {
            let pivots = dedup_pivots(&cur.field, &pivots);
            return Ok(Completion { system: cur, added, prolongations, certificate, pivots });
        }
        cur.q += 1;
        prolongations += 1;
    }
    Err(Error::ResourceBound(format!("completion did not stabilize within {} rounds", budget.max_rounds)))
}

/// Order of the generating compatibility conditions: prolongations needed for
/// a 2-acyclic symbol, plus one.
pub fn cc_order_estimate(sys: &LinearSystem, budget: CompletionBudget) -> Result<usize> {
    Ok(formal_integrability_complete(sys, budget)?.prolongations + 1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeRow {
    pub r: usize,
    pub g: usize,
    pub s: usize,
    pub f: usize,
    /// `dim g_{q+r} - m dim S_{q+r} + dim S_r dim F_0`: the number of
    /// compatibility conditions of order r, counted at the symbol level.
    pub count: i64,
}

/// Symbol-level count of compatibility conditions of orders `1..=max_r`,
/// read off the sequences `0 → g_{q+r} → S_{q+r}T*⊗E → S_rT*⊗F_0`.
pub fn cc_count_probe(sys: &LinearSystem, max_r: usize) -> Result<Vec<ProbeRow>> {
    let (n, m, q) = (sys.n(), sys.m(), sys.q);
    let f0 = symbol_at(sys, q, None).echelon()?.rank();
    let sdim = |l: usize| binom((n + l - 1) as u64, l as u64) as usize;
    let mut out = Vec::new();
    for r in 1..=max_r {
        let g = symbol_at(sys, q + r, None).dim()?;
        let s = m * sdim(q + r);
        let f = sdim(r) * f0;
        out.push(ProbeRow { r, g, s, f, count: g as i64 - s as i64 + f as i64 });
    }
    Ok(out)
}

/// `dim J_q(E) - dim R_q`, the number of independent equations of order ≤ q.
pub fn equation_rank(sys: &LinearSystem) -> Result<usize> {
    let layout = JetLayout::new(sys.n(), sys.m(), sys.q);
    let rows = Prolonger::new(sys).jet_rows(sys.q, &layout)?;
    linalg::rank(rows, layout.total)
}

pub fn jet_dim(n: usize, m: usize, q: usize) -> usize {
    m * binom((n + q) as u64, q as u64) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BundleKind {
    Janet,
    Spencer,
}

/// Dimensions of `F_0..F_n` or `C_0..C_n` for an involutive system.
pub fn bundle_dims(kind: BundleKind, sys: &LinearSystem) -> Result<Vec<usize>> {
    if let Involutivity::No(why) = is_involutive(sys)? {
        return Err(Error::NotInvolutive(format!("{why:?}")));
    }
    let (n, m, q) = (sys.n(), sys.m(), sys.q);
    let f0 = equation_rank(sys)?;
    let mut ladder = Ladder::new(sys);
    let mut out = Vec::with_capacity(n + 1);
    match kind {
        BundleKind::Spencer => {
            let dim_r = jet_dim(n, m, q) - f0;
            for r in 0..=n {
                let img = if r == 0 { 0 } else { ladder.delta_rank(r - 1, q + 1)?.0 };
                out.push(binom(n as u64, r as u64) as usize * dim_r - img);
            }
        }
        BundleKind::Janet => {
            let gq = ladder.level(q)?.1.clone();
            let sym_q = symbol_cols(n, m, q);
            for r in 0..=n {
                let c = binom(n as u64, r as u64) as usize;
                let space = FormSpace::new(n, m, r, q as i64);
                let mut rows = Vec::new();
                for &mask in &space.masks {
                    for b in &gq {
                        let mut v = vec![FieldElement::zero(); space.dim()];
                        for (col, x) in sym_q.iter().zip(b) {
                            if !x.is_zero() {
                                v[space.index(mask, &col.1, col.0)] = x.clone();
                            }
                        }
                        rows.push(v);
                    }
                }
                if r > 0 {
                    let src = FormSpace::new(n, m, r - 1, q as i64 + 1);
                    for i in 0..src.dim() {
                        let mut v = vec![FieldElement::zero(); src.dim()];
                        v[i] = FieldElement::one();
                        rows.push(delta(n, &src, &space, &v));
                    }
                }
                let span = linalg::rank(rows, space.dim())?;
                out.push(c * f0 - (span - c * gq.len()));
            }
        }
    }
    Ok(out)
}

/// Dimensions and orders along iterated compatibility conditions, starting
/// from the operator itself: `[m, rows(D), rows(CC(D)), ...]`.
pub fn cc_chain(op: &OperatorMatrix, budget: Budget) -> Result<(Vec<usize>, Vec<i32>)> {
    let mut dims = vec![op.cols(), op.rows()];
    let mut orders = vec![op.order()];
    let mut cur = op.clone();
    for _ in 0..=op.field().n() {
        let cc = syzygies_with(&cur, budget)?.cc_matrix;
        if cc.rows() == 0 || cc.is_zero() {
            return Ok((dims, orders));
        }
        dims.push(cc.rows());
        orders.push(cc.order());
        cur = cc;
    }
    Err(Error::ResourceBound("compatibility chain longer than the dimension".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(n: usize, unknowns: &[&str], rows: &[&str]) -> LinearSystem {
        let f = Arc::new(DiffField::standard(n));
        let u: Vec<String> = unknowns.iter().map(|s| s.to_string()).collect();
        LinearSystem::new(OperatorMatrix::parse_rows(f, &u, rows).unwrap())
    }

    #[test]
    fn airy_classes() {
        let s = sys(2, &["phi"], &["phi[2,2]", "phi[1,2]", "phi[1,1]"]);
        match is_involutive(&s).unwrap() {
            Involutivity::Yes(t) => {
                assert_eq!(t.betas, vec![2, 1]);
                assert_eq!(t.describe(), "1 of class 2, 2 of class 1");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn full_symbol_is_acyclic() {
        let s = sys(3, &["u", "v"], &[]).with_order(2).unwrap();
        let t = delta_cohomology(&s, 2).unwrap();
        assert!(t.delta_squared_zero);
        assert!(t.vanishes(3));
    }

    #[test]
    fn grad_is_involutive_and_unchanged() {
        let s = sys(3, &["u"], &["u[1]", "u[2]", "u[3]"]);
        let c = formal_integrability_complete(&s, CompletionBudget::default()).unwrap();
        assert!(c.added.is_empty());
        assert_eq!(c.prolongations, 0);
        assert_eq!(cc_order_estimate(&s, CompletionBudget::default()).unwrap(), 1);
    }

    #[test]
    fn trivial_janet_bundles_vanish() {
        let s = sys(2, &["u"], &[]).with_order(1).unwrap();
        assert_eq!(bundle_dims(BundleKind::Janet, &s).unwrap(), vec![0, 0, 0]);
        assert_eq!(bundle_dims(BundleKind::Spencer, &s).unwrap(), vec![3, 3, 1]);
    }
}
