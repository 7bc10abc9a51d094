//! Differential polynomials in jet variables `y^k_μ`, their formal
//! prolongation, and linearization at a generic point.
//!
//! A generic point is a presented differential field whose generators stand
//! for the parametric jets, together with values for the principal jets. The
//! linearized system lives over that field.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::expr::{self, Domain, Pos};
use crate::field::{DiffField, FieldElement, Rat};
use crate::involution::LinearSystem;
use crate::ore::{DiffOperator, MultiIndex, OperatorMatrix};

/// The jet variable `y^k_μ`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Jet {
    pub k: usize,
    pub mu: MultiIndex,
}

impl Jet {
    pub fn new(k: usize, dirs: &[usize]) -> Self {
        Jet { k, mu: MultiIndex::from_dirs(dirs) }
    }

    pub fn order(&self) -> usize {
        self.mu.len()
    }

    pub fn plus(&self, i: usize) -> Jet {
        Jet { k: self.k, mu: self.mu.plus(i) }
    }

    /// `y[1,2,2]` style, or the bare name at order zero.
    pub fn render(&self, unknowns: &[String]) -> String {
        let name = &unknowns[self.k];
        if self.mu.is_zero() {
            return name.clone();
        }
        let d: Vec<String> = self.mu.dirs().iter().map(|i| (i + 1).to_string()).collect();
        format!("{name}[{}]", d.join(","))
    }

    /// Compact name such as `y11` or `y2_122` (used for generator names).
    pub fn compact(&self, unknowns: &[String]) -> String {
        let d: String = self.mu.dirs().iter().map(|i| (i + 1).to_string()).collect();
        format!("{}{d}", unknowns[self.k])
    }
}

impl Ord for Jet {
    fn cmp(&self, o: &Self) -> Ordering {
        (self.k, self.order(), self.mu.exps()).cmp(&(o.k, o.order(), o.mu.exps()))
    }
}

impl PartialOrd for Jet {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "y{}{:?}", self.k + 1, self.mu.dirs())
    }
}

/// Product of jet powers, sorted by jet.
type JetMono = Vec<(Jet, u32)>;

fn mono_mul(a: &JetMono, b: &JetMono) -> JetMono {
    let mut m: BTreeMap<Jet, u32> = a.iter().copied().collect();
    for &(j, e) in b {
        *m.entry(j).or_insert(0) += e;
    }
    m.into_iter().collect()
}

/// Polynomial in jet variables with coefficients in a differential field.
#[derive(Clone)]
pub struct DiffPolynomial {
    field: Arc<DiffField>,
    unknowns: Vec<String>,
    terms: BTreeMap<JetMono, FieldElement>,
}

impl PartialEq for DiffPolynomial {
    fn eq(&self, o: &Self) -> bool {
        self.terms == o.terms
    }
}

impl fmt::Debug for DiffPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl DiffPolynomial {
    pub fn zero(field: Arc<DiffField>, unknowns: Vec<String>) -> Self {
        DiffPolynomial { field, unknowns, terms: BTreeMap::new() }
    }

    pub fn constant(field: Arc<DiffField>, unknowns: Vec<String>, c: FieldElement) -> Self {
        let mut p = Self::zero(field, unknowns);
        if !c.is_zero() {
            p.terms.insert(Vec::new(), c);
        }
        p
    }

    pub fn jet(field: Arc<DiffField>, unknowns: Vec<String>, j: Jet) -> Self {
        let mut p = Self::zero(field, unknowns);
        p.terms.insert(vec![(j, 1)], FieldElement::one());
        p
    }

    /// Parse in the expression grammar; jets are written `y[1,1]`, a bare
    /// unknown name is the order-zero jet.
    pub fn parse(field: Arc<DiffField>, unknowns: &[String], text: &str) -> Result<Self> {
        let e = expr::parse_at(text, Pos { line: 1, col: 1 })?;
        let mut dom = PolyDomain { field: field.clone(), unknowns: unknowns.to_vec() };
        expr::eval(&e, &mut dom)
    }

    pub fn field(&self) -> &Arc<DiffField> {
        &self.field
    }

    pub fn unknowns(&self) -> &[String] {
        &self.unknowns
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Highest jet order that occurs, `None` for a constant.
    pub fn order(&self) -> Option<usize> {
        self.jets().iter().map(|j| j.order()).max()
    }

    pub fn jets(&self) -> Vec<Jet> {
        let mut v: Vec<Jet> = self.terms.keys().flat_map(|m| m.iter().map(|(j, _)| *j)).collect();
        v.sort();
        v.dedup();
        v
    }

    fn insert(&mut self, m: JetMono, c: FieldElement) {
        if c.is_zero() {
            return;
        }
        let s = match self.terms.remove(&m) {
            Some(old) => &old + &c,
            None => c,
        };
        if !s.is_zero() {
            self.terms.insert(m, s);
        }
    }

    fn like(&self) -> Self {
        Self::zero(self.field.clone(), self.unknowns.clone())
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.insert(m.clone(), c.clone());
        }
        r
    }

    pub fn neg(&self) -> Self {
        let mut r = self.clone();
        for c in r.terms.values_mut() {
            *c = -&*c;
        }
        r
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn scale(&self, a: &FieldElement) -> Self {
        let mut r = self.like();
        for (m, c) in &self.terms {
            r.insert(m.clone(), c * a);
        }
        r
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut r = self.like();
        for (m, c) in &self.terms {
            for (m2, c2) in &o.terms {
                r.insert(mono_mul(m, m2), c * c2);
            }
        }
        r
    }

    /// `∂P/∂y^k_μ`.
    pub fn partial(&self, j: &Jet) -> Self {
        let mut r = self.like();
        for (m, c) in &self.terms {
            let Some(pos) = m.iter().position(|(x, _)| x == j) else { continue };
            let e = m[pos].1;
            let mut rest = m.clone();
            if e == 1 {
                rest.remove(pos);
            } else {
                rest[pos].1 -= 1;
            }
            r.insert(rest, c * &FieldElement::int(e as i64));
        }
        r
    }

    /// Total derivative `d_i = ∂_i + y^k_{μ+1_i} ∂/∂y^k_μ`.
    pub fn prolong(&self, i: usize) -> Result<Self> {
        if i >= self.field.n() {
            return Err(Error::Invalid(format!("direction {} out of range", i + 1)));
        }
        let mut r = self.like();
        for (m, c) in &self.terms {
            r.insert(m.clone(), self.field.derive(c, i)?);
        }
        for j in self.jets() {
            let next = Self::jet(self.field.clone(), self.unknowns.clone(), j.plus(i));
            r = r.add(&self.partial(&j).mul(&next));
        }
        Ok(r)
    }

    /// Value at a generic point.
    pub fn eval(&self, at: &GenericPoint) -> Result<FieldElement> {
        let mut acc = FieldElement::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (j, e) in m {
                t = &t * &at.value(j)?.pow(*e);
            }
            acc = &acc + &t;
        }
        Ok(acc)
    }

    pub fn render(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        // Highest order first, then lower degree, then later directions.
        let mut terms: Vec<(&JetMono, &FieldElement)> = self.terms.iter().collect();
        let key = |m: &JetMono| {
            let top = m.iter().map(|(j, _)| j.order()).max().unwrap_or(0);
            let deg: u32 = m.iter().map(|(_, e)| e).sum();
            let mut jets: Vec<(usize, Vec<u8>)> = m
                .iter()
                .map(|(j, _)| (j.order(), j.mu.exps().iter().rev().copied().collect()))
                .collect();
            jets.sort_by(|a, b| b.cmp(a));
            (std::cmp::Reverse(top), deg, std::cmp::Reverse(jets))
        };
        terms.sort_by_key(|t| key(t.0));
        for (m, c) in terms {
            let mono: Vec<String> = m
                .iter()
                .map(|(j, e)| {
                    let s = j.render(&self.unknowns);
                    if *e == 1 {
                        s
                    } else {
                        format!("{s}^{e}")
                    }
                })
                .collect();
            let (neg, mag) = match c.as_rational() {
                Some(r) if *r < Rat::from_integer(BigInt::from(0)) => (true, FieldElement::Rat(-r.clone())),
                _ => (false, c.clone()),
            };
            let coeff = self.field.render_factor(&mag);
            let body = if mono.is_empty() {
                coeff
            } else if mag.is_one() {
                mono.join("*")
            } else {
                format!("{coeff}*{}", mono.join("*"))
            };
            if out.is_empty() {
                out = if neg { format!("-{body}") } else { body };
            } else {
                out.push_str(if neg { " - " } else { " + " });
                out.push_str(&body);
            }
        }
        out
    }
}

struct PolyDomain {
    field: Arc<DiffField>,
    unknowns: Vec<String>,
}

impl PolyDomain {
    fn konst(&self, c: FieldElement) -> DiffPolynomial {
        DiffPolynomial::constant(self.field.clone(), self.unknowns.clone(), c)
    }
}

impl Domain for PolyDomain {
    type V = DiffPolynomial;

    fn int(&mut self, n: &BigInt) -> Result<DiffPolynomial> {
        Ok(self.konst(FieldElement::Rat(Rat::from_integer(n.clone()))))
    }

    fn ident(&mut self, name: &str, pos: Pos) -> Result<DiffPolynomial> {
        if let Some(k) = self.unknowns.iter().position(|u| u == name) {
            return Ok(DiffPolynomial::jet(self.field.clone(), self.unknowns.clone(), Jet::new(k, &[])));
        }
        match self.field.var_index(name) {
            Some(v) => Ok(self.konst(FieldElement::var(v))),
            None => Err(Error::UnknownIdentifier { name: name.into(), line: pos.line, col: pos.col }),
        }
    }

    fn jet(&mut self, name: &str, dirs: &[usize], pos: Pos) -> Result<DiffPolynomial> {
        let k = self
            .unknowns
            .iter()
            .position(|u| u == name)
            .ok_or_else(|| Error::UnknownIdentifier { name: name.into(), line: pos.line, col: pos.col })?;
        if let Some(&d) = dirs.iter().find(|&&d| d == 0 || d > self.field.n()) {
            return Err(Error::Syntax { line: pos.line, col: pos.col, msg: format!("direction {d} out of range") });
        }
        let zero_based: Vec<usize> = dirs.iter().map(|d| d - 1).collect();
        Ok(DiffPolynomial::jet(self.field.clone(), self.unknowns.clone(), Jet::new(k, &zero_based)))
    }

    fn add(&mut self, a: DiffPolynomial, b: DiffPolynomial) -> Result<DiffPolynomial> {
        Ok(a.add(&b))
    }

    fn neg(&mut self, a: DiffPolynomial) -> Result<DiffPolynomial> {
        Ok(a.neg())
    }

    fn mul(&mut self, a: DiffPolynomial, b: DiffPolynomial, _pos: Pos) -> Result<DiffPolynomial> {
        Ok(a.mul(&b))
    }

    fn div(&mut self, a: DiffPolynomial, b: DiffPolynomial, pos: Pos) -> Result<DiffPolynomial> {
        let c = match (b.terms.len(), b.terms.get(&Vec::new())) {
            (1, Some(c)) => c.clone(),
            _ => return Err(Error::Syntax { line: pos.line, col: pos.col, msg: "division by a jet expression".into() }),
        };
        Ok(a.scale(&c.inv()?))
    }
}

/// Parametric jets as field generators plus values for the principal jets.
#[derive(Clone)]
pub struct GenericPoint {
    pub field: Arc<DiffField>,
    pub unknowns: Vec<String>,
    values: BTreeMap<Jet, FieldElement>,
}

impl GenericPoint {
    /// `values` assigns field elements to jets; parametric jets usually map
    /// to the generator standing for them. Values are checked against the
    /// derivation table wherever both sides are defined.
    pub fn new(field: Arc<DiffField>, unknowns: Vec<String>, values: Vec<(Jet, FieldElement)>) -> Result<Self> {
        let p = GenericPoint { field, unknowns, values: values.into_iter().collect() };
        p.check()?;
        Ok(p)
    }

    /// Point whose generators are named after the parametric jets they
    /// stand for (`y`, `y1`, `y11`, ...), with extra principal values parsed
    /// from `(jet, expression)` text pairs.
    pub fn from_names(field: Arc<DiffField>, unknowns: &[&str], principal: &[(&str, &str)]) -> Result<Self> {
        let unknowns: Vec<String> = unknowns.iter().map(|s| s.to_string()).collect();
        let mut values = Vec::new();
        for (gi, g) in field.gen_names().iter().enumerate() {
            let j = parse_compact(&unknowns, g, field.n())
                .ok_or_else(|| Error::Invalid(format!("generator `{g}` does not name a jet")))?;
            values.push((j, FieldElement::var(field.n() + gi)));
        }
        for (name, text) in principal {
            let p = DiffPolynomial::parse(field.clone(), &unknowns, name)?;
            let j = match p.jets().as_slice() {
                [j] if p.terms.len() == 1 => *j,
                _ => return Err(Error::Invalid(format!("`{name}` is not a single jet"))),
            };
            values.push((j, field.parse(text)?));
        }
        Self::new(field, unknowns, values)
    }

    /// Field variables standing for parametric jets.
    pub fn jet_generators(&self) -> Vec<usize> {
        (self.field.n()..self.field.nvars()).collect()
    }

    fn check(&self) -> Result<()> {
        for (j, v) in &self.values {
            for i in 0..self.field.n() {
                let next = j.plus(i);
                let Some(w) = self.values.get(&next) else { continue };
                let Ok(dv) = self.field.derive(v, i) else { continue };
                if &dv != w {
                    return Err(Error::InconsistentTable(format!(
                        "d{}({}) = {} but {} = {}",
                        i + 1,
                        j.render(&self.unknowns),
                        self.field.render(&dv),
                        next.render(&self.unknowns),
                        self.field.render(w)
                    )));
                }
            }
        }
        Ok(())
    }

    /// Value of a jet: assigned directly, or obtained by differentiating the
    /// value of a lower jet through the derivation table.
    pub fn value(&self, j: &Jet) -> Result<FieldElement> {
        if let Some(v) = self.values.get(j) {
            return Ok(v.clone());
        }
        if j.mu.is_zero() {
            return Err(Error::NonClosedSubstitution(format!("no value for `{}`", j.render(&self.unknowns))));
        }
        let mut first_err = None;
        for i in 0..self.field.n() {
            if j.mu.get(i) == 0 {
                continue;
            }
            let parent = Jet { k: j.k, mu: j.mu.sub(&MultiIndex::unit(i)) };
            match self.value(&parent).and_then(|v| self.field.derive(&v, i)) {
                Ok(v) => return Ok(v),
                Err(e) => {
                    first_err.get_or_insert(e);
                }
            }
        }
        Err(first_err.expect("some direction"))
    }
}

/// `y11` / `y2_12` style names back to jets (single unknown: `y11`).
fn parse_compact(unknowns: &[String], s: &str, n: usize) -> Option<Jet> {
    let mut best: Option<Jet> = None;
    for (k, u) in unknowns.iter().enumerate() {
        let Some(rest) = s.strip_prefix(u.as_str()) else { continue };
        let rest = rest.strip_prefix('_').unwrap_or(rest);
        let dirs: Option<Vec<usize>> = rest
            .chars()
            .map(|c| c.to_digit(10).map(|d| d as usize).filter(|&d| d >= 1 && d <= n).map(|d| d - 1))
            .collect();
        if let Some(d) = dirs {
            // Prefer the longest unknown name that matches.
            if best.is_none_or(|b| unknowns[b.k].len() < u.len()) {
                best = Some(Jet::new(k, &d));
            }
        }
    }
    best
}

/// Formal linearization: row `τ` is `Σ ∂P_τ/∂y^k_μ|_at · d_μ` on column `k`.
/// Columns are named after the unknowns in upper case.
pub fn linearize(system: &[DiffPolynomial], at: &GenericPoint) -> Result<LinearSystem> {
    let m = at.unknowns.len();
    let mut rows = Vec::new();
    for p in system {
        if p.unknowns != at.unknowns {
            return Err(Error::ShapeMismatch("polynomial and point use different unknowns".into()));
        }
        let mut row = vec![DiffOperator::zero(); m];
        for j in p.jets() {
            let c = p.partial(&j).eval(at)?;
            row[j.k] = row[j.k].add(&DiffOperator::term(j.mu, c));
        }
        rows.push(row);
    }
    let labels = (1..=rows.len()).map(|i| format!("P{i}")).collect();
    let cols = at.unknowns.iter().map(|u| u.to_uppercase()).collect();
    let op = OperatorMatrix::from_rows(at.field.clone(), m, rows).with_labels(labels, cols);
    Ok(LinearSystem::new(op).with_jet_generators(at.jet_generators()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(text: &str) -> DiffPolynomial {
        DiffPolynomial::parse(Arc::new(DiffField::standard(2)), &["y".to_string()], text).unwrap()
    }

    #[test]
    fn prolongation_examples() {
        let p = poly("y[2,2] - 1/2*y[1,1]^2");
        assert_eq!(p.prolong(0).unwrap(), poly("y[1,2,2] - y[1,1]*y[1,1,1]"));
        assert_eq!(poly("y").prolong(1).unwrap(), poly("y[2]"));
        assert_eq!(poly("y[1]*y[2]").prolong(0).unwrap(), poly("y[1,1]*y[2] + y[1]*y[1,2]"));
    }

    #[test]
    fn coefficients_are_differentiated() {
        assert_eq!(poly("x1^2*y[2]").prolong(0).unwrap(), poly("2*x1*y[2] + x1^2*y[1,2]"));
    }

    #[test]
    fn render_reads_back() {
        let p = poly("y[2,2] - 1/2*y[1,1]^2 + 3*x2*y");
        assert_eq!(p.render(), "y[2,2] - 1/2*y[1,1]^2 + 3*x2*y");
        assert_eq!(poly(&p.render()), p);
    }

    #[test]
    fn compact_names() {
        let u = vec!["y".to_string()];
        assert_eq!(parse_compact(&u, "y112", 2), Some(Jet::new(0, &[0, 0, 1])));
        assert_eq!(parse_compact(&u, "y", 2), Some(Jet::new(0, &[])));
        assert_eq!(parse_compact(&u, "y3", 2), None);
    }
}
