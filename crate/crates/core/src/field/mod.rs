//! Presented differential fields `K = Q(x¹..xⁿ)(g₁..g_s)`.
//!
//! Variables are numbered coordinates first, then generators, each in
//! declaration order; this numbering fixes the grevlex order used for
//! canonical forms. Directions are 0-based in the API and 1-based in text.

mod element;
pub mod poly;

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::Zero;

pub use element::FieldElement;
pub use poly::{Mono, Poly, Rat};

use crate::error::{Error, Result};
use crate::expr::{self, Domain, Pos};

/// A commutation failure `∂_j ∂_i g ≠ ∂_i ∂_j g` (directions 0-based).
#[derive(Clone, Debug, PartialEq)]
pub struct TableViolation {
    pub generator: String,
    pub i: usize,
    pub j: usize,
    pub dj_di: FieldElement,
    pub di_dj: FieldElement,
}

#[derive(Clone, Debug)]
pub struct DiffField {
    coords: Vec<String>,
    gens: Vec<String>,
    names: Vec<String>,
    index: HashMap<String, usize>,
    /// `table[g][i]` is `∂_i g`, `None` when undefined.
    table: Vec<Vec<Option<FieldElement>>>,
}

impl PartialEq for DiffField {
    fn eq(&self, other: &Self) -> bool {
        self.coords == other.coords && self.gens == other.gens && self.table == other.table
    }
}

impl DiffField {
    /// Field of rational functions in the given coordinates, no generators.
    pub fn coordinates<S: AsRef<str>>(coords: &[S]) -> Self {
        Self::build(coords.iter().map(|s| s.as_ref().to_string()).collect(), Vec::new()).expect("distinct names")
    }

    /// `Q(x1..xn)` with default coordinate names.
    pub fn standard(n: usize) -> Self {
        let names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        Self::coordinates(&names)
    }

    fn build(coords: Vec<String>, gens: Vec<String>) -> Result<Self> {
        let names: Vec<String> = coords.iter().chain(gens.iter()).cloned().collect();
        let mut index = HashMap::new();
        for (k, s) in names.iter().enumerate() {
            if index.insert(s.clone(), k).is_some() {
                return Err(Error::Invalid(format!("identifier `{s}` declared twice")));
            }
        }
        let table = vec![vec![None; coords.len()]; gens.len()];
        Ok(DiffField { coords, gens, names, index, table })
    }

    /// Build a field with a derivation table and reject tables whose defined
    /// entries fail to commute.
    pub fn new(coords: Vec<String>, gens: Vec<String>, entries: Vec<(String, usize, FieldElement)>) -> Result<Self> {
        let f = Self::new_unchecked(coords, gens, entries)?;
        let bad = f.check_table();
        if let Some(v) = bad.first() {
            return Err(Error::InconsistentTable(format!(
                "d{}(d{}({})) = {} but d{}(d{}({})) = {}",
                v.j + 1,
                v.i + 1,
                v.generator,
                f.render(&v.dj_di),
                v.i + 1,
                v.j + 1,
                v.generator,
                f.render(&v.di_dj)
            )));
        }
        Ok(f)
    }

    /// Build without the commutation check (see [`DiffField::check_table`]).
    pub fn new_unchecked(coords: Vec<String>, gens: Vec<String>, entries: Vec<(String, usize, FieldElement)>) -> Result<Self> {
        let mut f = Self::build(coords, gens)?;
        for (g, i, v) in entries {
            let k = f.gens.iter().position(|s| *s == g).ok_or_else(|| Error::Invalid(format!("`{g}` is not a generator")))?;
            if i >= f.n() {
                return Err(Error::Invalid(format!("direction {} out of range", i + 1)));
            }
            f.table[k][i] = Some(v);
        }
        Ok(f)
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn nvars(&self) -> usize {
        self.names.len()
    }

    pub fn coord_names(&self) -> &[String] {
        &self.coords
    }

    pub fn gen_names(&self) -> &[String] {
        &self.gens
    }

    pub fn var_names(&self) -> &[String] {
        &self.names
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Table entry `∂_i g` for generator number `g`.
    pub fn table_entry(&self, g: usize, i: usize) -> Option<&FieldElement> {
        self.table[g][i].as_ref()
    }

    /// The variable called `name` as a field element.
    pub fn elem(&self, name: &str) -> Result<FieldElement> {
        self.var_index(name)
            .map(FieldElement::var)
            .ok_or_else(|| Error::UnknownIdentifier { name: name.to_string(), line: 0, col: 0 })
    }

    pub fn coord(&self, i: usize) -> FieldElement {
        FieldElement::var(i)
    }

    fn derive_poly(&self, p: &Poly, i: usize) -> Result<FieldElement> {
        if p.is_constant() {
            return Ok(FieldElement::zero());
        }
        let mut acc = FieldElement::from_poly(p.derivative(i));
        let top = p.max_var().unwrap_or(0);
        for v in self.n()..=top {
            let dp = p.derivative(v);
            if dp.is_zero() {
                continue;
            }
            let g = v - self.n();
            let dg = self.table[g][i].as_ref().ok_or_else(|| Error::UndefinedDerivative {
                generator: self.gens[g].clone(),
                direction: i + 1,
            })?;
            if dg.is_zero() {
                continue;
            }
            acc = &acc + &(&FieldElement::from_poly(dp) * dg);
        }
        Ok(acc)
    }

    /// `∂_i a` (0-based direction).
    pub fn derive(&self, a: &FieldElement, i: usize) -> Result<FieldElement> {
        assert!(i < self.n(), "direction out of range");
        match a {
            FieldElement::Rat(_) => Ok(FieldElement::zero()),
            FieldElement::Frac(b) => {
                let (num, den) = (&b.0, &b.1);
                let dn = self.derive_poly(num, i)?;
                if den.is_one() {
                    return Ok(dn);
                }
                let dd = self.derive_poly(den, i)?;
                let d = FieldElement::from_poly(den.clone());
                let top = &(&dn * &d) - &(&FieldElement::from_poly(num.clone()) * &dd);
                top.div(&(&d * &d))
            }
        }
    }

    /// Apply `∂^μ` where `dirs` lists directions with repetition.
    pub fn derive_dirs(&self, a: &FieldElement, dirs: &[usize]) -> Result<FieldElement> {
        let mut acc = a.clone();
        for &i in dirs {
            if acc.is_constant() {
                return Ok(FieldElement::zero());
            }
            acc = self.derive(&acc, i)?;
        }
        Ok(acc)
    }

    /// All pairs `(g, i, j)` with both entries defined whose mixed derivatives
    /// differ. Pairs whose mixed derivatives leave the table are skipped.
    pub fn check_table(&self) -> Vec<TableViolation> {
        let mut out = Vec::new();
        for (g, row) in self.table.iter().enumerate() {
            for i in 0..self.n() {
                for j in (i + 1)..self.n() {
                    let (Some(di), Some(dj)) = (&row[i], &row[j]) else { continue };
                    let (Ok(dj_di), Ok(di_dj)) = (self.derive(di, j), self.derive(dj, i)) else { continue };
                    if dj_di != di_dj {
                        out.push(TableViolation { generator: self.gens[g].clone(), i, j, dj_di, di_dj });
                    }
                }
            }
        }
        out
    }

    /// True when every generator is a constant (all table entries zero).
    pub fn is_constant_element(&self, a: &FieldElement) -> bool {
        a.is_constant()
    }

    /// Render in the expression grammar.
    pub fn render(&self, a: &FieldElement) -> String {
        match a {
            FieldElement::Rat(r) => {
                if r.is_integer() {
                    r.numer().to_string()
                } else {
                    format!("{}/{}", r.numer(), r.denom())
                }
            }
            FieldElement::Frac(b) => {
                let num = b.0.render(&self.names);
                if b.1.is_one() {
                    num
                } else {
                    let den = b.1.render(&self.names);
                    let num = if b.0.terms().len() > 1 { format!("({num})") } else { num };
                    let den = if b.1.terms().len() > 1 || !b.1.terms()[0].1.is_integer() || b.1.terms()[0].0.deg() > 0 {
                        format!("({den})")
                    } else {
                        den
                    };
                    format!("{num}/{den}")
                }
            }
        }
    }

    /// Render as a factor in a product: parenthesized when it is a sum.
    pub fn render_factor(&self, a: &FieldElement) -> String {
        let s = self.render(a);
        let needs = match a {
            FieldElement::Rat(_) => false,
            FieldElement::Frac(b) => b.1.is_one() && b.0.terms().len() > 1,
        };
        if needs {
            format!("({s})")
        } else {
            s
        }
    }

    pub fn parse(&self, text: &str) -> Result<FieldElement> {
        self.parse_at(text, Pos { line: 1, col: 1 })
    }

    pub fn parse_at(&self, text: &str, origin: Pos) -> Result<FieldElement> {
        let e = expr::parse_at(text, origin)?;
        expr::eval(&e, &mut FieldDomain { field: self })
    }

    /// Substitute field elements for variables (one value per variable).
    pub fn substitute(&self, a: &FieldElement, vals: &[FieldElement]) -> Result<FieldElement> {
        let ev = |p: &Poly| {
            p.eval_with(FieldElement::zero(), |acc, m, c| {
                let mut t = FieldElement::Rat(c.clone());
                for (i, &e) in m.exps().iter().enumerate() {
                    if e > 0 {
                        t = &t * &vals[i].pow(e as u32);
                    }
                }
                &acc + &t
            })
        };
        ev(&a.numer()).div(&ev(&a.denom()))
    }
}

pub(crate) struct FieldDomain<'a> {
    pub field: &'a DiffField,
}

impl Domain for FieldDomain<'_> {
    type V = FieldElement;

    fn int(&mut self, n: &BigInt) -> Result<FieldElement> {
        Ok(FieldElement::Rat(Rat::from_integer(n.clone())))
    }

    fn ident(&mut self, name: &str, pos: Pos) -> Result<FieldElement> {
        self.field
            .var_index(name)
            .map(FieldElement::var)
            .ok_or_else(|| Error::UnknownIdentifier { name: name.to_string(), line: pos.line, col: pos.col })
    }

    fn jet(&mut self, name: &str, _dirs: &[usize], pos: Pos) -> Result<FieldElement> {
        Err(Error::Syntax { line: pos.line, col: pos.col, msg: format!("jet `{name}[..]` not allowed in a field expression") })
    }

    fn add(&mut self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        Ok(a + b)
    }

    fn neg(&mut self, a: FieldElement) -> Result<FieldElement> {
        Ok(-a)
    }

    fn mul(&mut self, a: FieldElement, b: FieldElement, _pos: Pos) -> Result<FieldElement> {
        Ok(a * b)
    }

    fn div(&mut self, a: FieldElement, b: FieldElement, pos: Pos) -> Result<FieldElement> {
        if b.is_zero() {
            return Err(Error::Syntax { line: pos.line, col: pos.col, msg: "division by zero".into() });
        }
        a.div(&b)
    }
}

/// Convenience: `Rat` from a pair of integers.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// True when `r` is zero.
pub fn rat_is_zero(r: &Rat) -> bool {
    r.is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex33() -> DiffField {
        let s = |x: &str| x.to_string();
        let f0 = DiffField::new_unchecked(vec![s("x1"), s("x2")], vec![s("y"), s("y1"), s("y2"), s("y11")], vec![]).unwrap();
        let e = |t: &str| f0.parse(t).unwrap();
        DiffField::new(
            vec![s("x1"), s("x2")],
            vec![s("y"), s("y1"), s("y2"), s("y11")],
            vec![
                (s("y"), 0, e("y1")),
                (s("y1"), 0, e("y11")),
                (s("y11"), 0, e("0")),
                (s("y"), 1, e("y2")),
                (s("y1"), 1, e("y11")),
                (s("y11"), 1, e("0")),
                (s("y2"), 0, e("y11")),
                (s("y2"), 1, e("1/2*y11^2")),
            ],
        )
        .unwrap()
    }

    #[test]
    fn arithmetic_examples() {
        let f = DiffField::standard(2);
        let p = |t: &str| f.parse(t).unwrap();
        assert_eq!(&p("x1") + &p("x1"), p("2*x1"));
        assert_eq!(&p("x1/x2") * &p("x2/x1"), FieldElement::one());
        let lhs = &p("1/(x1-1)") + &p("1/(x1+1)");
        assert_eq!(lhs, p("2*x1/(x1^2-1)"));
        assert_eq!(f.render(&lhs), "2*x1/(x1^2 - 1)");
        assert_eq!(FieldElement::zero().inv(), Err(Error::DivisionByZero));
    }

    #[test]
    fn derivative_examples() {
        let f = DiffField::standard(2);
        let p = |t: &str| f.parse(t).unwrap();
        assert_eq!(f.derive(&p("x1^2"), 0).unwrap(), p("2*x1"));
        assert_eq!(f.derive(&p("1/x1"), 0).unwrap(), p("-1/x1^2"));
        let g = ex33();
        assert_eq!(g.derive(&g.parse("y1").unwrap(), 0).unwrap(), g.parse("y11").unwrap());
        assert!(g.check_table().is_empty());
    }

    #[test]
    fn undefined_entry_is_an_error() {
        let s = |x: &str| x.to_string();
        let f = DiffField::new_unchecked(vec![s("x1")], vec![s("g")], vec![]).unwrap();
        let err = f.derive(&f.parse("g^2").unwrap(), 0).unwrap_err();
        assert_eq!(err, Error::UndefinedDerivative { generator: "g".into(), direction: 1 });
    }

    #[test]
    fn commutation_violation_detected() {
        let s = |x: &str| x.to_string();
        let f0 = DiffField::new_unchecked(vec![s("x1"), s("x2")], vec![s("g")], vec![]).unwrap();
        let e = |t: &str| f0.parse(t).unwrap();
        let ok = DiffField::new_unchecked(vec![s("x1"), s("x2")], vec![s("g")], vec![(s("g"), 0, e("x2")), (s("g"), 1, e("x1"))]).unwrap();
        assert!(ok.check_table().is_empty());
        let bad = DiffField::new_unchecked(vec![s("x1"), s("x2")], vec![s("g")], vec![(s("g"), 0, e("g")), (s("g"), 1, e("x1*g"))]).unwrap();
        let v = bad.check_table();
        assert_eq!(v.len(), 1);
        assert_eq!((v[0].generator.as_str(), v[0].i, v[0].j), ("g", 0, 1));
        assert_eq!(v[0].dj_di, e("x1*g"));
        assert_eq!(v[0].di_dj, e("g + x1*g"));
        assert!(DiffField::new(vec![s("x1"), s("x2")], vec![s("g")], vec![(s("g"), 0, e("g")), (s("g"), 1, e("x1*g"))]).is_err());
    }

    #[test]
    fn render_parse_round_trip() {
        let f = DiffField::standard(3);
        for t in ["-x1*x3/(x2^2 + 1)", "1/2*x1 - 3", "(x1 + x2)/(2*x3)", "-7/3", "x1^3*x2"] {
            let a = f.parse(t).unwrap();
            assert_eq!(f.parse(&f.render(&a)).unwrap(), a, "{t}");
            assert_eq!(a.recanonicalize(), a);
        }
    }
}
