//! Sparse multivariate polynomials over exact rationals.
//!
//! Terms are kept sorted in descending graded reverse lexicographic order
//! (variable 0 is the largest variable). Exponent vectors carry no trailing
//! zeros, so constants need no knowledge of the ambient variable count.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use smallvec::SmallVec;

pub type Rat = BigRational;

/// Exponent vector with trailing zeros trimmed.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Mono(SmallVec<[u16; 8]>);

impl Mono {
    pub fn one() -> Mono {
        Mono(SmallVec::new())
    }

    pub fn var(i: usize) -> Mono {
        Self::var_pow(i, 1)
    }

    pub fn var_pow(i: usize, e: u16) -> Mono {
        if e == 0 {
            return Mono::one();
        }
        let mut v: SmallVec<[u16; 8]> = SmallVec::from_elem(0, i + 1);
        v[i] = e;
        Mono(v)
    }

    pub fn from_exps(exps: &[u16]) -> Mono {
        let mut v: SmallVec<[u16; 8]> = exps.iter().copied().collect();
        while v.last() == Some(&0) {
            v.pop();
        }
        Mono(v)
    }

    pub fn exps(&self) -> &[u16] {
        &self.0
    }

    pub fn get(&self, i: usize) -> u16 {
        self.0.get(i).copied().unwrap_or(0)
    }

    pub fn deg(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        let (a, b) = if self.0.len() >= other.0.len() { (self, other) } else { (other, self) };
        let mut v = a.0.clone();
        for (i, &e) in b.0.iter().enumerate() {
            v[i] += e;
        }
        Mono(v)
    }

    pub fn divides(&self, other: &Mono) -> bool {
        self.0.len() <= other.0.len() && self.0.iter().zip(other.0.iter()).all(|(a, b)| a <= b)
    }

    /// `self / other`, assuming `other` divides `self`.
    pub fn div(&self, other: &Mono) -> Mono {
        let mut v = self.0.clone();
        for (i, &e) in other.0.iter().enumerate() {
            v[i] -= e;
        }
        while v.last() == Some(&0) {
            v.pop();
        }
        Mono(v)
    }

    /// Replace the exponent of variable `i`.
    pub fn with(&self, i: usize, e: u16) -> Mono {
        let mut v = self.0.clone();
        if v.len() <= i {
            v.resize(i + 1, 0);
        }
        v[i] = e;
        while v.last() == Some(&0) {
            v.pop();
        }
        Mono(v)
    }

    pub fn max_var(&self) -> Option<usize> {
        if self.0.is_empty() {
            None
        } else {
            Some(self.0.len() - 1)
        }
    }
}

impl Ord for Mono {
    /// Graded reverse lexicographic: larger total degree first, then the
    /// monomial with the smaller exponent in the last differing variable wins.
    fn cmp(&self, other: &Mono) -> Ordering {
        let (da, db) = (self.deg(), other.deg());
        if da != db {
            return da.cmp(&db);
        }
        let len = self.0.len().max(other.0.len());
        for i in (0..len).rev() {
            let (a, b) = (self.get(i), other.get(i));
            if a != b {
                return b.cmp(&a);
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Mono) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Mono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0.as_slice())
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    terms: Vec<(Mono, Rat)>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly { terms: Vec::new() }
    }

    pub fn one() -> Poly {
        Poly::constant(Rat::one())
    }

    pub fn constant(c: Rat) -> Poly {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly { terms: vec![(Mono::one(), c)] }
        }
    }

    pub fn var(i: usize) -> Poly {
        Poly { terms: vec![(Mono::var(i), Rat::one())] }
    }

    pub fn monomial(m: Mono, c: Rat) -> Poly {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly { terms: vec![(m, c)] }
        }
    }

    /// Build from arbitrary (possibly repeated, unsorted) terms.
    pub fn from_terms(mut terms: Vec<(Mono, Rat)>) -> Poly {
        terms.sort_by(|a, b| b.0.cmp(&a.0));
        let mut out: Vec<(Mono, Rat)> = Vec::with_capacity(terms.len());
        for (m, c) in terms {
            match out.last_mut() {
                Some(last) if last.0 == m => last.1 += c,
                _ => {
                    if let Some(last) = out.last() {
                        if last.1.is_zero() {
                            out.pop();
                        }
                    }
                    out.push((m, c));
                }
            }
        }
        if let Some(last) = out.last() {
            if last.1.is_zero() {
                out.pop();
            }
        }
        Poly { terms: out }
    }

    pub fn terms(&self) -> &[(Mono, Rat)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<Rat> {
        match self.terms.as_slice() {
            [] => Some(Rat::zero()),
            [(m, c)] if m.is_one() => Some(c.clone()),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms[0].0.is_one())
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_one() && self.terms[0].1.is_one()
    }

    pub fn leading(&self) -> Option<&(Mono, Rat)> {
        self.terms.first()
    }

    pub fn lc(&self) -> Rat {
        self.terms.first().map(|t| t.1.clone()).unwrap_or_else(Rat::zero)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(|t| t.0.deg()).max().unwrap_or(0)
    }

    pub fn max_var(&self) -> Option<usize> {
        self.terms.iter().filter_map(|t| t.0.max_var()).max()
    }

    pub fn degree_in(&self, v: usize) -> u16 {
        self.terms.iter().map(|t| t.0.get(v)).max().unwrap_or(0)
    }

    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn scale(&self, c: &Rat) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect() }
    }

    pub fn mul_term(&self, m: &Mono, c: &Rat) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(a, x)| (a.mul(m), x * c)).collect() }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        self.merge(other, false)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.merge(other, true)
    }

    fn merge(&self, other: &Poly, negate: bool) -> Poly {
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.terms, &other.terms);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Greater => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    let c = if negate { -&b[j].1 } else { b[j].1.clone() };
                    out.push((b[j].0.clone(), c));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = if negate { &a[i].1 - &b[j].1 } else { &a[i].1 + &b[j].1 };
                    if !c.is_zero() {
                        out.push((a[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(a[i..].iter().cloned());
        for t in &b[j..] {
            let c = if negate { -&t.1 } else { t.1.clone() };
            out.push((t.0.clone(), c));
        }
        Poly { terms: out }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                terms.push((ma.mul(mb), ca * cb));
            }
        }
        Poly::from_terms(terms)
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one();
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Divide by the leading coefficient.
    pub fn monic(&self) -> Poly {
        match self.terms.first() {
            None => Poly::zero(),
            Some((_, c)) if c.is_one() => self.clone(),
            Some((_, c)) => self.scale(&c.recip()),
        }
    }

    /// Exact division; `None` if `d` does not divide `self`.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        if d.is_zero() {
            return None;
        }
        if let Some(c) = d.as_constant() {
            return Some(self.scale(&c.recip()));
        }
        let (dm, dc) = d.leading().unwrap();
        let dc_inv = dc.recip();
        let mut rem = self.clone();
        let mut quot = Vec::new();
        while let Some((rm, rc)) = rem.leading().cloned() {
            if !dm.divides(&rm) {
                return None;
            }
            let m = rm.div(dm);
            let c = &rc * &dc_inv;
            rem = rem.sub(&d.mul_term(&m, &c));
            quot.push((m, c));
        }
        Some(Poly::from_terms(quot))
    }

    pub fn derivative(&self, v: usize) -> Poly {
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.get(v) > 0)
            .map(|(m, c)| {
                let e = m.get(v);
                (m.with(v, e - 1), c * Rat::from_integer(BigInt::from(e)))
            })
            .collect();
        Poly::from_terms(terms)
    }

    /// Coefficients with respect to variable `v`: entry `k` is the coefficient
    /// of `v^k`, a polynomial free of `v`.
    pub fn coeffs_in(&self, v: usize) -> Vec<Poly> {
        let d = self.degree_in(v) as usize;
        let mut buckets: Vec<Vec<(Mono, Rat)>> = vec![Vec::new(); d + 1];
        for (m, c) in &self.terms {
            buckets[m.get(v) as usize].push((m.with(v, 0), c.clone()));
        }
        buckets.into_iter().map(Poly::from_terms).collect()
    }

    fn lc_in(&self, v: usize) -> Poly {
        let d = self.degree_in(v);
        Poly::from_terms(
            self.terms.iter().filter(|(m, _)| m.get(v) == d).map(|(m, c)| (m.with(v, 0), c.clone())).collect(),
        )
    }

    /// Content with respect to `v` (gcd of the coefficients in `v`), monic.
    fn content_in(&self, v: usize) -> Poly {
        let mut g = Poly::zero();
        for c in self.coeffs_in(v).into_iter().rev() {
            if c.is_zero() {
                continue;
            }
            g = gcd(&g, &c);
            if g.is_constant() {
                return Poly::one();
            }
        }
        g
    }

    /// Substitute polynomial values for variables; `vals[i]` replaces variable `i`.
    pub fn eval_with<T, F>(&self, zero: T, mut term: F) -> T
    where
        F: FnMut(T, &Mono, &Rat) -> T,
    {
        let mut acc = zero;
        for (m, c) in &self.terms {
            acc = term(acc, m, c);
        }
        acc
    }

    /// Multiply through by the lcm of coefficient denominators and divide by the
    /// integer content, keeping the sign of the leading coefficient positive.
    pub fn integer_primitive(&self) -> Poly {
        use num_integer::Integer;
        if self.is_zero() {
            return Poly::zero();
        }
        let mut l = BigInt::one();
        for (_, c) in &self.terms {
            l = l.lcm(c.denom());
        }
        let mut g = BigInt::zero();
        for (_, c) in &self.terms {
            let n = c.numer() * (&l / c.denom());
            g = g.gcd(&n);
        }
        let sign = if self.lc().is_negative() { -BigInt::one() } else { BigInt::one() };
        let f = Rat::new(l * sign, g);
        self.scale(&f)
    }
}

/// Pseudo-remainder of `a` by `b` as univariate polynomials in `v`.
fn prem(a: &Poly, b: &Poly, v: usize) -> Poly {
    let db = b.degree_in(v);
    let lcb = b.lc_in(v);
    let mut r = a.clone();
    while !r.is_zero() && r.degree_in(v) >= db {
        let dr = r.degree_in(v);
        let lcr = r.lc_in(v);
        let shift = Poly::monomial(Mono::var_pow(v, dr - db), Rat::one());
        r = r.mul(&lcb).sub(&lcr.mul(&shift).mul(b));
    }
    r
}

/// Monic greatest common divisor over Q via recursive primitive remainder sequences.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    if a == b {
        return a.monic();
    }
    let v = a.max_var().max(b.max_var()).unwrap();
    let (da, db) = (a.degree_in(v), b.degree_in(v));
    if da == 0 {
        return gcd(a, &b.content_in(v));
    }
    if db == 0 {
        return gcd(&a.content_in(v), b);
    }
    let ca = a.content_in(v);
    let cb = b.content_in(v);
    let c = gcd(&ca, &cb);
    let mut pa = a.div_exact(&ca).expect("content divides").integer_primitive();
    let mut pb = b.div_exact(&cb).expect("content divides").integer_primitive();
    if pa.degree_in(v) < pb.degree_in(v) {
        std::mem::swap(&mut pa, &mut pb);
    }
    let g = loop {
        let r = prem(&pa, &pb, v);
        if r.is_zero() {
            break pb;
        }
        if r.degree_in(v) == 0 {
            break Poly::one();
        }
        let cr = r.content_in(v);
        pa = pb;
        pb = r.div_exact(&cr).expect("content divides").integer_primitive();
    };
    c.mul(&g).monic()
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..=self.max_var().unwrap_or(0)).map(|i| format!("v{i}")).collect();
        write!(f, "{}", self.render(&names))
    }
}

fn write_rat(out: &mut String, c: &Rat) {
    if c.is_integer() {
        out.push_str(&c.numer().to_string());
    } else {
        out.push_str(&format!("{}/{}", c.numer(), c.denom()));
    }
}

impl Poly {
    /// Render with the given variable names, in the expression grammar accepted
    /// by the parser.
    pub fn render(&self, names: &[String]) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if k == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mut factors: Vec<String> = Vec::new();
            for (i, &e) in m.exps().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let name = names.get(i).cloned().unwrap_or_else(|| format!("v{i}"));
                factors.push(if e == 1 { name } else { format!("{name}^{e}") });
            }
            if factors.is_empty() {
                write_rat(&mut out, &a);
            } else {
                if !a.is_one() {
                    write_rat(&mut out, &a);
                    out.push('*');
                }
                out.push_str(&factors.join("*"));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Rat {
        Rat::from_integer(n.into())
    }

    fn x(i: usize) -> Poly {
        Poly::var(i)
    }

    #[test]
    fn grevlex_orders_degree_then_reverse_lex() {
        let x0 = Mono::var(0);
        let x1 = Mono::var(1);
        let x0x1 = x0.mul(&x1);
        let x1sq = Mono::var_pow(1, 2);
        let x0sq = Mono::var_pow(0, 2);
        assert!(x0 > x1);
        assert!(x0sq > x0x1 && x0x1 > x1sq);
        assert!(x1sq > x0);
    }

    #[test]
    fn gcd_of_shared_factor() {
        let a = x(0).sub(&Poly::one()).mul(&x(1).add(&x(0)));
        let b = x(0).sub(&Poly::one()).mul(&x(1).sub(&Poly::constant(q(3))));
        assert_eq!(gcd(&a, &b), x(0).sub(&Poly::one()));
        assert_eq!(gcd(&x(0), &x(1)), Poly::one());
    }

    #[test]
    fn gcd_multivariate_square() {
        let f = x(0).mul(&x(2)).add(&x(1).pow(2)).sub(&Poly::constant(q(2)));
        let a = f.pow(2).mul(&x(1));
        let b = f.mul(&x(0).add(&x(2)));
        assert_eq!(gcd(&a, &b), f.monic());
    }

    #[test]
    fn exact_division_round_trip() {
        let a = x(0).add(&x(1)).pow(3);
        let b = x(0).add(&x(1));
        assert_eq!(a.div_exact(&b).unwrap(), b.pow(2));
        assert!(x(0).div_exact(&x(1)).is_none());
    }
}
