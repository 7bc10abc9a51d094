use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use super::poly::{gcd, Poly, Rat};
use crate::error::{Error, Result};

/// Element of a rational function field over Q.
///
/// Canonical form: constants are stored as `Rat`; everything else as a reduced
/// fraction whose denominator is monic under grevlex. Equality is structural.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum FieldElement {
    Rat(Rat),
    Frac(Box<(Poly, Poly)>),
}

impl Default for FieldElement {
    fn default() -> Self {
        FieldElement::zero()
    }
}

impl FieldElement {
    pub fn zero() -> Self {
        FieldElement::Rat(Rat::zero())
    }

    pub fn one() -> Self {
        FieldElement::Rat(Rat::one())
    }

    pub fn int(n: i64) -> Self {
        FieldElement::Rat(Rat::from_integer(n.into()))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        FieldElement::Rat(Rat::new(n.into(), d.into()))
    }

    pub fn var(i: usize) -> Self {
        FieldElement::Frac(Box::new((Poly::var(i), Poly::one())))
    }

    pub fn from_poly(p: Poly) -> Self {
        match p.as_constant() {
            Some(c) => FieldElement::Rat(c),
            None => FieldElement::Frac(Box::new((p, Poly::one()))),
        }
    }

    /// Canonicalize `num / den`.
    pub fn from_fraction(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(FieldElement::zero());
        }
        if let Some(c) = den.as_constant() {
            return Ok(FieldElement::from_poly(num.scale(&c.recip())));
        }
        let g = gcd(&num, &den);
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (num.div_exact(&g).expect("gcd divides"), den.div_exact(&g).expect("gcd divides"))
        };
        Ok(Self::normalized(num, den))
    }

    /// Assumes `num/den` already reduced; fixes the denominator's leading coefficient.
    fn normalized(num: Poly, den: Poly) -> Self {
        let lc = den.lc();
        let (num, den) = if lc.is_one() { (num, den) } else { (num.scale(&lc.recip()), den.scale(&lc.recip())) };
        if den.is_one() {
            FieldElement::from_poly(num)
        } else {
            FieldElement::Frac(Box::new((num, den)))
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, FieldElement::Rat(r) if r.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, FieldElement::Rat(r) if r.is_one())
    }

    pub fn as_rational(&self) -> Option<&Rat> {
        match self {
            FieldElement::Rat(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, FieldElement::Rat(_))
    }

    pub fn numer(&self) -> Poly {
        match self {
            FieldElement::Rat(r) => Poly::constant(r.clone()),
            FieldElement::Frac(b) => b.0.clone(),
        }
    }

    pub fn denom(&self) -> Poly {
        match self {
            FieldElement::Rat(_) => Poly::one(),
            FieldElement::Frac(b) => b.1.clone(),
        }
    }

    /// True when the denominator is 1.
    pub fn is_polynomial(&self) -> bool {
        match self {
            FieldElement::Rat(_) => true,
            FieldElement::Frac(b) => b.1.is_one(),
        }
    }

    pub fn inv(&self) -> Result<Self> {
        match self {
            FieldElement::Rat(r) => {
                if r.is_zero() {
                    Err(Error::DivisionByZero)
                } else {
                    Ok(FieldElement::Rat(r.recip()))
                }
            }
            FieldElement::Frac(b) => Ok(Self::normalized(b.1.clone(), b.0.clone())),
        }
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self * &other.inv()?)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = FieldElement::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Re-run canonicalization from scratch (identity on canonical values).
    pub fn recanonicalize(&self) -> Self {
        Self::from_fraction(self.numer(), self.denom()).expect("denominator is nonzero")
    }

    fn add_impl(&self, other: &Self) -> Self {
        use FieldElement::*;
        match (self, other) {
            (Rat(a), Rat(b)) => Rat(a + b),
            (Rat(a), Frac(f)) | (Frac(f), Rat(a)) => {
                let num = f.0.add(&f.1.scale(a));
                if f.1.is_one() {
                    FieldElement::from_poly(num)
                } else if num.is_zero() {
                    FieldElement::zero()
                } else {
                    Frac(Box::new((num, f.1.clone())))
                }
            }
            (Frac(f), Frac(g)) => {
                if f.1 == g.1 {
                    let num = f.0.add(&g.0);
                    if f.1.is_one() {
                        return FieldElement::from_poly(num);
                    }
                    return Self::from_fraction(num, f.1.clone()).expect("nonzero");
                }
                if f.1.is_one() {
                    let num = f.0.mul(&g.1).add(&g.0);
                    return Frac(Box::new((num, g.1.clone())));
                }
                if g.1.is_one() {
                    let num = g.0.mul(&f.1).add(&f.0);
                    return Frac(Box::new((num, f.1.clone())));
                }
                let h = gcd(&f.1, &g.1);
                let fd = f.1.div_exact(&h).unwrap();
                let gd = g.1.div_exact(&h).unwrap();
                let num = f.0.mul(&gd).add(&g.0.mul(&fd));
                let den = f.1.mul(&gd);
                Self::from_fraction(num, den).expect("nonzero")
            }
        }
    }

    fn mul_impl(&self, other: &Self) -> Self {
        use FieldElement::*;
        match (self, other) {
            (Rat(a), Rat(b)) => Rat(a * b),
            (Rat(a), Frac(f)) | (Frac(f), Rat(a)) => {
                if a.is_zero() {
                    FieldElement::zero()
                } else {
                    Frac(Box::new((f.0.scale(a), f.1.clone())))
                }
            }
            (Frac(f), Frac(g)) => {
                if f.1.is_one() && g.1.is_one() {
                    return FieldElement::from_poly(f.0.mul(&g.0));
                }
                let g1 = gcd(&f.0, &g.1);
                let g2 = gcd(&g.0, &f.1);
                let n1 = f.0.div_exact(&g1).unwrap();
                let d2 = g.1.div_exact(&g1).unwrap();
                let n2 = g.0.div_exact(&g2).unwrap();
                let d1 = f.1.div_exact(&g2).unwrap();
                Self::normalized(n1.mul(&n2), d1.mul(&d2))
            }
        }
    }

    fn neg_impl(&self) -> Self {
        match self {
            FieldElement::Rat(a) => FieldElement::Rat(-a),
            FieldElement::Frac(f) => FieldElement::Frac(Box::new((f.0.neg(), f.1.clone()))),
        }
    }
}

impl<'a> Add<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: &FieldElement) -> FieldElement {
        self.add_impl(rhs)
    }
}

impl<'a> Sub<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: &FieldElement) -> FieldElement {
        self.add_impl(&rhs.neg_impl())
    }
}

impl<'a> Mul<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: &FieldElement) -> FieldElement {
        self.mul_impl(rhs)
    }
}

impl Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        self.neg_impl()
    }
}

impl Add for FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: FieldElement) -> FieldElement {
        self.add_impl(&rhs)
    }
}

impl Sub for FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: FieldElement) -> FieldElement {
        &self - &rhs
    }
}

impl Mul for FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: FieldElement) -> FieldElement {
        self.mul_impl(&rhs)
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        self.neg_impl()
    }
}

impl std::fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FieldElement::Rat(r) => write!(f, "{r}"),
            FieldElement::Frac(b) if b.1.is_one() => write!(f, "{:?}", b.0),
            FieldElement::Frac(b) => write!(f, "({:?})/({:?})", b.0, b.1),
        }
    }
}
