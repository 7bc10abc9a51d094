//! Tokenizer and parser for the rational expression grammar shared by field
//! elements, operator rows and differential polynomials.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('-' | '+') unary | power
//! power  := atom ('^' INT)?
//! atom   := INT | IDENT | IDENT '[' (INT (',' INT)*)? ']' | '(' expr ')'
//! ```
//!
//! `IDENT[i,j]` is a jet token: the unknown `IDENT` differentiated along
//! directions `i` and `j` (1-based).

use num_bigint::BigInt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Int(BigInt),
    Ident(String, Pos),
    Jet(String, Vec<usize>, Pos),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>, Pos),
    Pow(Box<Expr>, u32),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Sym(char),
}

struct Lexer {
    toks: Vec<(Tok, Pos)>,
    end: Pos,
}

fn lex(text: &str, origin: Pos) -> Result<Lexer> {
    let mut toks = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut line = origin.line;
    let mut col = origin.col;
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            toks.push((Tok::Int(s.parse().expect("digits")), pos));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            toks.push((Tok::Ident(s), pos));
            continue;
        }
        if "+-*/^()[],".contains(c) {
            toks.push((Tok::Sym(c), pos));
            i += 1;
            col += 1;
            continue;
        }
        return Err(Error::Syntax { line, col, msg: format!("unexpected character `{c}`") });
    }
    Ok(Lexer { toks, end: Pos { line, col } })
}

struct Parser {
    lx: Lexer,
    k: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.lx.toks.get(self.k).map(|t| &t.0)
    }

    fn pos(&self) -> Pos {
        self.lx.toks.get(self.k).map(|t| t.1).unwrap_or(self.lx.end)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let p = self.pos();
        Err(Error::Syntax { line: p.line, col: p.col, msg: msg.into() })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.k += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.peek() == Some(&Tok::Sym('/')) {
                let p = self.pos();
                self.k += 1;
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?), p);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat('^') {
            match self.peek().cloned() {
                Some(Tok::Int(n)) => {
                    let e: u32 = n.try_into().or_else(|_| self.err("exponent too large"))?;
                    self.k += 1;
                    return Ok(Expr::Pow(Box::new(base), e));
                }
                _ => return self.err("expected a non-negative integer exponent"),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let p = self.pos();
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.k += 1;
                Ok(Expr::Int(n))
            }
            Some(Tok::Ident(s)) => {
                self.k += 1;
                if self.eat('[') {
                    let mut idx = Vec::new();
                    if !self.eat(']') {
                        loop {
                            match self.peek().cloned() {
                                Some(Tok::Int(n)) => {
                                    let d: usize = n.try_into().or_else(|_| self.err("bad direction"))?;
                                    if d == 0 {
                                        return self.err("directions are numbered from 1");
                                    }
                                    idx.push(d);
                                    self.k += 1;
                                }
                                _ => return self.err("expected a direction index"),
                            }
                            if self.eat(']') {
                                break;
                            }
                            if !self.eat(',') {
                                return self.err("expected `,` or `]`");
                            }
                        }
                    }
                    idx.sort_unstable();
                    Ok(Expr::Jet(s, idx, p))
                } else {
                    Ok(Expr::Ident(s, p))
                }
            }
            Some(Tok::Sym('(')) => {
                self.k += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return self.err("expected `)`");
                }
                Ok(e)
            }
            Some(t) => self.err(format!("unexpected token {t:?}")),
            None => self.err("unexpected end of expression"),
        }
    }
}

/// Parse a complete expression; `origin` is the position of its first character.
pub fn parse_at(text: &str, origin: Pos) -> Result<Expr> {
    let lx = lex(text, origin)?;
    let mut p = Parser { lx, k: 0 };
    let e = p.expr()?;
    if p.k != p.lx.toks.len() {
        return p.err("trailing input");
    }
    Ok(e)
}

pub fn parse(text: &str) -> Result<Expr> {
    parse_at(text, Pos { line: 1, col: 1 })
}

/// Target domain for expression evaluation.
pub trait Domain {
    type V: Clone;
    fn int(&mut self, n: &BigInt) -> Result<Self::V>;
    fn ident(&mut self, name: &str, pos: Pos) -> Result<Self::V>;
    fn jet(&mut self, name: &str, dirs: &[usize], pos: Pos) -> Result<Self::V>;
    fn add(&mut self, a: Self::V, b: Self::V) -> Result<Self::V>;
    fn neg(&mut self, a: Self::V) -> Result<Self::V>;
    fn mul(&mut self, a: Self::V, b: Self::V, pos: Pos) -> Result<Self::V>;
    fn div(&mut self, a: Self::V, b: Self::V, pos: Pos) -> Result<Self::V>;
}

fn first_pos(e: &Expr) -> Pos {
    match e {
        Expr::Ident(_, p) | Expr::Jet(_, _, p) | Expr::Div(_, _, p) => *p,
        Expr::Neg(a) | Expr::Pow(a, _) | Expr::Add(a, _) | Expr::Sub(a, _) | Expr::Mul(a, _) => first_pos(a),
        Expr::Int(_) => Pos { line: 0, col: 0 },
    }
}

pub fn eval<D: Domain>(e: &Expr, d: &mut D) -> Result<D::V> {
    match e {
        Expr::Int(n) => d.int(n),
        Expr::Ident(s, p) => d.ident(s, *p),
        Expr::Jet(s, idx, p) => d.jet(s, idx, *p),
        Expr::Neg(a) => {
            let v = eval(a, d)?;
            d.neg(v)
        }
        Expr::Add(a, b) => {
            let (x, y) = (eval(a, d)?, eval(b, d)?);
            d.add(x, y)
        }
        Expr::Sub(a, b) => {
            let (x, y) = (eval(a, d)?, eval(b, d)?);
            let y = d.neg(y)?;
            d.add(x, y)
        }
        Expr::Mul(a, b) => {
            let (x, y) = (eval(a, d)?, eval(b, d)?);
            d.mul(x, y, first_pos(b))
        }
        Expr::Div(a, b, p) => {
            let (x, y) = (eval(a, d)?, eval(b, d)?);
            d.div(x, y, *p)
        }
        Expr::Pow(a, k) => {
            let x = eval(a, d)?;
            let mut acc = d.int(&BigInt::from(1))?;
            for _ in 0..*k {
                acc = d.mul(acc, x.clone(), first_pos(a))?;
            }
            Ok(acc)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_jets_and_precedence() {
        let e = parse("xi1[3] - x3*xi2[3,1]").unwrap();
        match e {
            Expr::Sub(a, b) => {
                assert!(matches!(*a, Expr::Jet(ref s, ref i, _) if s == "xi1" && i == &vec![3]));
                assert!(matches!(*b, Expr::Mul(_, ref j) if matches!(**j, Expr::Jet(_, ref i, _) if i == &vec![1, 3])));
            }
            _ => panic!("bad tree"),
        }
    }

    #[test]
    fn reports_positions() {
        let err = parse("x1 + * 2").unwrap_err();
        assert_eq!(err, Error::Syntax { line: 1, col: 6, msg: "unexpected token Sym('*')".into() });
    }
}
