//! Dense exact linear algebra over the coefficient field.
//!
//! Pivots are chosen among nonzero rational constants whenever one is
//! available; a pivot that had to be a nonconstant element is recorded so
//! callers can decide whether the computed rank is generic.

use crate::field::FieldElement;
use crate::Result;
use std::collections::BTreeSet;

#[derive(Debug, Clone)]
pub struct Echelon {
    /// Reduced rows, each normalized so its pivot entry is one.
    pub rows: Vec<Vec<FieldElement>>,
    pub pivots: Vec<usize>,
    /// Nonconstant pivots that no constant alternative could replace.
    pub forced: Vec<FieldElement>,
    pub ncols: usize,
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Basis of the right kernel `{v : row . v = 0}`.
    pub fn kernel(&self) -> Vec<Vec<FieldElement>> {
        let piv: BTreeSet<usize> = self.pivots.iter().copied().collect();
        let mut out = Vec::new();
        for free in (0..self.ncols).filter(|c| !piv.contains(c)) {
            let mut v = vec![FieldElement::zero(); self.ncols];
            v[free] = FieldElement::one();
            for (row, &p) in self.rows.iter().zip(&self.pivots) {
                if !row[free].is_zero() {
                    v[p] = -&row[free];
                }
            }
            out.push(v);
        }
        out
    }

    /// Adds `v` if it is independent of the current rows; returns whether it was.
    pub fn try_insert(&mut self, mut v: Vec<FieldElement>) -> Result<bool> {
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if !v[p].is_zero() {
                let c = v[p].clone();
                axpy(&mut v, &c, row);
            }
        }
        let Some(p) = pick_in_row(&v) else { return Ok(false) };
        if !v[p].is_constant() {
            self.forced.push(v[p].clone());
        }
        let inv = v[p].inv()?;
        for x in v.iter_mut() {
            if !x.is_zero() {
                *x = &*x * &inv;
            }
        }
        for row in self.rows.iter_mut() {
            if !row[p].is_zero() {
                let c = row[p].clone();
                axpy(row, &c, &v);
            }
        }
        self.rows.push(v);
        self.pivots.push(p);
        Ok(true)
    }

    /// `v` with every pivot column eliminated.
    pub fn reduce(&self, v: &[FieldElement]) -> Vec<FieldElement> {
        let mut v = v.to_vec();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if !v[p].is_zero() {
                let c = v[p].clone();
                axpy(&mut v, &c, row);
            }
        }
        v
    }

    pub fn contains(&self, v: &[FieldElement]) -> bool {
        self.reduce(v).iter().all(|x| x.is_zero())
    }
}

/// `v -= c * w`.
fn axpy(v: &mut [FieldElement], c: &FieldElement, w: &[FieldElement]) {
    for (x, y) in v.iter_mut().zip(w) {
        if !y.is_zero() {
            *x = &*x - &(c * y);
        }
    }
}

fn cost(a: &FieldElement) -> (usize, u32) {
    let (n, d) = (a.numer(), a.denom());
    (n.terms().len() + d.terms().len(), n.total_degree() + d.total_degree())
}

fn pick_in_row(v: &[FieldElement]) -> Option<usize> {
    let mut best: Option<(usize, (usize, u32))> = None;
    for (j, x) in v.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        if x.is_constant() {
            return Some(j);
        }
        let c = cost(x);
        if best.as_ref().is_none_or(|b| c < b.1) {
            best = Some((j, c));
        }
    }
    best.map(|b| b.0)
}

fn pivot_step(rows: &mut Vec<Vec<FieldElement>>, done: &mut Echelon, r: usize, c: usize) -> Result<()> {
    let mut prow = rows.swap_remove(r);
    if !prow[c].is_constant() {
        done.forced.push(prow[c].clone());
    }
    let inv = prow[c].inv()?;
    for x in prow.iter_mut() {
        if !x.is_zero() {
            *x = &*x * &inv;
        }
    }
    for row in rows.iter_mut().chain(done.rows.iter_mut()) {
        if !row[c].is_zero() {
            let f = row[c].clone();
            axpy(row, &f, &prow);
        }
    }
    rows.retain(|row| row.iter().any(|x| !x.is_zero()));
    done.rows.push(prow);
    done.pivots.push(c);
    Ok(())
}

/// Reduced echelon form with free pivoting: any constant entry is used first.
pub fn echelon(rows: Vec<Vec<FieldElement>>, ncols: usize) -> Result<Echelon> {
    let mut rows: Vec<_> = rows.into_iter().filter(|r| r.iter().any(|x| !x.is_zero())).collect();
    let mut done = Echelon { rows: Vec::new(), pivots: Vec::new(), forced: Vec::new(), ncols };
    while !rows.is_empty() {
        let mut choice = None;
        'scan: for (i, row) in rows.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                if !x.is_zero() && x.is_constant() {
                    choice = Some((i, j));
                    break 'scan;
                }
            }
        }
        let (i, j) = match choice {
            Some(c) => c,
            None => {
                let mut best: Option<((usize, u32), usize, usize)> = None;
                for (i, row) in rows.iter().enumerate() {
                    for (j, x) in row.iter().enumerate() {
                        if !x.is_zero() {
                            let c = cost(x);
                            if best.as_ref().is_none_or(|b| c < b.0) {
                                best = Some((c, i, j));
                            }
                        }
                    }
                }
                let b = best.expect("nonzero row present");
                (b.1, b.2)
            }
        };
        pivot_step(&mut rows, &mut done, i, j)?;
    }
    Ok(done)
}

/// Reduced echelon form whose pivots follow `col_order`: the first column of
/// the order with a nonzero entry is eliminated first.
pub fn echelon_ordered(rows: Vec<Vec<FieldElement>>, ncols: usize, col_order: &[usize]) -> Result<Echelon> {
    let mut rows: Vec<_> = rows.into_iter().filter(|r| r.iter().any(|x| !x.is_zero())).collect();
    let mut done = Echelon { rows: Vec::new(), pivots: Vec::new(), forced: Vec::new(), ncols };
    for &c in col_order {
        if rows.is_empty() {
            break;
        }
        let mut pick: Option<(usize, (usize, u32))> = None;
        for (i, row) in rows.iter().enumerate() {
            let x = &row[c];
            if x.is_zero() {
                continue;
            }
            if x.is_constant() {
                pick = Some((i, (0, 0)));
                break;
            }
            let k = cost(x);
            if pick.as_ref().is_none_or(|p| k < p.1) {
                pick = Some((i, k));
            }
        }
        if let Some((i, _)) = pick {
            pivot_step(&mut rows, &mut done, i, c)?;
        }
    }
    Ok(done)
}

/// Reduced echelon form whose pivots prefer constant entries, scanning the
/// columns in `col_order`; a nonconstant pivot is taken only when no
/// remaining entry is a nonzero constant.
pub fn echelon_prefer(rows: Vec<Vec<FieldElement>>, ncols: usize, col_order: &[usize]) -> Result<Echelon> {
    let mut rows: Vec<_> = rows.into_iter().filter(|r| r.iter().any(|x| !x.is_zero())).collect();
    let mut done = Echelon { rows: Vec::new(), pivots: Vec::new(), forced: Vec::new(), ncols };
    while !rows.is_empty() {
        let constant = col_order.iter().find_map(|&c| {
            rows.iter().position(|r| !r[c].is_zero() && r[c].is_constant()).map(|i| (i, c))
        });
        let (i, c) = match constant {
            Some(x) => x,
            None => col_order
                .iter()
                .find_map(|&c| rows.iter().position(|r| !r[c].is_zero()).map(|i| (i, c)))
                .expect("nonzero row present"),
        };
        pivot_step(&mut rows, &mut done, i, c)?;
    }
    Ok(done)
}

/// Determinant of a square matrix.
pub fn determinant(m: &[Vec<FieldElement>]) -> Result<FieldElement> {
    let n = m.len();
    let mut a = m.to_vec();
    let mut det = FieldElement::one();
    for c in 0..n {
        let Some(p) = (c..n).filter(|&r| !a[r][c].is_zero()).min_by_key(|&r| !a[r][c].is_constant()) else {
            return Ok(FieldElement::zero());
        };
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        let piv = a[c][c].clone();
        det = &det * &piv;
        let inv = piv.inv()?;
        for r in c + 1..n {
            if !a[r][c].is_zero() {
                let f = &a[r][c] * &inv;
                let row = a[c].clone();
                axpy(&mut a[r], &f, &row);
            }
        }
    }
    Ok(det)
}

/// Inverse of a square matrix, `None` when singular.
pub fn inverse(m: &[Vec<FieldElement>]) -> Result<Option<Vec<Vec<FieldElement>>>> {
    let n = m.len();
    let rows: Vec<Vec<FieldElement>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut v = r.clone();
            v.extend((0..n).map(|j| if i == j { FieldElement::one() } else { FieldElement::zero() }));
            v
        })
        .collect();
    let order: Vec<usize> = (0..2 * n).collect();
    let e = echelon_ordered(rows, 2 * n, &order)?;
    if e.rank() < n || e.pivots.iter().any(|&p| p >= n) {
        return Ok(None);
    }
    let mut out = vec![Vec::new(); n];
    for (row, &p) in e.rows.iter().zip(&e.pivots) {
        out[p] = row[n..].to_vec();
    }
    Ok(Some(out))
}

pub fn rank(rows: Vec<Vec<FieldElement>>, ncols: usize) -> Result<usize> {
    Ok(echelon(rows, ncols)?.rank())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::DiffField;

    fn q(n: i64) -> FieldElement {
        FieldElement::int(n)
    }

    #[test]
    fn constant_rank_and_kernel() {
        let rows = vec![vec![q(1), q(2), q(3)], vec![q(2), q(4), q(6)], vec![q(0), q(1), q(1)]];
        let e = echelon(rows.clone(), 3).unwrap();
        assert_eq!(e.rank(), 2);
        assert!(e.forced.is_empty());
        let k = e.kernel();
        assert_eq!(k.len(), 1);
        for r in &rows {
            let s = r.iter().zip(&k[0]).fold(FieldElement::zero(), |acc, (a, b)| acc + a * b);
            assert!(s.is_zero());
        }
    }

    #[test]
    fn forced_pivot_is_recorded() {
        let f = DiffField::coordinates(&["x"]);
        let x = f.coord(0);
        let e = echelon(vec![vec![x.clone(), q(0)], vec![q(0), q(1)]], 2).unwrap();
        assert_eq!(e.rank(), 2);
        assert_eq!(e.forced, vec![x]);
    }

    #[test]
    fn ordered_pivots_follow_order() {
        let rows = vec![vec![q(1), q(1)], vec![q(0), q(1)]];
        let e = echelon_ordered(rows, 2, &[1, 0]).unwrap();
        assert_eq!(e.pivots, vec![1, 0]);
    }
}
