use std::collections::BTreeMap;
use std::sync::Arc;

use delos_core::basis::{diff_rank, groebner, module_compare, normal_form, syzygies, ModuleComparison};
use delos_core::field::{DiffField, FieldElement};
use delos_core::ore::{proportional, DiffOperator, MultiIndex, OperatorMatrix};
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn rows(n: usize, unknowns: &[&str], text: &[&str]) -> OperatorMatrix {
    let f = Arc::new(DiffField::standard(n));
    let u: Vec<String> = unknowns.iter().map(|s| s.to_string()).collect();
    OperatorMatrix::parse_rows(f, &u, text).unwrap()
}

fn d(dirs: &[usize]) -> DiffOperator {
    DiffOperator::dirs(dirs)
}

#[test]
fn already_interreduced_basis() {
    let g = groebner(&rows(2, &["u"], &["u[1]", "u[2]"])).unwrap();
    assert_eq!(g.len(), 2);
    assert_eq!(g.generators().row(0)[0], d(&[1]));
    assert_eq!(g.generators().row(1)[0], d(&[0]));
}

#[test]
fn square_of_maximal_ideal() {
    let g = groebner(&rows(2, &["u"], &["u[1,1]", "u[1,2]", "u[2,2]"])).unwrap();
    assert_eq!(g.len(), 3);
    assert!(g.contains_row(&[d(&[0, 0, 1])]).unwrap());
    assert!(!g.contains_row(&[d(&[0])]).unwrap());
}

#[test]
fn prolonged_row_is_redundant() {
    let m = rows(1, &["u"], &["x1*u[1] - u", "x1*u[1,1]"]);
    let f = m.field().clone();
    let first = m.row(0)[0].clone();
    assert_eq!(d(&[0]).mul(&f, &first).unwrap(), m.row(1)[0]);
    let g = groebner(&m).unwrap();
    assert_eq!(g.len(), 1);
}

#[test]
fn normal_form_without_divisibility() {
    let g = groebner(&rows(3, &["u"], &["u[1]", "u[2]"])).unwrap();
    let r = rows(3, &["u"], &["u[3]"]);
    assert_eq!(normal_form(&r, &g).unwrap(), r);
    let gens = g.generators();
    for i in 0..gens.rows() {
        assert!(normal_form(&gens.row_matrix(i), &g).unwrap().is_zero());
    }
}

#[test]
fn poincare_chain() {
    let grad = rows(3, &["f"], &["f[1]", "f[2]", "f[3]"]);
    let curl = syzygies(&grad).unwrap().cc_matrix;
    assert_eq!(curl.rows(), 3);
    assert_eq!(curl.order(), 1);
    let expect_curl = rows(3, &["e1", "e2", "e3"], &["e2[3] - e3[2]", "e3[1] - e1[3]", "e1[2] - e2[1]"]);
    assert_eq!(module_compare(&curl, &expect_curl).unwrap(), ModuleComparison::Equal);
    assert_eq!(syzygies(&curl).unwrap().cc_matrix.rows(), 1);
    let div = syzygies(&expect_curl).unwrap().cc_matrix;
    assert_eq!(div.rows(), 1);
    let expect_div = rows(3, &["e1", "e2", "e3"], &["e1[1] + e2[2] + e3[3]"]);
    assert!(proportional(div.row(0), expect_div.row(0)).is_some());
}

#[test]
fn elementary_example_cc() {
    // η¹ = ∂₁₂ξ, η² = ∂₂₂ξ gives ∂₁η² − ∂₂η¹.
    let m = rows(2, &["xi"], &["xi[1,2]", "xi[2,2]"]);
    let cc = syzygies(&m).unwrap().cc_matrix;
    assert_eq!(cc.rows(), 1);
    assert!(proportional(cc.row(0), &[d(&[1]).neg(), d(&[0])]).is_some());
}

#[test]
fn killing_two_dimensional_cc_is_trace_of_riemann() {
    let k = rows(2, &["xi1", "xi2"], &["2*xi1[1]", "xi1[2] + xi2[1]", "2*xi2[2]"]);
    let cc = syzygies(&k).unwrap().cc_matrix;
    assert_eq!(cc.rows(), 1);
    let tr = [d(&[1, 1]), d(&[0, 1]).scale(&FieldElement::int(-2)), d(&[0, 0])];
    assert!(proportional(cc.row(0), &tr).is_some());
}

#[test]
fn comparison_and_rank_examples() {
    let a = rows(2, &["u"], &["u[1]"]);
    let b = rows(2, &["u"], &["u[1]", "u[2]"]);
    assert_eq!(module_compare(&a, &a).unwrap(), ModuleComparison::Equal);
    assert_eq!(module_compare(&a, &b).unwrap(), ModuleComparison::ASubsetB { witnesses: vec![1] });
    let div = rows(3, &["s1", "s2", "s3"], &["s1[1] + s2[2] + s3[3]"]);
    assert_eq!(diff_rank(&div).unwrap(), 1);
    let f = Arc::new(DiffField::standard(2));
    assert_eq!(diff_rank(&OperatorMatrix::identity(f, 3)).unwrap(), 3);
}

#[test]
fn zero_rows_are_dropped_from_bases() {
    let m = rows(2, &["u"], &["u[1]", "0*u", "u[2]"]);
    let g = groebner(&m).unwrap();
    assert_eq!(g.dropped_zero_rows, vec![1]);
    assert_eq!(g.len(), 2);
}

// ---- commutative oracle: plain Buchberger over Q[d1..dn], grevlex d1>..>dn ----

type Q = BigRational;
type CPoly = BTreeMap<Vec<u8>, Q>;

fn grevlex_gt(a: &[u8], b: &[u8]) -> bool {
    let (da, db): (u32, u32) = (a.iter().map(|&x| x as u32).sum(), b.iter().map(|&x| x as u32).sum());
    if da != db {
        return da > db;
    }
    for i in (0..a.len()).rev() {
        if a[i] != b[i] {
            return a[i] < b[i];
        }
    }
    false
}

fn lead(p: &CPoly) -> Option<(Vec<u8>, Q)> {
    let mut best: Option<(&Vec<u8>, &Q)> = None;
    for (m, c) in p {
        if best.map_or(true, |(b, _)| grevlex_gt(m, b)) {
            best = Some((m, c));
        }
    }
    best.map(|(m, c)| (m.clone(), c.clone()))
}

fn sub_mul(p: &mut CPoly, c: &Q, shift: &[u8], q: &CPoly) {
    for (m, a) in q {
        let mm: Vec<u8> = m.iter().zip(shift).map(|(x, y)| x + y).collect();
        let v = p.entry(mm.clone()).or_insert_with(Q::zero);
        *v -= c * a;
        if v.is_zero() {
            p.remove(&mm);
        }
    }
}

fn divides(a: &[u8], b: &[u8]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

fn oracle_reduce(mut p: CPoly, g: &[CPoly]) -> CPoly {
    let mut out = CPoly::new();
    while let Some((m, c)) = lead(&p) {
        if let Some(q) = g.iter().find(|q| divides(&lead(q).unwrap().0, &m)) {
            let (lm, lc) = lead(q).unwrap();
            let shift: Vec<u8> = m.iter().zip(&lm).map(|(x, y)| x - y).collect();
            sub_mul(&mut p, &(&c / &lc), &shift, q);
        } else {
            p.remove(&m);
            out.insert(m, c);
        }
    }
    out
}

fn oracle_groebner(gens: Vec<CPoly>) -> Vec<CPoly> {
    let mut g: Vec<CPoly> = gens.into_iter().filter(|p| !p.is_empty()).collect();
    let mut pairs: Vec<(usize, usize)> = (0..g.len()).flat_map(|j| (0..j).map(move |i| (i, j))).collect();
    while !pairs.is_empty() {
        // normal strategy: smallest lcm degree first
        let lcm_deg = |&(i, j): &(usize, usize)| -> u32 {
            let (a, b) = (lead(&g[i]).unwrap().0, lead(&g[j]).unwrap().0);
            a.iter().zip(&b).map(|(x, y)| *x.max(y) as u32).sum()
        };
        let k = (0..pairs.len()).min_by_key(|&k| (lcm_deg(&pairs[k]), k)).unwrap();
        let (i, j) = pairs.remove(k);
        let (mi, ci) = lead(&g[i]).unwrap();
        let (mj, cj) = lead(&g[j]).unwrap();
        if mi.iter().zip(&mj).all(|(a, b)| *a == 0 || *b == 0) {
            continue; // coprime leading monomials
        }
        let l: Vec<u8> = mi.iter().zip(&mj).map(|(a, b)| *a.max(b)).collect();
        let mut s = CPoly::new();
        sub_mul(&mut s, &(-Q::one() / &ci), &l.iter().zip(&mi).map(|(a, b)| a - b).collect::<Vec<_>>(), &g[i]);
        sub_mul(&mut s, &(Q::one() / &cj), &l.iter().zip(&mj).map(|(a, b)| a - b).collect::<Vec<_>>(), &g[j]);
        let r = oracle_reduce(s, &g);
        if !r.is_empty() {
            let k = g.len();
            g.push(r);
            pairs.extend((0..k).map(|i| (i, k)));
        }
    }
    // interreduce
    let mut kept: Vec<CPoly> = Vec::new();
    for (k, p) in g.iter().enumerate() {
        let lm = lead(p).unwrap().0;
        let dominated = g.iter().enumerate().any(|(o, q)| {
            let lq = lead(q).unwrap().0;
            o != k && divides(&lq, &lm) && (lq != lm || o < k)
        });
        if !dominated {
            kept.push(p.clone());
        }
    }
    let mut out = Vec::new();
    for k in 0..kept.len() {
        let others: Vec<CPoly> = kept.iter().enumerate().filter(|(o, _)| *o != k).map(|(_, q)| q.clone()).collect();
        let r = oracle_reduce(kept[k].clone(), &others);
        let lc = lead(&r).unwrap().1;
        out.push(r.into_iter().map(|(m, c)| (m, c / &lc)).collect::<CPoly>());
    }
    out.sort_by(|a, b| {
        let (la, lb) = (lead(a).unwrap().0, lead(b).unwrap().0);
        if la == lb {
            std::cmp::Ordering::Equal
        } else if grevlex_gt(&la, &lb) {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Less
        }
    });
    out
}

fn to_op(p: &CPoly) -> DiffOperator {
    DiffOperator::from_terms(p.iter().map(|(m, c)| (MultiIndex::from_exps(m), FieldElement::Rat(c.clone()))).collect())
}

fn poly_strategy(n: usize) -> impl Strategy<Value = CPoly> {
    prop::collection::vec((prop::collection::vec(0u8..3, n), -3i64..4), 1..4).prop_map(|ts| {
        let mut p = CPoly::new();
        for (m, c) in ts {
            if c != 0 {
                *p.entry(m).or_insert_with(Q::zero) += Q::from_integer(c.into());
            }
        }
        p.retain(|_, c| !c.is_zero());
        p
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn constant_coefficient_bases_match_commutative_oracle(
        n in 2usize..4,
        seed in prop::collection::vec(poly_strategy(3), 1..4),
    ) {
        let gens: Vec<CPoly> = seed
            .into_iter()
            .map(|p| p.into_iter().map(|(mut m, c)| { m.truncate(n); (m, c) }).fold(CPoly::new(), |mut acc, (m, c)| {
                *acc.entry(m).or_insert_with(Q::zero) += c; acc
            }))
            .map(|mut p| { p.retain(|_, c| !c.is_zero()); p })
            .collect();
        prop_assume!(gens.iter().any(|p| !p.is_empty()));
        let field = Arc::new(DiffField::standard(n));
        let m = OperatorMatrix::from_rows(field, 1, gens.iter().map(|p| vec![to_op(p)]).collect());
        let ours = groebner(&m).unwrap().generators();
        let theirs = oracle_groebner(gens);
        prop_assert_eq!(ours.rows(), theirs.len());
        for (i, p) in theirs.iter().enumerate() {
            prop_assert_eq!(&ours.row(i)[0], &to_op(p));
        }
        let again = groebner(&ours).unwrap().generators();
        prop_assert_eq!(again, ours);
    }
}
