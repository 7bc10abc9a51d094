//! The inverse problem: deciding whether an operator is parametrizable,
//! exhibiting torsion elements when it is not, and checking projectivity.
//!
//! Starting from `D₁`, the chain is `ad(D₁)`, `ad(D) = CC(ad(D₁))`,
//! `D = ad(ad(D))` and `D₁' = CC(D)`. `D₁` is parametrized by `D` exactly
//! when `D₁'` and `D₁` generate the same module; the extra rows of `D₁'`
//! are torsion elements of the module presented by `D₁`.

use crate::basis::{diff_rank, groebner, module_compare, syzygies_with, Budget, ModuleComparison};
use crate::error::{Error, Result};
use crate::field::DiffField;
use crate::ore::{render_row, Convention, DiffOperator, OperatorMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stages {
    Ext1,
    /// Also run the second stage when the first verdict is zero.
    Ext2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Zero,
    Nonzero,
}

/// A row of `D₁'` outside the module of `D₁`, with operators `P ≠ 0` such
/// that `P·w` lies in that module.
#[derive(Clone, Debug)]
pub struct TorsionWitness {
    pub row: Vec<DiffOperator>,
    pub annihilators: Vec<DiffOperator>,
}

impl TorsionWitness {
    pub fn render(&self, field: &DiffField, unknowns: &[String]) -> String {
        render_row(field, &self.row, unknowns)
    }
}

#[derive(Clone, Debug)]
pub struct SecondStage {
    /// `ad(D₋₁) = CC(ad(D))`.
    pub ad_dm1: OperatorMatrix,
    pub dm1: OperatorMatrix,
    /// `D' = CC(D₋₁)`.
    pub d_prime: OperatorMatrix,
    pub verdict: Verdict,
}

#[derive(Clone, Debug)]
pub struct ParametrizabilityReport {
    pub d1: OperatorMatrix,
    pub ad_d1: OperatorMatrix,
    pub ad_d: OperatorMatrix,
    pub d: OperatorMatrix,
    pub d1_prime: OperatorMatrix,
    pub verdict_ext1: Verdict,
    pub witnesses: Vec<TorsionWitness>,
    pub ext2: Option<SecondStage>,
    /// `D`, when the first verdict is zero.
    pub parametrization: Option<OperatorMatrix>,
}

/// The same matrix read as an operator acting on columns.
fn as_operator(m: OperatorMatrix) -> OperatorMatrix {
    let mut m = m;
    m.convention = Convention::ActsLeftOnColumns;
    m
}

fn check_zero(a: &OperatorMatrix, b: &OperatorMatrix, what: &str) -> Result<()> {
    if a.rows() == 0 || b.cols() == 0 {
        return Ok(());
    }
    if !as_operator(a.clone()).mul(&as_operator(b.clone()))?.is_zero() {
        return Err(Error::Invalid(format!("internal error: {what} does not compose to zero")));
    }
    Ok(())
}

/// One step `A ↦ (ad(A), CC(ad(A)), ad(CC(ad(A))), CC(ad(CC(ad(A)))))`.
struct Step {
    ad_a: OperatorMatrix,
    ad_p: OperatorMatrix,
    p: OperatorMatrix,
    a_prime: OperatorMatrix,
}

fn step(a: &OperatorMatrix, budget: Budget) -> Result<Step> {
    let a = as_operator(a.clone());
    let ad_a = as_operator(a.adjoint()?);
    let ad_p = syzygies_with(&ad_a, budget)?.cc_matrix;
    let mut p = as_operator(ad_p.adjoint()?);
    p.row_labels = a.col_labels.clone();
    p.col_labels = (1..=p.cols()).map(|i| format!("phi{i}")).collect();
    check_zero(&ad_p, &ad_a, "ad(D)·ad(D1)")?;
    check_zero(&a, &p, "D1·D")?;
    let mut a_prime = syzygies_with(&p, budget)?.cc_matrix;
    a_prime.col_labels = a.col_labels.clone();
    Ok(Step { ad_a, ad_p, p, a_prime })
}

fn verdict(a: &OperatorMatrix, a_prime: &OperatorMatrix) -> Result<(Verdict, Vec<usize>)> {
    if a_prime.rows() == 0 {
        return Ok((Verdict::Zero, Vec::new()));
    }
    match module_compare(a, a_prime)? {
        ModuleComparison::Equal => Ok((Verdict::Zero, Vec::new())),
        ModuleComparison::ASubsetB { witnesses } => Ok((Verdict::Nonzero, witnesses)),
        other => Err(Error::Invalid(format!("internal error: CC(D) does not contain D1 ({other:?})"))),
    }
}

fn sort_key(field: &DiffField, row: &[DiffOperator], unknowns: &[String]) -> (i32, usize, String) {
    let order = row.iter().map(|p| p.order()).max().unwrap_or(-1);
    let terms = row.iter().map(|p| p.terms().len()).sum();
    (order, terms, render_row(field, row, unknowns))
}

/// Annihilators of `w` modulo the rows of `a`: the first components of the
/// syzygies of `[w; a]`, lowest order first.
fn annihilators(w: &[DiffOperator], a: &OperatorMatrix, budget: Budget) -> Result<Vec<DiffOperator>> {
    let f = a.field().clone();
    let top = OperatorMatrix::from_rows(f.clone(), a.cols(), vec![w.to_vec()]);
    let stacked = top.vstack(&as_operator(a.clone()))?;
    let syz = syzygies_with(&stacked, budget)?.cc_matrix;
    let mut out: Vec<DiffOperator> = (0..syz.rows()).map(|i| syz.get(i, 0).clone()).filter(|p| !p.is_zero()).collect();
    out.sort_by_key(|p| (p.order(), p.terms().len(), p.render(&f)));
    Ok(out)
}

/// Rows of `a_prime` listed in `idx`, lowest order first, each with its
/// annihilators modulo `a`.
fn witnesses_from(a: &OperatorMatrix, a_prime: &OperatorMatrix, idx: &[usize], budget: Budget) -> Result<Vec<TorsionWitness>> {
    let f = a.field();
    let mut rows: Vec<Vec<DiffOperator>> = idx.iter().map(|&i| a_prime.row(i).to_vec()).collect();
    rows.sort_by_key(|r| sort_key(f, r, &a.col_labels));
    let mut out = Vec::new();
    for row in rows {
        let ann = annihilators(&row, a, budget)?;
        out.push(TorsionWitness { row, annihilators: ann });
    }
    Ok(out)
}

pub fn five_step_test(d1: &OperatorMatrix, stages: Stages) -> Result<ParametrizabilityReport> {
    five_step_test_with(d1, stages, Budget::default())
}

pub fn five_step_test_with(d1: &OperatorMatrix, stages: Stages, budget: Budget) -> Result<ParametrizabilityReport> {
    if d1.rows() == 0 || d1.is_zero() {
        return Err(Error::Invalid("the operator is zero".into()));
    }
    let d1 = as_operator(d1.clone());
    let s = step(&d1, budget)?;
    let (v1, idx) = verdict(&d1, &s.a_prime)?;
    let witnesses = witnesses_from(&d1, &s.a_prime, &idx, budget)?;
    let ext2 = if stages == Stages::Ext2 && v1 == Verdict::Zero && s.p.cols() > 0 {
        let t = step(&s.p, budget)?;
        let (v2, _) = verdict(&s.p, &t.a_prime)?;
        Some(SecondStage { ad_dm1: t.ad_p, dm1: t.p, d_prime: t.a_prime, verdict: v2 })
    } else {
        None
    };
    let parametrization = (v1 == Verdict::Zero).then(|| s.p.clone());
    Ok(ParametrizabilityReport {
        d1,
        ad_d1: s.ad_a,
        ad_d: s.ad_p,
        d: s.p,
        d1_prime: s.a_prime,
        verdict_ext1: v1,
        witnesses,
        ext2,
        parametrization,
    })
}

/// Torsion elements of the module presented by `d1`: the extra rows of
/// `CC(D)` with their annihilators. Empty when `d1` is parametrizable.
pub fn torsion_witnesses(d1: &OperatorMatrix) -> Result<Vec<TorsionWitness>> {
    Ok(five_step_test(d1, Stages::Ext1)?.witnesses)
}

#[derive(Clone, Debug)]
pub struct MinimalParametrization {
    pub op: OperatorMatrix,
    /// `CC(op)`, equal as a module to `CC` of the original operator.
    pub cc: OperatorMatrix,
    /// Differential rank of the parametrized module.
    pub rank: usize,
}

/// Remove the potentials in `drop` from a parametrization and check that
/// what remains still parametrizes the same operator.
pub fn minimal_parametrization(d: &OperatorMatrix, drop: &[usize]) -> Result<MinimalParametrization> {
    if let Some(&j) = drop.iter().find(|&&j| j >= d.cols()) {
        return Err(Error::Invalid(format!("potential {} out of range", j + 1)));
    }
    let budget = Budget::default();
    let d = as_operator(d.clone());
    let d1 = syzygies_with(&d, budget)?.cc_matrix;
    let keep: Vec<usize> = (0..d.cols()).filter(|j| !drop.contains(j)).collect();
    let reduced = d.select_cols(&keep);
    let cc = syzygies_with(&reduced, budget)?.cc_matrix;
    let same = if d1.rows() == 0 || cc.rows() == 0 {
        d1.rows() == cc.rows()
    } else {
        module_compare(&d1, &cc)? == ModuleComparison::Equal
    };
    if !same {
        let f = d.field();
        let extra: Vec<String> =
            (0..cc.rows()).map(|i| render_row(f, cc.row(i), &d.row_labels)).collect();
        return Err(Error::NotAParametrizationAfterDrop(format!(
            "compatibility conditions grow to {} rows: {}",
            cc.rows(),
            extra.join("; ")
        )));
    }
    let rank = d1.cols() - if d1.rows() == 0 { 0 } else { diff_rank(&d1)? };
    let op_rank = if reduced.is_zero() { 0 } else { diff_rank(&reduced)? };
    if op_rank != rank {
        return Err(Error::Invalid(format!("rank mismatch: module rank {rank}, image rank {op_rank}")));
    }
    Ok(MinimalParametrization { op: reduced, cc, rank })
}

#[derive(Clone, Debug)]
pub enum Projectivity {
    Projective,
    NotProjective {
        /// Components `λ_j` of the adjoint not forced to vanish.
        uncovered: Vec<usize>,
        torsion: Vec<TorsionWitness>,
    },
}

impl Projectivity {
    pub fn is_projective(&self) -> bool {
        matches!(self, Projectivity::Projective)
    }
}

/// Projectivity of the module presented by a formally surjective `d`:
/// projective exactly when `ad(d)` is injective, i.e. when the rows of
/// `ad(d)` generate every unit vector. A module with torsion is reported not
/// projective even when `d` has compatibility conditions.
pub fn projectivity_check(d: &OperatorMatrix) -> Result<Projectivity> {
    let d = as_operator(d.clone());
    let budget = Budget::default();
    let cc = syzygies_with(&d, budget)?.cc_matrix;
    if cc.rows() > 0 {
        let torsion = torsion_witnesses(&d)?;
        if torsion.is_empty() {
            return Err(Error::NotSurjective(format!("{} compatibility conditions", cc.rows())));
        }
        return Ok(Projectivity::NotProjective { uncovered: Vec::new(), torsion });
    }
    let ad = as_operator(d.adjoint()?);
    let g = groebner(&ad)?;
    let p = d.rows();
    let mut uncovered = Vec::new();
    for j in 0..p {
        let unit: Vec<DiffOperator> = (0..p).map(|k| if k == j { DiffOperator::one() } else { DiffOperator::zero() }).collect();
        if !g.contains_row(&unit)? {
            uncovered.push(j);
        }
    }
    if uncovered.is_empty() {
        return Ok(Projectivity::Projective);
    }
    let torsion = torsion_witnesses(&d)?;
    Ok(Projectivity::NotProjective { uncovered, torsion })
}
