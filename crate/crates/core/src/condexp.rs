//! Partition-generated sub-σ-algebras and their conditional expectation
//! operators, with the averaging, band-domination and conditional
//! independence checks built on them.

use std::sync::Arc;

use serde::Serialize;

use crate::element::LatticeElement;
use crate::error::{Error, Result};
use crate::poisson::poisson_pmf;
use crate::scalar::Scalar;
use crate::space::SampleSpace;

#[derive(Debug)]
struct SigmaInner<S> {
    space: SampleSpace<S>,
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
    block_mass: Vec<S>,
}

/// A partition of the sample space into blocks of positive mass, together
/// with the conditional expectation `T` it induces (blockwise weighted
/// average).
#[derive(Debug, Clone)]
pub struct CondExp<S> {
    inner: Arc<SigmaInner<S>>,
}

/// Alias kept for readability where the σ-algebra rather than the operator
/// is meant.
pub type PartitionSigma<S> = CondExp<S>;

impl<S: Scalar> CondExp<S> {
    /// Builds the partition from blocks of point indices.
    pub fn new(space: &SampleSpace<S>, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let n = space.len();
        let mut block_of = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::EmptyBlock(b));
            }
            for &p in block {
                if p >= n {
                    return Err(Error::UnknownLabel(format!("#{p}")));
                }
                if block_of[p] != usize::MAX {
                    return Err(Error::BlocksOverlap(space.labels()[p].clone()));
                }
                block_of[p] = b;
            }
        }
        if let Some(p) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::BlocksDoNotCover(space.labels()[p].clone()));
        }
        let block_mass = blocks
            .iter()
            .map(|block| {
                block
                    .iter()
                    .fold(S::zero(), |acc, &p| acc + space.mass(p).clone())
            })
            .collect();
        Ok(CondExp {
            inner: Arc::new(SigmaInner {
                space: space.clone(),
                blocks,
                block_of,
                block_mass,
            }),
        })
    }

    /// Builds the partition from blocks of point labels.
    pub fn from_labels<L: AsRef<str>>(space: &SampleSpace<S>, blocks: &[Vec<L>]) -> Result<Self> {
        let idx = blocks
            .iter()
            .map(|block| {
                block
                    .iter()
                    .map(|l| {
                        space
                            .index_of(l.as_ref())
                            .ok_or_else(|| Error::UnknownLabel(l.as_ref().to_string()))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(space, idx)
    }

    /// The trivial σ-algebra: one block, `T` is the (normalized) expectation.
    pub fn trivial(space: &SampleSpace<S>) -> Self {
        Self::new(space, vec![(0..space.len()).collect()]).expect("one block always valid")
    }

    /// The full σ-algebra: singleton blocks, `T` is the identity.
    pub fn discrete(space: &SampleSpace<S>) -> Self {
        Self::new(space, (0..space.len()).map(|p| vec![p]).collect()).expect("singletons always valid")
    }

    pub fn space(&self) -> &SampleSpace<S> {
        &self.inner.space
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.inner.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.inner.blocks.len()
    }

    pub fn block_of(&self, point: usize) -> usize {
        self.inner.block_of[point]
    }

    pub fn block_mass(&self, block: usize) -> &S {
        &self.inner.block_mass[block]
    }

    /// Labels of a block's points.
    pub fn block_labels(&self, block: usize) -> Vec<&str> {
        self.inner.blocks[block]
            .iter()
            .map(|&p| self.inner.space.labels()[p].as_str())
            .collect()
    }

    fn check(&self, f: &LatticeElement<S>) -> Result<()> {
        if f.space().same_as(&self.inner.space) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    /// Per-block weighted averages of `f`.
    pub fn block_averages(&self, f: &LatticeElement<S>) -> Result<Vec<S>> {
        self.check(f)?;
        let sp = &self.inner.space;
        Ok(self
            .inner
            .blocks
            .iter()
            .zip(&self.inner.block_mass)
            .map(|(block, m)| {
                let total = block.iter().fold(S::zero(), |acc, &p| {
                    acc + f.value(p).clone() * sp.mass(p).clone()
                });
                total / m.clone()
            })
            .collect())
    }

    /// Lifts per-block values to a block-constant element.
    pub fn from_block_values(&self, values: &[S]) -> LatticeElement<S> {
        LatticeElement::from_fn(&self.inner.space, |p| values[self.inner.block_of[p]].clone())
    }

    /// Applies `T`.
    pub fn apply(&self, f: &LatticeElement<S>) -> Result<LatticeElement<S>> {
        let avg = self.block_averages(f)?;
        Ok(self.from_block_values(&avg))
    }

    /// Value of a block-constant element on each block (first point).
    pub fn block_values(&self, f: &LatticeElement<S>) -> Vec<S> {
        self.inner
            .blocks
            .iter()
            .map(|b| f.value(b[0]).clone())
            .collect()
    }

    /// Whether `f` lies in the range of `T`.
    pub fn is_block_constant(&self, f: &LatticeElement<S>) -> bool {
        let eps = self.inner.space.tolerances().cmp;
        self.inner.blocks.iter().all(|block| {
            let first = f.value(block[0]);
            block.iter().all(|&p| f.value(p).approx_eq(first, eps))
        })
    }

    /// `‖T(f·g) − f·Tg‖∞` for block-constant `f`.
    pub fn check_averaging(&self, f: &LatticeElement<S>, g: &LatticeElement<S>) -> Result<S> {
        self.check(f)?;
        self.check(g)?;
        if !self.is_block_constant(f) {
            return Err(Error::FNotInRange);
        }
        let lhs = self.apply(&f.mul(g)?)?;
        let rhs = f.mul(&self.apply(g)?)?;
        lhs.distance(&rhs)
    }

    /// Whether the support of `f ≥ 0` lies inside the support of `Tf`.
    pub fn check_band_domination(&self, f: &LatticeElement<S>) -> Result<bool> {
        self.check(f)?;
        if !f.is_nonnegative() {
            return Err(Error::NegativeInput);
        }
        let tf = self.apply(f)?;
        f.support_component().leq(&tf.support_component())
    }

    /// Pairwise conditional independence of two components:
    /// residual `‖T(pq) − Tp·Tq‖∞`.
    pub fn conditionally_independent(
        &self,
        p: &LatticeElement<S>,
        q: &LatticeElement<S>,
    ) -> Result<IndependenceReport> {
        self.check(p)?;
        self.check(q)?;
        if !p.is_component() {
            return Err(Error::NotAComponent(0));
        }
        if !q.is_component() {
            return Err(Error::NotAComponent(1));
        }
        let joint = self.apply(&p.mul(q)?)?;
        let prod = self.apply(p)?.mul(&self.apply(q)?)?;
        let residual = joint.distance(&prod)?;
        let independent = residual.is_negligible(self.inner.space.tolerances().cmp);
        Ok(IndependenceReport {
            is_independent: independent,
            max_residual: residual.to_f64(),
            exact: S::EXACT,
            witness: (!independent).then(|| IndependenceWitness {
                left: vec![0],
                right: vec![1],
                atoms: vec![true, true],
                block: None,
            }),
        })
    }

    /// Conditional independence of a family of components, tested by
    /// factorization of every atom product over every pair of disjoint
    /// nonempty index sets.
    ///
    /// Works from a per-block table of the masses of all partial atom
    /// assignments (`3^n` entries), so the cost is `O(5^n)` per block.
    pub fn family_conditionally_independent(
        &self,
        qs: &[LatticeElement<S>],
    ) -> Result<IndependenceReport> {
        let n = qs.len();
        if n > 16 {
            return Err(Error::TooManyComponents(n));
        }
        for (i, q) in qs.iter().enumerate() {
            self.check(q)?;
            if !q.is_component() {
                return Err(Error::NotAComponent(i));
            }
        }
        let eps = self.inner.space.tolerances().cmp;
        let half = S::from_f64(0.5).expect("0.5 representable");

        let mut max_residual = S::zero();
        let mut witness: Option<IndependenceWitness> = None;

        for (b, block) in self.inner.blocks.iter().enumerate() {
            // components constant on the block factorize against anything
            let active: Vec<usize> = (0..n)
                .filter(|&i| {
                    let first = *qs[i].value(block[0]) > half;
                    block.iter().any(|&p| (*qs[i].value(p) > half) != first)
                })
                .collect();
            let na = active.len();
            if na < 2 {
                continue;
            }
            let pow3: Vec<usize> = (0..=na).map(|k| 3usize.pow(k as u32)).collect();
            let size = pow3[na];
            // digit k of a code: 0 = unconstrained, 1 = q, 2 = u − q
            let mut table = vec![S::zero(); size];
            for &p in block {
                let code: usize = active
                    .iter()
                    .enumerate()
                    .map(|(k, &i)| if *qs[i].value(p) > half { pow3[k] } else { 2 * pow3[k] })
                    .sum();
                table[code] = table[code].clone() + self.inner.space.mass(p).clone();
            }
            for k in 0..na {
                for code in 0..size {
                    if (code / pow3[k]).is_multiple_of(3) {
                        table[code] = table[code + pow3[k]].clone() + table[code + 2 * pow3[k]].clone();
                    }
                }
            }
            let m = self.inner.block_mass[b].clone();
            let cond = |code: usize| table[code].clone() / m.clone();

            let full = 1usize << na;
            for left in 1..full {
                for right in (left + 1)..full {
                    if left & right != 0 {
                        continue;
                    }
                    let union = left | right;
                    let members: Vec<usize> = (0..na).filter(|k| union >> k & 1 == 1).collect();
                    for choice in 0..(1usize << members.len()) {
                        let mut cl = 0;
                        let mut cr = 0;
                        for (t, &k) in members.iter().enumerate() {
                            let digit = if choice >> t & 1 == 0 { pow3[k] } else { 2 * pow3[k] };
                            if left >> k & 1 == 1 {
                                cl += digit;
                            } else {
                                cr += digit;
                            }
                        }
                        let r = (cond(cl + cr) - cond(cl) * cond(cr)).abs();
                        if !r.is_negligible(eps) && witness.is_none() {
                            let pick = |mask: usize| -> Vec<usize> {
                                (0..na).filter(|k| mask >> k & 1 == 1).map(|k| active[k]).collect()
                            };
                            witness = Some(IndependenceWitness {
                                left: pick(left),
                                right: pick(right),
                                atoms: (0..members.len()).map(|t| choice >> t & 1 == 0).collect(),
                                block: Some(b),
                            });
                        }
                        if r > max_residual {
                            max_residual = r;
                        }
                    }
                }
            }
        }
        Ok(IndependenceReport {
            is_independent: max_residual.is_negligible(eps),
            max_residual: max_residual.to_f64(),
            exact: S::EXACT,
            witness,
        })
    }

    /// `T` on the float backend (same points, same partition).
    pub fn to_f64(&self) -> CondExp<f64> {
        let space = self.inner.space.to_f64();
        CondExp::new(&space, self.inner.blocks.clone()).expect("converted partition stays valid")
    }
}

/// Outcome of a conditional independence test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndependenceReport {
    pub is_independent: bool,
    pub max_residual: f64,
    /// Whether the residual was computed in exact arithmetic.
    pub exact: bool,
    pub witness: Option<IndependenceWitness>,
}

/// First factorization failure found: index sets `left`, `right`, the atom
/// choice for each member of `left ∪ right` in increasing index order
/// (`true` = `q_i`, `false` = `u − q_i`), and the offending block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndependenceWitness {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub atoms: Vec<bool>,
    pub block: Option<usize>,
}

/// Splits a non-negative integer valued `f` into its level indicators
/// `r_0, …, r_κ` with `f = Σ j r_j` and `Σ r_j = u`.
pub fn decompose_levels<S: Scalar>(f: &LatticeElement<S>) -> Result<Vec<LatticeElement<S>>> {
    let eps = f.space().tolerances().cmp;
    let levels = f
        .values()
        .iter()
        .map(|v| match v.as_integer(eps) {
            Some(k) if k >= 0 => Ok(k as usize),
            _ => Err(Error::NotIntegerValued),
        })
        .collect::<Result<Vec<usize>>>()?;
    let kappa = levels.iter().copied().max().unwrap_or(0);
    Ok((0..=kappa)
        .map(|j| {
            let points: Vec<usize> = (0..levels.len()).filter(|&p| levels[p] == j).collect();
            LatticeElement::indicator(f.space(), &points)
        })
        .collect())
}

/// How far an integer valued `f` is from being conditionally Poisson with
/// parameter `Tf`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonDeviation {
    pub max_deviation: f64,
    /// `‖T r_j − Po(j; Tf)‖∞` for `j = 0..=κ`.
    pub per_level: Vec<f64>,
    /// Whether `T(I − P_{|f − j u|})u` and `T r_j` coincided at every level.
    pub forms_agree: bool,
}

impl<S: Scalar> CondExp<S> {
    pub fn is_conditionally_poisson(&self, f: &LatticeElement<S>) -> Result<PoissonDeviation> {
        self.check(f)?;
        let levels = decompose_levels(f)?;
        let tf = self.apply(f)?;
        let h = tf.to_f64();
        let u = LatticeElement::unit(f.space());
        let eps = f.space().tolerances().cmp;
        let mut per_level = Vec::with_capacity(levels.len());
        let mut forms_agree = true;
        for (j, r) in levels.iter().enumerate() {
            let shifted = f.sub(&u.scale(&<S as Scalar>::from_usize(j)))?;
            let off = u.sub(&shifted.abs().support_component())?;
            let def_form = self.apply(&off)?;
            let level_form = self.apply(r)?;
            if !def_form.approx_eq(&level_form, eps)? {
                forms_agree = false;
            }
            let po = poisson_pmf(j, &h)?;
            per_level.push(level_form.to_f64_on(h.space()).distance(&po)?);
        }
        let max_deviation = per_level.iter().copied().fold(0.0, f64::max);
        Ok(PoissonDeviation {
            max_deviation,
            per_level,
            forms_agree,
        })
    }
}
