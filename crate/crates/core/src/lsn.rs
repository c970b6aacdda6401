//! Sums of conditionally independent components: conditional laws, the
//! conditional Stein identity, and the finite sum law of small numbers.

use std::collections::HashMap;

use serde::Serialize;

use crate::condexp::{decompose_levels, CondExp, IndependenceReport};
use crate::element::LatticeElement;
use crate::error::{Error, Result};
use crate::natset::NatSet;
use crate::poisson::{measure, pmf, poisson_measure};
use crate::scalar::Scalar;
use crate::stein::{g_table, SteinConfig};

/// Slack used when comparing a discrepancy with its bound.
pub const BOUND_SLACK: f64 = 1e-9;

/// Components `q_0, …, q_{n−1}` of `u` together with `h_i = T q_i`,
/// `w = Σ q_i` and `H = T w`.
///
/// Construction does not require conditional independence; see
/// [`BernoulliFamily::independence`].
#[derive(Debug, Clone)]
pub struct BernoulliFamily<S> {
    sigma: CondExp<S>,
    qs: Vec<LatticeElement<S>>,
    hs: Vec<LatticeElement<S>>,
    w: LatticeElement<S>,
    h: LatticeElement<S>,
}

impl<S: Scalar> BernoulliFamily<S> {
    pub fn new(sigma: &CondExp<S>, qs: Vec<LatticeElement<S>>) -> Result<Self> {
        let space = sigma.space();
        for (i, q) in qs.iter().enumerate() {
            if !q.space().same_as(space) {
                return Err(Error::SpaceMismatch);
            }
            if !q.is_component() {
                return Err(Error::NotAComponent(i));
            }
        }
        let hs = qs.iter().map(|q| sigma.apply(q)).collect::<Result<Vec<_>>>()?;
        let w = qs
            .iter()
            .try_fold(LatticeElement::zero(space), |acc, q| acc.add(q))?;
        let h = sigma.apply(&w)?;
        Ok(BernoulliFamily {
            sigma: sigma.clone(),
            qs,
            hs,
            w,
            h,
        })
    }

    pub fn sigma(&self) -> &CondExp<S> {
        &self.sigma
    }

    pub fn components(&self) -> &[LatticeElement<S>] {
        &self.qs
    }

    /// `h_i = T q_i`.
    pub fn intensities(&self) -> &[LatticeElement<S>] {
        &self.hs
    }

    pub fn w(&self) -> &LatticeElement<S> {
        &self.w
    }

    /// `H = T w`.
    pub fn h(&self) -> &LatticeElement<S> {
        &self.h
    }

    pub fn len(&self) -> usize {
        self.qs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qs.is_empty()
    }

    /// `w_i = w − q_i`.
    pub fn w_without(&self, i: usize) -> Result<LatticeElement<S>> {
        let q = self.qs.get(i).ok_or(Error::BadIndex {
            index: i,
            len: self.qs.len(),
        })?;
        self.w.sub(q)
    }

    /// The family restricted to its first `n` components.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        Self::new(&self.sigma, self.qs[..n.min(self.qs.len())].to_vec())
    }

    pub fn independence(&self) -> Result<IndependenceReport> {
        self.sigma.family_conditionally_independent(&self.qs)
    }

    pub fn to_f64(&self) -> BernoulliFamily<f64> {
        let sigma = self.sigma.to_f64();
        let space = sigma.space().clone();
        let qs = self.qs.iter().map(|q| q.to_f64_on(&space)).collect();
        BernoulliFamily::new(&sigma, qs).expect("converted components stay valid")
    }
}

/// The conditional law of `w`: `Tr_j` for `j = 0..=κ`.
#[derive(Debug, Clone)]
pub struct ConditionalPmf<S> {
    levels: Vec<LatticeElement<S>>,
}

impl<S: Scalar> ConditionalPmf<S> {
    /// `Tr_0, …, Tr_κ`.
    pub fn levels(&self) -> &[LatticeElement<S>] {
        &self.levels
    }

    /// `κ`, the largest value taken by `w`.
    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }

    /// `P_T[w ∈ A] = Σ_{j ∈ A} Tr_j`, with cofinite `A` taken as
    /// `u − Σ_{j ∉ A} Tr_j`.
    pub fn prob(&self, a: &NatSet) -> LatticeElement<S> {
        let space = self.levels[0].space();
        let sum_over = |keep: &dyn Fn(usize) -> bool| {
            self.levels
                .iter()
                .enumerate()
                .filter(|(j, _)| keep(*j))
                .fold(LatticeElement::zero(space), |acc, (_, t)| {
                    acc.add(t).expect("levels share a space")
                })
        };
        if a.is_finite() {
            sum_over(&|j| a.contains(j))
        } else {
            let missing = sum_over(&|j| !a.contains(j));
            LatticeElement::unit(space).sub(&missing).expect("levels share a space")
        }
    }
}

pub fn conditional_pmf<S: Scalar>(fam: &BernoulliFamily<S>) -> Result<ConditionalPmf<S>> {
    let levels = decompose_levels(&fam.w)?
        .iter()
        .map(|r| fam.sigma.apply(r))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConditionalPmf { levels })
}

/// `P_T[w ∈ A]`.
pub fn conditional_prob<S: Scalar>(fam: &BernoulliFamily<S>, a: &NatSet) -> Result<LatticeElement<S>> {
    Ok(conditional_pmf(fam)?.prob(a))
}

// ---------------------------------------------------------------------------
// functional calculus for g

/// `g(f + k u, H, A) = Σ_j r_j g(j + k, H, A)` for integer valued `f ≥ 0`
/// with level indicators `r_j`.
fn g_of_levels(
    levels: &[LatticeElement<f64>],
    shift: usize,
    h: &LatticeElement<f64>,
    a: &NatSet,
    cfg: &SteinConfig,
) -> Result<LatticeElement<f64>> {
    let top = levels.len() - 1 + shift;
    if top > cfg.j_max {
        return Err(Error::JTooLarge { j: top, j_max: cfg.j_max });
    }
    if !h.is_nonnegative() {
        return Err(Error::NegativeParameter);
    }
    let band = h.support_component();
    let mut memo: HashMap<u64, Vec<f64>> = HashMap::new();
    Ok(LatticeElement::from_fn(h.space(), |p| {
        let x = if *band.value(p) == 0.0 { 0.0 } else { *h.value(p) };
        let j = levels
            .iter()
            .position(|r| *r.value(p) > 0.5)
            .expect("levels cover every point");
        memo.entry(x.to_bits()).or_insert_with(|| g_table(top, x, a, cfg))[j + shift]
    }))
}

/// `g(f, H, A)` for an integer valued `f ≥ 0`.
pub fn g_of(
    f: &LatticeElement<f64>,
    h: &LatticeElement<f64>,
    a: &NatSet,
    cfg: &SteinConfig,
) -> Result<LatticeElement<f64>> {
    g_of_levels(&decompose_levels(f)?, 0, h, a, cfg)
}

/// `g(f + k u, H, A)` through the levels of `f`.
pub fn g_of_shifted(
    f: &LatticeElement<f64>,
    k: usize,
    h: &LatticeElement<f64>,
    a: &NatSet,
    cfg: &SteinConfig,
) -> Result<LatticeElement<f64>> {
    g_of_levels(&decompose_levels(f)?, k, h, a, cfg)
}

/// `‖T(H g(w+u, H, A) − w g(w, H, A)) + Po(A; H) − P_T[w ∈ A]‖∞`.
///
/// The identity behind this residual holds for any sum of components, so
/// independence is not required.
pub fn stein_identity_residual<S: Scalar>(
    fam: &BernoulliFamily<S>,
    a: &NatSet,
    cfg: &SteinConfig,
) -> Result<f64> {
    let fam = fam.to_f64();
    let t = &fam.sigma;
    let h = &fam.h;
    let levels = decompose_levels(&fam.w)?;
    let g_w = g_of_levels(&levels, 0, h, a, cfg)?;
    let g_next = g_of_levels(&levels, 1, h, a, cfg)?;
    let inner = h.mul(&g_next)?.sub(&fam.w.mul(&g_w)?)?;
    let lhs = t.apply(&inner)?;
    let po = poisson_measure(a, h)?;
    let prob = conditional_prob(&fam, a)?;
    lhs.add(&po)?.distance(&prob)
}

/// Residuals of the two factorizations
/// `T(q_i g(w + k u)) = h_i T g(w_i + (k+1) u)` and
/// `T(q_i g(w_i + k u)) = h_i T g(w_i + k u)`; returns the larger.
pub fn check_independence_shift<S: Scalar>(
    fam: &BernoulliFamily<S>,
    i: usize,
    k: usize,
    a: &NatSet,
    cfg: &SteinConfig,
) -> Result<f64> {
    if i >= fam.len() {
        return Err(Error::BadIndex { index: i, len: fam.len() });
    }
    let fam = fam.to_f64();
    let t = &fam.sigma;
    let h = &fam.h;
    let q = &fam.qs[i];
    let hi = &fam.hs[i];
    let wi = fam.w_without(i)?;

    let lhs1 = t.apply(&q.mul(&g_of_shifted(&fam.w, k, h, a, cfg)?)?)?;
    let rhs1 = hi.mul(&t.apply(&g_of_shifted(&wi, k + 1, h, a, cfg)?)?)?;
    let g_wi = g_of_shifted(&wi, k, h, a, cfg)?;
    let lhs2 = t.apply(&q.mul(&g_wi)?)?;
    let rhs2 = hi.mul(&t.apply(&g_wi)?)?;
    Ok(lhs1.distance(&rhs1)?.max(lhs2.distance(&rhs2)?))
}

/// `‖q g(w, H, A) − g(q w, H, A)‖∞` for a component `q`.
pub fn check_component_locality<S: Scalar>(
    fam: &BernoulliFamily<S>,
    q: &LatticeElement<S>,
    a: &NatSet,
    cfg: &SteinConfig,
) -> Result<f64> {
    if !q.is_component() {
        return Err(Error::NotAComponent(0));
    }
    let fam = fam.to_f64();
    let q = q.to_f64_on(fam.sigma.space());
    let h = &fam.h;
    let lhs = q.mul(&g_of(&fam.w, h, a, cfg)?)?;
    let rhs = g_of(&q.mul(&fam.w)?, h, a, cfg)?;
    lhs.distance(&rhs)
}

/// `‖g(w + k u, H, A) − Σ_j r_j g(j + k, H, A)‖∞`, computing the left side
/// from the levels of `w + k u` itself.
pub fn check_shift_identity<S: Scalar>(
    fam: &BernoulliFamily<S>,
    k: usize,
    a: &NatSet,
    cfg: &SteinConfig,
) -> Result<f64> {
    let fam = fam.to_f64();
    let h = &fam.h;
    let u = LatticeElement::unit(fam.sigma.space());
    let shifted = fam.w.add(&u.scale(&(k as f64)))?;
    let direct = g_of(&shifted, h, a, cfg)?;
    let via_levels = g_of_shifted(&fam.w, k, h, a, cfg)?;
    direct.distance(&via_levels)
}

// ---------------------------------------------------------------------------
// bounds and discrepancies

/// `sup_i h_i` (in the family's backend) and the refined bound
/// `sup_i h_i (u − e^{−H})`.
#[derive(Debug, Clone)]
pub struct LsnBounds<S> {
    pub sup_h: LatticeElement<S>,
    pub refined: LatticeElement<f64>,
}

pub fn lsn_bounds<S: Scalar>(fam: &BernoulliFamily<S>) -> Result<LsnBounds<S>> {
    let first = fam.hs.first().ok_or(Error::EmptyFamily)?;
    let sup_h = fam.hs[1..]
        .iter()
        .try_fold(first.clone(), |acc, h| acc.sup(h))?;
    let hf = fam.h.to_f64();
    let refined = LatticeElement::from_fn(hf.space(), |p| {
        sup_h.value(p).to_f64() * -(-hf.value(p)).exp_m1()
    });
    Ok(LsnBounds { sup_h, refined })
}

/// Per-block total variation distance between the conditional law of `w`
/// and `Po(·; H(b))`, with the set attaining it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockTv {
    pub block: usize,
    pub tv: f64,
    /// `{j ≤ κ : Tr_j(b) > Po(j; H(b))}`.
    pub maximizer: NatSet,
}

/// `TV(b) = Σ_{j ≤ κ} (Tr_j(b) − Po(j; H(b)))⁺`. The Poisson tail beyond
/// `κ` only ever contributes to the negative part.
pub fn tv_by_block<S: Scalar>(fam: &BernoulliFamily<S>) -> Result<Vec<BlockTv>> {
    let pmf_w = conditional_pmf(fam)?;
    let t = &fam.sigma;
    let hv = t.block_values(&fam.h);
    let levels: Vec<Vec<S>> = pmf_w.levels.iter().map(|l| t.block_values(l)).collect();
    Ok((0..t.num_blocks())
        .map(|b| {
            let lambda = hv[b].to_f64();
            let mut tv = 0.0;
            let mut members = Vec::new();
            for (j, lv) in levels.iter().enumerate() {
                let d = lv[b].to_f64() - pmf(j, lambda);
                if d > 0.0 {
                    tv += d;
                    members.push(j);
                }
            }
            BlockTv {
                block: b,
                tv,
                maximizer: NatSet::finite(members),
            }
        })
        .collect())
}

/// `TV(b)` as a block-constant element.
pub fn tv_distance<S: Scalar>(fam: &BernoulliFamily<S>) -> Result<LatticeElement<f64>> {
    let rows = tv_by_block(fam)?;
    let sigma = fam.sigma.to_f64();
    let values: Vec<f64> = rows.iter().map(|r| r.tv).collect();
    Ok(sigma.from_block_values(&values))
}

/// One block of a [`DiscrepancyReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockDiscrepancy {
    pub block: usize,
    pub labels: Vec<String>,
    /// The set the row is about: the given `A`, or the TV-maximizing set.
    pub set: NatSet,
    pub prob: f64,
    pub poisson: f64,
    pub difference: f64,
    pub tv: f64,
    pub h: f64,
    pub sup_h: f64,
    pub refined: f64,
    /// `H(b)`, `sup_i h_i(b)` and `P_T[w ∈ A](b)` rendered in the family's
    /// backend (`p/q` on rationals).
    pub h_exact: String,
    pub sup_h_exact: String,
    pub prob_exact: Option<String>,
    pub bound_satisfied: bool,
    pub refined_satisfied: bool,
}

/// The finite sum law of small numbers, evaluated block by block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscrepancyReport {
    /// `None` when each row reports the supremum over all sets.
    pub set: Option<NatSet>,
    pub rows: Vec<BlockDiscrepancy>,
    pub independence: IndependenceReport,
    pub bound_satisfied: bool,
    pub refined_satisfied: bool,
}

impl DiscrepancyReport {
    /// `Err(NotIndependent)` when the family failed the independence test.
    pub fn ensure_independent(&self) -> Result<()> {
        if self.independence.is_independent {
            Ok(())
        } else {
            Err(Error::NotIndependent(self.independence.max_residual))
        }
    }
}

/// Compares `P_T[w ∈ A]` with `Po(A; H)` on every block, or the total
/// variation distance when `a` is `None`, against `sup_i h_i` and the
/// refined bound. The report is produced for dependent families too.
pub fn verify_lsn<S: Scalar>(fam: &BernoulliFamily<S>, a: Option<&NatSet>) -> Result<DiscrepancyReport> {
    let independence = fam.independence()?;
    let bounds = lsn_bounds(fam)?;
    let t = &fam.sigma;
    let tvs = tv_by_block(fam)?;
    let pmf_w = conditional_pmf(fam)?;
    let hv = t.block_values(&fam.h);
    let sup_v = t.block_values(&bounds.sup_h);
    let refined_v = t.to_f64().block_values(&bounds.refined);

    let mut rows = Vec::with_capacity(t.num_blocks());
    for b in 0..t.num_blocks() {
        let lambda = hv[b].to_f64();
        let set = a.cloned().unwrap_or_else(|| tvs[b].maximizer.clone());
        let prob_s = t.block_values(&pmf_w.prob(&set))[b].clone();
        let prob = prob_s.to_f64();
        let poisson = measure(&set, lambda);
        let difference = (prob - poisson).abs();
        let sup_h = sup_v[b].to_f64();
        let refined = refined_v[b];
        let worst = difference.max(tvs[b].tv);
        rows.push(BlockDiscrepancy {
            block: b,
            labels: t.block_labels(b).into_iter().map(String::from).collect(),
            set,
            prob,
            poisson,
            difference,
            tv: tvs[b].tv,
            h: lambda,
            sup_h,
            refined,
            h_exact: hv[b].render(),
            sup_h_exact: sup_v[b].render(),
            prob_exact: S::EXACT.then(|| prob_s.render()),
            bound_satisfied: worst <= sup_h + BOUND_SLACK,
            refined_satisfied: worst <= refined + BOUND_SLACK,
        });
    }
    Ok(DiscrepancyReport {
        set: a.cloned(),
        bound_satisfied: rows.iter().all(|r| r.bound_satisfied),
        refined_satisfied: rows.iter().all(|r| r.refined_satisfied),
        rows,
        independence,
    })
}
