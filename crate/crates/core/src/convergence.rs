//! Truncations of infinite families: convergence of `P_T[s_n ∈ A]` and the
//! infinite sum law checked level by level with the running supremum.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lsn::{conditional_prob, tv_by_block, BernoulliFamily, BOUND_SLACK};
use crate::natset::NatSet;
use crate::poisson::measure;
use crate::scalar::Scalar;

/// One truncation level `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationLevel {
    pub n: usize,
    /// `‖P_T[s_n ∈ A] − P_T[s_{n−1} ∈ A]‖∞` over the points both levels
    /// share; `None` at the first level.
    pub difference: Option<f64>,
    /// Largest `|P_T[s_n ∈ A] − Po(A; T s_n)|` over blocks.
    pub max_discrepancy: f64,
    /// Largest total variation distance over blocks.
    pub max_tv: f64,
    /// Whether every block satisfied `TV ≤ sup_{i<n} h_i`.
    pub bound_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub set: NatSet,
    pub levels: Vec<TruncationLevel>,
    /// Smallest `n` such that every later level differs from its predecessor
    /// by less than `tol`.
    pub converged_at: Option<usize>,
    pub converged: bool,
    /// Whether the bound held at every level.
    pub bound_holds: bool,
}

impl ConvergenceReport {
    pub fn ensure_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NotConverged(self.levels.len()))
        }
    }
}

/// Runs `generator(n)` for `n = 1..=n_max`, where `generator(n)` yields the
/// first `n` members of the family (on a space that may grow with `n`).
///
/// Points are matched across levels by label. The report is returned even
/// when the differences never fall below `tol`.
pub fn truncated_lsn<S, G>(generator: G, a: &NatSet, n_max: usize, tol: f64) -> Result<ConvergenceReport>
where
    S: Scalar,
    G: Fn(usize) -> Result<BernoulliFamily<S>>,
{
    if n_max < 2 {
        return Err(Error::BadIndices("truncation needs n_max >= 2".into()));
    }
    let mut levels = Vec::with_capacity(n_max);
    let mut prev: Option<HashMap<String, f64>> = None;
    // running pointwise sup of the h_i, by label
    let mut running: HashMap<String, f64> = HashMap::new();
    for n in 1..=n_max {
        let fam = generator(n)?;
        let t = fam.sigma();
        let labels = t.space().labels();
        for h in fam.intensities() {
            for (p, l) in labels.iter().enumerate() {
                let e = running.entry(l.clone()).or_insert(0.0);
                *e = e.max(h.value(p).to_f64());
            }
        }
        let prob = conditional_prob(&fam, a)?;
        let cur: HashMap<String, f64> = labels
            .iter()
            .enumerate()
            .map(|(p, l)| (l.clone(), prob.value(p).to_f64()))
            .collect();
        let difference = prev.as_ref().map(|old| {
            cur.iter()
                .filter_map(|(l, v)| old.get(l).map(|o| (v - o).abs()))
                .fold(0.0, f64::max)
        });

        let tvs = tv_by_block(&fam)?;
        let hv = t.block_values(fam.h());
        let pv = t.block_values(&prob);
        let mut max_discrepancy = 0.0f64;
        let mut max_tv = 0.0f64;
        let mut bound_holds = true;
        for b in 0..t.num_blocks() {
            let d = (pv[b].to_f64() - measure(a, hv[b].to_f64())).abs();
            let sup = t.blocks()[b]
                .iter()
                .map(|&p| running[&labels[p]])
                .fold(0.0, f64::max);
            max_discrepancy = max_discrepancy.max(d);
            max_tv = max_tv.max(tvs[b].tv);
            if tvs[b].tv.max(d) > sup + BOUND_SLACK {
                bound_holds = false;
            }
        }
        levels.push(TruncationLevel {
            n,
            difference,
            max_discrepancy,
            max_tv,
            bound_holds,
        });
        prev = Some(cur);
    }
    // the level whose value every later level stays within `tol` of
    let mut converged_at = None;
    for k in (1..levels.len()).rev() {
        match levels[k].difference {
            Some(d) if d < tol => converged_at = Some(levels[k - 1].n),
            _ => break,
        }
    }
    Ok(ConvergenceReport {
        set: a.clone(),
        converged: converged_at.is_some(),
        bound_holds: levels.iter().all(|l| l.bound_holds),
        converged_at,
        levels,
    })
}
