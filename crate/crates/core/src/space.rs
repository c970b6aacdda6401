//! Finite sample spaces with strictly positive point masses.

use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_traits::One;

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

/// Comparison thresholds used by the float backend.
///
/// `cmp` governs equality tests (component detection, integer levels,
/// independence residuals); `band` governs support detection in band
/// projections and defaults to exact zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub cmp: f64,
    pub band: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { cmp: 1e-9, band: 0.0 }
    }
}

static NEXT_SPACE_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug)]
struct SpaceInner<S> {
    id: u64,
    labels: Vec<String>,
    masses: Vec<S>,
    total: S,
    subnormalized: bool,
    tol: Tolerances,
}

/// A finite labelled point set with positive masses summing to at most one.
///
/// Cheap to clone. Elements built on a space remember its identity; a space
/// converted to another backend keeps that identity.
#[derive(Debug, Clone)]
pub struct SampleSpace<S> {
    inner: Arc<SpaceInner<S>>,
}

impl<S: Scalar> SampleSpace<S> {
    pub fn new<L: Into<String>>(labels: Vec<L>, masses: Vec<S>) -> Result<Self> {
        Self::with_tolerances(labels, masses, Tolerances::default())
    }

    pub fn with_tolerances<L: Into<String>>(
        labels: Vec<L>,
        masses: Vec<S>,
        tol: Tolerances,
    ) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::EmptySpace);
        }
        if labels.len() != masses.len() {
            return Err(Error::LengthMismatch {
                labels: labels.len(),
                masses: masses.len(),
            });
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        for (l, m) in labels.iter().zip(&masses) {
            if *m <= S::zero() {
                return Err(Error::NonpositiveMass(l.clone()));
            }
        }
        let total = masses.iter().fold(S::zero(), |acc, m| acc + m.clone());
        let one = S::one();
        if total > one && !total.approx_eq(&one, tol.cmp) {
            return Err(Error::MassExceedsOne);
        }
        let subnormalized = total < one && !total.approx_eq(&one, tol.cmp);
        Ok(SampleSpace {
            inner: Arc::new(SpaceInner {
                id: NEXT_SPACE_ID.fetch_add(1, Ordering::Relaxed),
                labels,
                masses,
                total,
                subnormalized,
                tol,
            }),
        })
    }

    pub fn len(&self) -> usize {
        self.inner.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.inner.labels
    }

    pub fn masses(&self) -> &[S] {
        &self.inner.masses
    }

    pub fn mass(&self, point: usize) -> &S {
        &self.inner.masses[point]
    }

    pub fn total_mass(&self) -> &S {
        &self.inner.total
    }

    pub fn is_subnormalized(&self) -> bool {
        self.inner.subnormalized
    }

    pub fn tolerances(&self) -> Tolerances {
        self.inner.tol
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.inner.labels.iter().position(|l| l == label)
    }

    /// Identity shared across backend conversions.
    pub fn id(&self) -> u64 {
        self.inner.id
    }

    pub fn same_as(&self, other: &SampleSpace<S>) -> bool {
        self.inner.id == other.inner.id
    }

    /// Same points, same identity, masses converted to the float backend.
    pub fn to_f64(&self) -> SampleSpace<f64> {
        let masses: Vec<f64> = self.inner.masses.iter().map(Scalar::to_f64).collect();
        let total = masses.iter().sum();
        SampleSpace {
            inner: Arc::new(SpaceInner {
                id: self.inner.id,
                labels: self.inner.labels.clone(),
                masses,
                total,
                subnormalized: self.inner.subnormalized,
                tol: self.inner.tol,
            }),
        }
    }

    /// Copy of this space (new identity) with different float tolerances.
    pub fn with_tol(&self, tol: Tolerances) -> Self {
        SampleSpace {
            inner: Arc::new(SpaceInner {
                id: NEXT_SPACE_ID.fetch_add(1, Ordering::Relaxed),
                labels: self.inner.labels.clone(),
                masses: self.inner.masses.clone(),
                total: self.inner.total.clone(),
                subnormalized: self.inner.subnormalized,
                tol,
            }),
        }
    }
}

impl SampleSpace<Rational> {
    /// Uniform space on `n` points labelled `1..=n`.
    pub fn uniform(n: usize) -> Result<Self> {
        let m = Rational::one() / Rational::from_integer(n.into());
        let labels: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
        Self::new(labels, vec![m; n])
    }
}
