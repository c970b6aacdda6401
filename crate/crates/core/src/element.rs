//! Real functions on a finite sample space: the Riesz space with weak order
//! unit `u = 1`, its pointwise f-algebra product, band projections,
//! components and canonical partial inverses.

use std::fmt;


use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};
use crate::space::SampleSpace;

#[derive(Debug, Clone)]
pub struct LatticeElement<S> {
    space: SampleSpace<S>,
    values: Vec<S>,
}

impl<S: Scalar> PartialEq for LatticeElement<S> {
    fn eq(&self, other: &Self) -> bool {
        self.space.same_as(&other.space) && self.values == other.values
    }
}

impl<S: Scalar> fmt::Display for LatticeElement<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", v.render())?;
        }
        write!(f, ")")
    }
}

impl<S: Scalar> LatticeElement<S> {
    pub fn from_values(space: &SampleSpace<S>, values: Vec<S>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::LengthMismatch {
                labels: space.len(),
                masses: values.len(),
            });
        }
        Ok(LatticeElement {
            space: space.clone(),
            values,
        })
    }

    pub fn from_fn(space: &SampleSpace<S>, f: impl FnMut(usize) -> S) -> Self {
        LatticeElement {
            space: space.clone(),
            values: (0..space.len()).map(f).collect(),
        }
    }

    pub fn constant(space: &SampleSpace<S>, c: S) -> Self {
        LatticeElement {
            space: space.clone(),
            values: vec![c; space.len()],
        }
    }

    pub fn zero(space: &SampleSpace<S>) -> Self {
        Self::constant(space, S::zero())
    }

    /// The weak order unit.
    pub fn unit(space: &SampleSpace<S>) -> Self {
        Self::constant(space, S::one())
    }

    /// Indicator of a set of point indices.
    pub fn indicator(space: &SampleSpace<S>, points: &[usize]) -> Self {
        let mut values = vec![S::zero(); space.len()];
        for &p in points {
            values[p] = S::one();
        }
        LatticeElement {
            space: space.clone(),
            values,
        }
    }

    /// Indicator of a set of points given by label.
    pub fn indicator_of_labels<L: AsRef<str>>(space: &SampleSpace<S>, labels: &[L]) -> Result<Self> {
        let idx = labels
            .iter()
            .map(|l| {
                space
                    .index_of(l.as_ref())
                    .ok_or_else(|| Error::UnknownLabel(l.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::indicator(space, &idx))
    }

    pub fn space(&self) -> &SampleSpace<S> {
        &self.space
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn value(&self, point: usize) -> &S {
        &self.values[point]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.space.same_as(&other.space) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    pub fn map(&self, f: impl Fn(&S) -> S) -> Self {
        LatticeElement {
            space: self.space.clone(),
            values: self.values.iter().map(f).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(&S, &S) -> S) -> Result<Self> {
        self.check(other)?;
        Ok(LatticeElement {
            space: self.space.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.clone() + b.clone())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.clone() - b.clone())
    }

    pub fn scale(&self, c: &S) -> Self {
        self.map(|a| a.clone() * c.clone())
    }

    pub fn neg(&self) -> Self {
        self.map(|a| -a.clone())
    }

    /// The f-algebra product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.clone() * b.clone())
    }

    pub fn sup(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, S::max_of)
    }

    pub fn inf(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, S::min_of)
    }

    pub fn abs(&self) -> Self {
        self.map(|a| a.abs())
    }

    pub fn positive_part(&self) -> Self {
        self.map(|a| S::max_of(a, &S::zero()))
    }

    pub fn leq(&self, other: &Self) -> Result<bool> {
        self.check(other)?;
        Ok(self.values.iter().zip(&other.values).all(|(a, b)| a <= b))
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|a| *a >= S::zero())
    }

    /// `true` at points outside the band (support) of `self`.
    fn off_band(&self, point: usize) -> bool {
        self.values[point].is_negligible(self.space.tolerances().band)
    }

    /// Band projection `P_self g`: keeps `g` on the support of `self`.
    pub fn band_projection(&self, g: &Self) -> Result<Self> {
        self.check(g)?;
        Ok(LatticeElement::from_fn(&self.space, |i| {
            if self.off_band(i) {
                S::zero()
            } else {
                g.values[i].clone()
            }
        }))
    }

    /// `u_f = P_f u`, the component carrying the support of `self`.
    pub fn support_component(&self) -> Self {
        LatticeElement::from_fn(&self.space, |i| {
            if self.off_band(i) {
                S::zero()
            } else {
                S::one()
            }
        })
    }

    /// Canonical partial inverse: reciprocal on the support, zero elsewhere.
    pub fn partial_inverse(&self) -> Self {
        LatticeElement::from_fn(&self.space, |i| {
            if self.off_band(i) {
                S::zero()
            } else {
                S::one() / self.values[i].clone()
            }
        })
    }

    /// Pointwise `e^{-self}` for `self >= 0`; float backend only.
    pub fn exp_neg(&self) -> Result<Self> {
        if !self.is_nonnegative() {
            return Err(Error::NegativeParameter);
        }
        let values = self
            .values
            .iter()
            .map(|v| v.exp_neg().ok_or(Error::TranscendentalOnRationalBackend))
            .collect::<Result<Vec<_>>>()?;
        Ok(LatticeElement {
            space: self.space.clone(),
            values,
        })
    }

    /// Whether every value lies in `{0, 1}`.
    pub fn is_component(&self) -> bool {
        let eps = self.space.tolerances().cmp;
        self.values
            .iter()
            .all(|v| v.is_negligible(eps) || v.approx_eq(&S::one(), eps))
    }

    /// Sup-norm.
    pub fn norm_inf(&self) -> S {
        self.values
            .iter()
            .fold(S::zero(), |acc, v| S::max_of(&acc, &v.abs()))
    }

    pub fn sum_values(&self) -> S {
        self.values.iter().fold(S::zero(), |acc, v| acc + v.clone())
    }

    /// `‖self − other‖∞`.
    pub fn distance(&self, other: &Self) -> Result<S> {
        Ok(self.sub(other)?.norm_inf())
    }

    pub fn approx_eq(&self, other: &Self, eps: f64) -> Result<bool> {
        self.check(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .all(|(a, b)| a.approx_eq(b, eps)))
    }

    pub fn to_f64(&self) -> LatticeElement<f64> {
        self.to_f64_on(&self.space.to_f64())
    }

    /// Converts onto an already converted copy of this element's space.
    pub fn to_f64_on(&self, space: &SampleSpace<f64>) -> LatticeElement<f64> {
        debug_assert_eq!(space.id(), self.space.id());
        LatticeElement {
            space: space.clone(),
            values: self.values.iter().map(Scalar::to_f64).collect(),
        }
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.off_band(i)).collect()
    }
}

impl LatticeElement<Rational> {
    pub fn from_ratios(space: &SampleSpace<Rational>, values: &[(i64, i64)]) -> Result<Self> {
        Self::from_values(
            space,
            values
                .iter()
                .map(|&(n, d)| crate::scalar::ratio(n, d))
                .collect(),
        )
    }
}

/// Sum of a list of elements on a common space.
pub fn sum_all<S: Scalar>(space: &SampleSpace<S>, items: &[LatticeElement<S>]) -> Result<LatticeElement<S>> {
    items
        .iter()
        .try_fold(LatticeElement::zero(space), |acc, x| acc.add(x))
}

/// Pointwise maximum of a nonempty list.
pub fn sup_all<S: Scalar>(items: &[LatticeElement<S>]) -> Option<Result<LatticeElement<S>>> {
    let (first, rest) = items.split_first()?;
    Some(rest.iter().try_fold(first.clone(), |acc, x| acc.sup(x)))
}
