//! The function-valued Poisson law `Po(·; H)` for `H ≥ 0` block-constant.

use crate::element::LatticeElement;
use crate::error::{Error, Result};
use crate::natset::NatSet;

/// `ln k!`.
pub fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).fold(0.0, |acc, x| acc + x)
}

/// `λ^k e^{−λ} / k!` for a single non-negative `λ`.
///
/// Switches to log space for `k > 20` or `λ > 50`; `Po(0; 0) = 1`.
pub fn pmf(k: usize, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if k > 20 || lambda > 50.0 {
        (k as f64 * lambda.ln() - lambda - ln_factorial(k)).exp()
    } else {
        let mut v = (-lambda).exp();
        for i in 1..=k {
            v *= lambda / i as f64;
        }
        v
    }
}

/// `Po({k : k > n}; λ)`, summed directly when the tail is the small side.
pub fn upper_tail(n: usize, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let head: f64 = (0..=n).map(|k| pmf(k, lambda)).sum();
    if head < 0.5 {
        return (1.0 - head).max(0.0);
    }
    let mut total = 0.0;
    let mut k = n + 1;
    let mut term = pmf(k, lambda);
    while term > 0.0 && k < n + 100_000 {
        total += term;
        k += 1;
        term *= lambda / k as f64;
        if term < total * f64::EPSILON * 0.25 {
            break;
        }
    }
    total
}

/// `Po(A; λ)` for a single non-negative `λ`.
pub fn measure(a: &NatSet, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if a.contains(0) { 1.0 } else { 0.0 };
    }
    if a.is_finite() {
        return a.base().iter().fold(0.0, |acc, &k| acc + pmf(k, lambda));
    }
    // ℕ₀ \ base: the gaps below the largest excluded element plus the tail
    let top = a.horizon();
    if top == 0 {
        return 1.0;
    }
    let gaps: f64 = (0..top)
        .filter(|&k| a.contains(k))
        .map(|k| pmf(k, lambda))
        .sum();
    gaps + upper_tail(top - 1, lambda)
}

/// `ν_A(j)` as a scalar: 1 when `j ∈ A`.
pub fn nu_value(a: &NatSet, j: usize) -> f64 {
    if a.contains(j) {
        1.0
    } else {
        0.0
    }
}

fn check_h(h: &LatticeElement<f64>) -> Result<()> {
    if h.is_nonnegative() {
        Ok(())
    } else {
        Err(Error::NegativeParameter)
    }
}

/// `ν_A(j)`: the unit when `j ∈ A`, zero otherwise.
pub fn nu(a: &NatSet, j: usize, space: &crate::space::SampleSpace<f64>) -> LatticeElement<f64> {
    LatticeElement::constant(space, nu_value(a, j))
}

/// `Po(k; H) = H^k e^{−H} / k!` with `H^0 = u` (also off the band of `H`).
pub fn poisson_pmf(k: usize, h: &LatticeElement<f64>) -> Result<LatticeElement<f64>> {
    check_h(h)?;
    let band = h.support_component();
    Ok(LatticeElement::from_fn(h.space(), |p| {
        if *band.value(p) == 0.0 {
            pmf(k, 0.0)
        } else {
            pmf(k, *h.value(p))
        }
    }))
}

/// `Po(A; H) = Σ_{k ∈ A} Po(k; H)`; equals `ν_A(0)` off the band of `H`.
pub fn poisson_measure(a: &NatSet, h: &LatticeElement<f64>) -> Result<LatticeElement<f64>> {
    check_h(h)?;
    let band = h.support_component();
    Ok(LatticeElement::from_fn(h.space(), |p| {
        if *band.value(p) == 0.0 {
            measure(a, 0.0)
        } else {
            measure(a, *h.value(p))
        }
    }))
}
