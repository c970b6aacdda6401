//! Solutions `g(j, H, A)` of the conditional Stein–Chen recurrence
//!
//! ```text
//! g(0) = 0,
//! g(j) = J[(j−1) g(j−1) + ν_A(j−1) − Po(A;H)] + (1/j)(u − u_H)(ν_A(0) − ν_A(j)),
//! ```
//!
//! where `J` is the canonical partial inverse of `H`. Every quantity lives in
//! the range of `T`, so all evaluators work pointwise on the values of `H`.
//!
//! Three evaluators are provided and cross-checked against each other:
//!
//! * [`Evaluator::Recurrence`] iterates the recurrence literally. Forward
//!   iteration multiplies rounding errors by `(j−1)/H` at every step, so it
//!   runs in binary floating point with a working precision chosen from that
//!   growth and doubled until two runs agree.
//! * [`Evaluator::SingletonAdditive`] sums `g(j, H, {i})` over `i ∈ A` (or
//!   subtracts over the complement), each singleton value coming from a sum
//!   of positive terms.
//! * [`Evaluator::ClosedForm`] uses `(j−1)! J^j e^H F(j−1, H, A)`; `F` loses
//!   digits to cancellation when `H` is small, so this path is meant for
//!   validation on `H ≥ 0.5`, `j ≤ 12`.

use std::collections::HashMap;

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use serde::{Deserialize, Serialize};

use crate::element::LatticeElement;
use crate::error::{Error, Result};
use crate::natset::NatSet;
use crate::poisson::{ln_factorial, measure, nu_value, pmf, upper_tail};

type Big = FBig<HalfEven, 2>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evaluator {
    Recurrence,
    ClosedForm,
    SingletonAdditive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteinConfig {
    pub evaluator: Evaluator,
    /// Largest `j` accepted by [`stein_g`].
    pub j_max: usize,
    /// Relative agreement expected between evaluators.
    pub tolerance: f64,
    /// Infinite series stop once a term drops below this fraction of the
    /// partial sum.
    pub series_tolerance: f64,
}

impl Default for SteinConfig {
    fn default() -> Self {
        SteinConfig {
            evaluator: Evaluator::Recurrence,
            j_max: 64,
            tolerance: 1e-9,
            series_tolerance: 1e-18,
        }
    }
}

impl SteinConfig {
    pub fn with_evaluator(evaluator: Evaluator) -> Self {
        SteinConfig {
            evaluator,
            ..Self::default()
        }
    }
}

const MAX_SERIES_TERMS: usize = 500;

/// `(1/j)(ν_A(0) − ν_A(j))`: the value of `g(j)` off the band of `H`.
pub fn off_band_value(j: usize, a: &NatSet) -> f64 {
    if j == 0 {
        0.0
    } else {
        (nu_value(a, 0) - nu_value(a, j)) / j as f64
    }
}

// ---------------------------------------------------------------------------
// recurrence

fn big(x: f64, prec: usize) -> Big {
    Big::try_from(x)
        .expect("finite input")
        .with_precision(prec)
        .value()
}

fn big_int(n: usize, prec: usize) -> Big {
    Big::from(n as u64).with_precision(prec).value()
}

/// `Po(A; h)` at the given working precision.
fn big_measure(a: &NatSet, h: &Big, exp_neg_h: &Big, prec: usize) -> Big {
    let one = big_int(1, prec);
    let mut finite = big_int(0, prec);
    let mut term = one.clone();
    let top = a.horizon();
    for k in 0..top {
        if k > 0 {
            term = term * h / big_int(k, prec);
        }
        if a.base().contains(&k) {
            finite += &term;
        }
    }
    let finite = finite * exp_neg_h;
    if a.is_complemented() {
        one - finite
    } else {
        finite
    }
}

fn recurrence_run(j: usize, h: f64, a: &NatSet, prec: usize) -> Big {
    let hb = big(h, prec);
    let jb = big_int(1, prec) / &hb;
    let e = (-hb.clone()).exp();
    let po_a = big_measure(a, &hb, &e, prec);
    let mut g = big_int(0, prec);
    for m in 1..=j {
        let nu = big_int(a.contains(m - 1) as usize, prec);
        g = &jb * (big_int(m - 1, prec) * g + nu - &po_a);
    }
    g
}

fn initial_precision(j: usize, h: f64, a: &NatSet) -> usize {
    let growth = ln_factorial(j) / std::f64::consts::LN_2;
    let inv = (-h.log2()).max(0.0);
    let depth = (j + a.horizon() + 1) as f64;
    96 + (growth + depth * inv + h / std::f64::consts::LN_2).ceil() as usize
}

/// `g(j, h, A)` for a single value `h` by iterating the recurrence in
/// extended precision until the rounded result is stable.
pub fn g_recurrence_value(j: usize, h: f64, a: &NatSet) -> f64 {
    if j == 0 {
        return 0.0;
    }
    if h == 0.0 {
        return off_band_value(j, a);
    }
    let mut prec = initial_precision(j, h, a);
    let mut prev = recurrence_run(j, h, a, prec).to_f64().value();
    loop {
        prec *= 2;
        let next = recurrence_run(j, h, a, prec).to_f64().value();
        let settled = next == prev || (next - prev).abs() <= 4.0 * f64::EPSILON * next.abs();
        if settled || prec > 1 << 15 {
            return next;
        }
        prev = next;
    }
}

fn recurrence_table_run(j: usize, h: f64, a: &NatSet, prec: usize) -> Vec<f64> {
    let hb = big(h, prec);
    let jb = big_int(1, prec) / &hb;
    let e = (-hb.clone()).exp();
    let po_a = big_measure(a, &hb, &e, prec);
    let mut g = big_int(0, prec);
    let mut out = Vec::with_capacity(j + 1);
    out.push(0.0);
    for m in 1..=j {
        let nu = big_int(a.contains(m - 1) as usize, prec);
        g = &jb * (big_int(m - 1, prec) * g + nu - &po_a);
        out.push(g.to_f64().value());
    }
    out
}

/// `g(0, h, A), …, g(j, h, A)` from one pass of the recurrence.
pub fn g_recurrence_table(j: usize, h: f64, a: &NatSet) -> Vec<f64> {
    if h == 0.0 {
        return (0..=j).map(|m| off_band_value(m, a)).collect();
    }
    let mut prec = initial_precision(j, h, a);
    let mut prev = recurrence_table_run(j, h, a, prec);
    loop {
        prec *= 2;
        let next = recurrence_table_run(j, h, a, prec);
        let settled = next
            .iter()
            .zip(&prev)
            .all(|(x, y)| x == y || (x - y).abs() <= 4.0 * f64::EPSILON * x.abs());
        if settled || prec > 1 << 15 {
            return next;
        }
        prev = next;
    }
}

// ---------------------------------------------------------------------------
// closed form

/// `F(n, h, A) = Po(A ∩ N(n)) − Po(A) Po(N(n))` for a single value `h`.
///
/// Evaluated as `Po(A ∩ N(n)) Po(N(n)ᶜ) − Po(A \ N(n)) Po(N(n))`, and via
/// `F(A) = −F(Aᶜ)` for cofinite `A`, so that no probability close to one
/// is subtracted from another.
pub fn f_value(n: usize, h: f64, a: &NatSet) -> f64 {
    if a.is_complemented() {
        return -f_value(n, h, &a.complement());
    }
    let (mut inside, mut outside) = (0.0, 0.0);
    for &k in a.base() {
        if k <= n {
            inside += pmf(k, h);
        } else {
            outside += pmf(k, h);
        }
    }
    inside * upper_tail(n, h) - outside * measure(&NatSet::up_to(n), h)
}

/// `g(n, h, A)` from the closed form.
pub fn g_closed_form_value(n: usize, h: f64, a: &NatSet) -> f64 {
    if n == 0 {
        return 0.0;
    }
    if h == 0.0 {
        return off_band_value(n, a);
    }
    let scale = (ln_factorial(n - 1) + h - n as f64 * h.ln()).exp();
    scale * f_value(n - 1, h, a)
}

// ---------------------------------------------------------------------------
// singletons

/// `H g(j, H, {i})` for a single value `h > 0`, `j ≥ 1`, as a sum of
/// positive terms.
pub fn hg_singleton_value(j: usize, i: usize, h: f64, series_tol: f64) -> f64 {
    debug_assert!(j >= 1);
    if h == 0.0 {
        return 0.0;
    }
    let ln_h = h.ln();
    if j <= i {
        // −(j−1)!/i! e^{−h} Σ_{k<j} h^{i−j+1+k}/k!
        let base = ln_factorial(j - 1) - ln_factorial(i) - h;
        let sum: f64 = (0..j)
            .map(|k| (base + (i - j + 1 + k) as f64 * ln_h - ln_factorial(k)).exp())
            .sum();
        -sum
    } else {
        // Po(i; h) Σ_{s≥1} (j−1)!/(j+s−1)! h^s
        let mut term = h / j as f64;
        let mut sum = 0.0;
        for s in 1..=MAX_SERIES_TERMS {
            sum += term;
            term *= h / (j + s) as f64;
            if term < series_tol * sum {
                break;
            }
        }
        pmf(i, h) * sum
    }
}

/// `g(j, h, {i})` for a single value `h ≥ 0`.
pub fn g_singleton_value(j: usize, i: usize, h: f64, series_tol: f64) -> f64 {
    if j == 0 {
        return 0.0;
    }
    if h == 0.0 {
        return off_band_value(j, &NatSet::singleton(i));
    }
    hg_singleton_value(j, i, h, series_tol) / h
}

/// `H g(j, H, {i})` at working precision `prec`; the series for `j > i` is
/// summed until its terms drop below the precision.
fn big_hg_singleton(j: usize, i: usize, hb: &Big, e: &Big, prec: usize) -> Big {
    let zero = big_int(0, prec);
    let mut sum = zero.clone();
    if j <= i {
        // (j−1)!/i! h^{i−j+1} Σ_{k<j} h^k/k!
        let mut lead = big_int(1, prec);
        for m in j..=i {
            lead /= big_int(m, prec);
        }
        for _ in 0..=(i - j) {
            lead *= hb;
        }
        let mut term = big_int(1, prec);
        for k in 0..j {
            if k > 0 {
                term = term * hb / big_int(k, prec);
            }
            sum += &term;
        }
        zero - lead * sum * e
    } else {
        let mut pmf = e.clone();
        for m in 1..=i {
            pmf = pmf * hb / big_int(m, prec);
        }
        let cutoff = Big::from_parts(1.into(), -(prec as isize)).with_precision(prec).value();
        let mut term = hb.clone() / big_int(j, prec);
        for s in 1..=50 * MAX_SERIES_TERMS {
            sum += &term;
            term = term * hb / big_int(j + s, prec);
            if term < &sum * &cutoff {
                break;
            }
        }
        pmf * sum
    }
}

fn singleton_additive_run(j: usize, h: f64, a: &NatSet, prec: usize) -> f64 {
    let hb = big(h, prec);
    let e = (-hb.clone()).exp();
    let mut total = big_int(0, prec);
    for &i in a.base() {
        total += big_hg_singleton(j, i, &hb, &e, prec) / &hb;
    }
    let v = total.to_f64().value();
    if a.is_complemented() {
        -v
    } else {
        v
    }
}

/// `g(j, h, A)` as a signed sum of singleton values.
///
/// The singletons of a large set nearly cancel when `h` is small, so the
/// sum is accumulated in extended precision, doubled until stable.
pub fn g_singleton_additive_value(j: usize, h: f64, a: &NatSet) -> f64 {
    if j == 0 {
        return 0.0;
    }
    if h == 0.0 {
        return off_band_value(j, a);
    }
    let mut prec = initial_precision(j, h, a);
    let mut prev = singleton_additive_run(j, h, a, prec);
    loop {
        prec *= 2;
        let next = singleton_additive_run(j, h, a, prec);
        let settled = next == prev || (next - prev).abs() <= 4.0 * f64::EPSILON * next.abs();
        if settled || prec > 1 << 15 {
            return next;
        }
        prev = next;
    }
}

/// `g(j, h, A)` with the chosen evaluator.
pub fn g_value(j: usize, h: f64, a: &NatSet, cfg: &SteinConfig) -> f64 {
    match cfg.evaluator {
        Evaluator::Recurrence => g_recurrence_value(j, h, a),
        Evaluator::ClosedForm => g_closed_form_value(j, h, a),
        Evaluator::SingletonAdditive => g_singleton_additive_value(j, h, a),
    }
}

/// `g(0, h, A), …, g(j, h, A)` with the chosen evaluator.
pub fn g_table(j: usize, h: f64, a: &NatSet, cfg: &SteinConfig) -> Vec<f64> {
    match cfg.evaluator {
        Evaluator::Recurrence => g_recurrence_table(j, h, a),
        _ => (0..=j).map(|m| g_value(m, h, a, cfg)).collect(),
    }
}

// ---------------------------------------------------------------------------
// element level

fn check_h(h: &LatticeElement<f64>) -> Result<()> {
    if h.is_nonnegative() {
        Ok(())
    } else {
        Err(Error::NegativeParameter)
    }
}

/// Applies a scalar kernel pointwise, passing `0` off the band of `H` and
/// evaluating each distinct value once.
fn lift(h: &LatticeElement<f64>, kernel: impl Fn(f64) -> f64) -> LatticeElement<f64> {
    let band = h.support_component();
    let mut memo: HashMap<u64, f64> = HashMap::new();
    LatticeElement::from_fn(h.space(), |p| {
        let x = if *band.value(p) == 0.0 { 0.0 } else { *h.value(p) };
        *memo.entry(x.to_bits()).or_insert_with(|| kernel(x))
    })
}

/// `g(j, H, A)`.
pub fn stein_g(j: usize, h: &LatticeElement<f64>, a: &NatSet, cfg: &SteinConfig) -> Result<LatticeElement<f64>> {
    if j > cfg.j_max {
        return Err(Error::JTooLarge { j, j_max: cfg.j_max });
    }
    check_h(h)?;
    Ok(lift(h, |x| g_value(j, x, a, cfg)))
}

/// `F(n, H, A)`.
pub fn stein_f(n: usize, h: &LatticeElement<f64>, a: &NatSet) -> Result<LatticeElement<f64>> {
    check_h(h)?;
    Ok(lift(h, |x| f_value(n, x, a)))
}

/// `g(j, H, {i})` from the positive-term expansions.
pub fn stein_g_singleton(j: usize, i: usize, h: &LatticeElement<f64>, cfg: &SteinConfig) -> Result<LatticeElement<f64>> {
    if j == 0 {
        return Err(Error::BadIndices("singleton solution needs j >= 1".into()));
    }
    check_h(h)?;
    Ok(lift(h, |x| g_singleton_value(j, i, x, cfg.series_tolerance)))
}

/// `H g(j, H, {i})`.
pub fn stein_hg_singleton(j: usize, i: usize, h: &LatticeElement<f64>, cfg: &SteinConfig) -> Result<LatticeElement<f64>> {
    if j == 0 {
        return Err(Error::BadIndices("singleton solution needs j >= 1".into()));
    }
    check_h(h)?;
    Ok(lift(h, |x| hg_singleton_value(j, i, x, cfg.series_tolerance)))
}

/// `Δ(j, H, A) = H (g(j+1, H, A) − g(j, H, A))`.
pub fn delta(j: usize, h: &LatticeElement<f64>, a: &NatSet, cfg: &SteinConfig) -> Result<LatticeElement<f64>> {
    if j == 0 {
        return Err(Error::BadIndices("delta needs j >= 1".into()));
    }
    let next = stein_g(j + 1, h, a, cfg)?;
    let cur = stein_g(j, h, a, cfg)?;
    h.mul(&next.sub(&cur)?)
}

/// Residuals of the set-function structure of `A ↦ g(n, H, A)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasureResidual {
    /// `‖g(∪Aᵢ) − Σ g(Aᵢ)‖∞`.
    pub additivity: f64,
    /// `max ‖g(B) + g(Bᶜ)‖∞` over the given sets and their union.
    pub complement: f64,
}

impl MeasureResidual {
    pub fn max(&self) -> f64 {
        self.additivity.max(self.complement)
    }
}

/// Checks finite additivity over pairwise disjoint `sets` and the
/// complement identity `g(n, H, A) = −g(n, H, Aᶜ)`.
pub fn check_g_measure(
    n: usize,
    h: &LatticeElement<f64>,
    sets: &[NatSet],
    cfg: &SteinConfig,
) -> Result<MeasureResidual> {
    for (k, a) in sets.iter().enumerate() {
        for b in &sets[k + 1..] {
            if !a.is_disjoint(b) {
                return Err(Error::SetsNotDisjoint);
            }
        }
    }
    let union = sets.iter().fold(NatSet::empty(), |acc, a| acc.union(a));
    let whole = stein_g(n, h, &union, cfg)?;
    let parts = sets.iter().try_fold(LatticeElement::zero(h.space()), |acc, a| {
        acc.add(&stein_g(n, h, a, cfg)?)
    })?;
    let additivity = whole.distance(&parts)?;
    let mut complement = 0.0f64;
    for a in sets.iter().chain(std::iter::once(&union)) {
        let s = stein_g(n, h, a, cfg)?.add(&stein_g(n, h, &a.complement(), cfg)?)?;
        complement = complement.max(s.norm_inf());
    }
    Ok(MeasureResidual {
        additivity,
        complement,
    })
}
