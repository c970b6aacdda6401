//! Worked models: two four-point examples and a generated countable one.
//!
//! The countable model lives on `ℕ` with `P({2k−1}) = 2/(3·2^k)`,
//! `P({2k}) = 4^{−k}`, the partition into pairs `{2k−1, 2k}`, and events
//! `B_{2k−1} = {4k−3, 4k−2, 4k+1, 4k+2, …}` (the points `≡ 1, 2 mod 4` from
//! `4k−3` on) and `B_{2k} = {4k}`. It is truncated to its first `K` pairs:
//! the space becomes `{1, …, 2K}` (sub-normalized), every event is
//! intersected with it, and exactly the events meeting it are kept. Each
//! retained point lies only in retained events, so conditional
//! expectations on the retained blocks are those of the full model.

use crate::condexp::CondExp;
use crate::element::LatticeElement;
use crate::error::{Error, Result};
use crate::lsn::BernoulliFamily;
use crate::scalar::{ratio, Rational};
use crate::space::SampleSpace;

#[derive(Debug, Clone)]
pub struct Example {
    pub name: String,
    pub family: BernoulliFamily<Rational>,
    /// `B1`, `B2`, … in family order.
    pub event_names: Vec<String>,
}

fn four_point(name: &str, masses: [(i64, i64); 4]) -> Example {
    let space = SampleSpace::new(
        vec!["1", "2", "3", "4"],
        masses.iter().map(|&(p, q)| ratio(p, q)).collect(),
    )
    .expect("fixture masses are valid");
    let sigma = CondExp::from_labels(&space, &[vec!["1", "2"], vec!["3", "4"]]).expect("fixture partition");
    let b1 = LatticeElement::indicator_of_labels(&space, &["2", "3"]).expect("fixture event");
    let b2 = LatticeElement::indicator_of_labels(&space, &["3", "4"]).expect("fixture event");
    Example {
        name: name.into(),
        family: BernoulliFamily::new(&sigma, vec![b1, b2]).expect("fixture family"),
        event_names: vec!["B1".into(), "B2".into()],
    }
}

/// `P = (3/8, 1/8, 1/8, 3/8)`, blocks `{1,2}`, `{3,4}`, `B1 = {2,3}`,
/// `B2 = {3,4}`. The events are independent, also unconditionally.
pub fn example1() -> Example {
    four_point("example 1", [(3, 8), (1, 8), (1, 8), (3, 8)])
}

/// As [`example1`] with `P = (3/8, 1/8, 3/8, 1/8)`: conditionally
/// independent but not independent.
pub fn example2() -> Example {
    four_point("example 2", [(3, 8), (1, 8), (3, 8), (1, 8)])
}

/// Whether point `n ≥ 1` of the countable model lies in `B_j`, `j ≥ 1`.
pub fn example3_contains(j: usize, n: usize) -> bool {
    if j.is_multiple_of(2) {
        n == 2 * j
    } else {
        let k = j.div_ceil(2);
        matches!(n % 4, 1 | 2) && n + 3 >= 4 * k
    }
}

/// Number of events meeting the first `k_pairs` pairs; these are exactly
/// `B_1, …, B_J`.
pub fn example3_event_count(k_pairs: usize) -> usize {
    let top = 2 * k_pairs;
    (1..)
        .take_while(|&j| (1..=top).any(|n| example3_contains(j, n)))
        .count()
}

fn example3_space(k_pairs: usize) -> Result<(SampleSpace<Rational>, CondExp<Rational>)> {
    if k_pairs == 0 {
        return Err(Error::BadExample("the countable model needs at least one pair".into()));
    }
    let mut labels = Vec::with_capacity(2 * k_pairs);
    let mut masses = Vec::with_capacity(2 * k_pairs);
    for k in 1..=k_pairs {
        let two_k = Rational::from_integer(2.into()).pow(k as i32);
        labels.push((2 * k - 1).to_string());
        masses.push(ratio(2, 3) / two_k.clone());
        labels.push((2 * k).to_string());
        masses.push(Rational::from_integer(1.into()) / (two_k.clone() * two_k));
    }
    let space = SampleSpace::new(labels, masses)?;
    let blocks = (0..k_pairs).map(|k| vec![2 * k, 2 * k + 1]).collect();
    let sigma = CondExp::new(&space, blocks)?;
    Ok((space, sigma))
}

/// The countable model truncated to `k_pairs` pairs, with the first
/// `n_events` events (zero components once the events stop meeting the
/// truncated space).
pub fn example3_prefix(k_pairs: usize, n_events: usize) -> Result<BernoulliFamily<Rational>> {
    let (space, sigma) = example3_space(k_pairs)?;
    let qs = (1..=n_events)
        .map(|j| {
            let pts: Vec<usize> = (1..=2 * k_pairs)
                .filter(|&n| example3_contains(j, n))
                .map(|n| n - 1)
                .collect();
            LatticeElement::indicator(&space, &pts)
        })
        .collect();
    BernoulliFamily::new(&sigma, qs)
}

/// The countable model truncated to `k_pairs` pairs with all events that
/// meet it.
pub fn example3(k_pairs: usize) -> Result<Example> {
    let n = example3_event_count(k_pairs);
    Ok(Example {
        name: format!("example 3 (K = {k_pairs})"),
        family: example3_prefix(k_pairs, n)?,
        event_names: (1..=n).map(|j| format!("B{j}")).collect(),
    })
}

/// Example `n ∈ {1, 2, 3}`; `k_pairs` is used by the third only and must be
/// at least 2.
pub fn example(n: usize, k_pairs: usize) -> Result<Example> {
    match n {
        1 => Ok(example1()),
        2 => Ok(example2()),
        3 if k_pairs >= 2 => example3(k_pairs),
        3 => Err(Error::BadExample(format!("K = {k_pairs} is below 2"))),
        _ => Err(Error::BadExample(format!("there is no example {n}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{One, Zero};

    #[test]
    fn membership_pattern() {
        // B1 = {1,2,5,6,9,10,…}, B3 = {5,6,9,10,…}, B2 = {4}, B4 = {8}
        let b1: Vec<usize> = (1..=12).filter(|&n| example3_contains(1, n)).collect();
        assert_eq!(b1, vec![1, 2, 5, 6, 9, 10]);
        let b3: Vec<usize> = (1..=12).filter(|&n| example3_contains(3, n)).collect();
        assert_eq!(b3, vec![5, 6, 9, 10]);
        assert!(example3_contains(2, 4) && !example3_contains(2, 8));
        assert!(example3_contains(4, 8));
        assert_eq!(example3_event_count(2), 2);
        assert_eq!(example3_event_count(3), 3);
        assert_eq!(example3_event_count(4), 4);
        assert_eq!(example3_event_count(8), 8);
    }

    #[test]
    fn truncated_masses() {
        let e = example3(2).unwrap();
        let sp = e.family.sigma().space();
        assert_eq!(sp.masses(), &[ratio(1, 3), ratio(1, 4), ratio(1, 6), ratio(1, 16)]);
        assert!(sp.is_subnormalized());
        // the full model is a probability: Σ 2/(3·2^k) + Σ 4^{−k} = 2/3 + 1/3
        let total = (1..60).fold(Rational::zero(), |acc, k| {
            acc + ratio(2, 3) / Rational::from_integer(2.into()).pow(k) + Rational::one() / Rational::from_integer(4.into()).pow(k)
        });
        assert!((Rational::one() - total) < ratio(1, 1 << 58));
    }

    #[test]
    fn dispatch() {
        assert!(example(1, 0).is_ok());
        assert!(matches!(example(3, 1), Err(Error::BadExample(_))));
        assert!(matches!(example(4, 3), Err(Error::BadExample(_))));
        assert_eq!(example(3, 3).unwrap().event_names.len(), 3);
    }
}
