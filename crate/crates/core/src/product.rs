//! Product models: families that are conditionally independent by
//! construction, used for randomized testing and parameter sweeps.

use num_traits::{One, Zero};

use crate::condexp::CondExp;
use crate::element::LatticeElement;
use crate::error::{Error, Result};
use crate::lsn::BernoulliFamily;
use crate::scalar::Rational;
use crate::space::SampleSpace;

/// Largest allowed `n × (number of points)`.
pub const MAX_CELLS: usize = 1 << 20;

#[derive(Debug, Clone)]
pub struct ProductModel {
    pub space: SampleSpace<Rational>,
    pub sigma: CondExp<Rational>,
    pub family: BernoulliFamily<Rational>,
}

/// Builds block `b` as the `2^n` outcomes `x ∈ {0,1}^n` with mass
/// `m_b Π p[i][b]^{x_i} (1 − p[i][b])^{1−x_i}`, and `q_i = [x_i = 1]`.
///
/// Outcomes of mass zero (from probabilities 0 or 1) are dropped. Points
/// are labelled `b{block}:x{bits}` with bit `i` for component `i`.
pub fn build_product_model(block_masses: &[Rational], probs: &[Vec<Rational>]) -> Result<ProductModel> {
    let nb = block_masses.len();
    let n = probs.len();
    for (i, row) in probs.iter().enumerate() {
        if row.len() != nb {
            return Err(Error::BadProbability(format!(
                "component {i} has {} block probabilities, expected {nb}",
                row.len()
            )));
        }
        for (b, p) in row.iter().enumerate() {
            if *p < Rational::zero() || *p > Rational::one() {
                return Err(Error::BadProbability(format!("p[{i}][{b}] = {p} is outside [0, 1]")));
            }
        }
    }
    let outcomes = 1usize.checked_shl(n as u32).filter(|_| n < 48);
    let cells = outcomes.and_then(|o| o.checked_mul(nb)).and_then(|c| c.checked_mul(n.max(1)));
    match cells {
        Some(c) if c <= MAX_CELLS => {}
        _ => {
            return Err(Error::TooLarge(format!(
                "{n} components over {nb} blocks exceed {MAX_CELLS} cells"
            )))
        }
    }
    let outcomes = outcomes.expect("checked above");

    let mut labels = Vec::new();
    let mut masses = Vec::new();
    let mut bits = Vec::new();
    let mut blocks = Vec::with_capacity(nb);
    for (b, m) in block_masses.iter().enumerate() {
        let mut block = Vec::new();
        for x in 0..outcomes {
            let mass = (0..n).fold(m.clone(), |acc, i| {
                let p = &probs[i][b];
                if x >> i & 1 == 1 {
                    acc * p
                } else {
                    acc * (Rational::one() - p)
                }
            });
            if mass.is_zero() {
                continue;
            }
            let code: String = (0..n).map(|i| if x >> i & 1 == 1 { '1' } else { '0' }).collect();
            block.push(labels.len());
            labels.push(format!("b{b}:x{code}"));
            masses.push(mass);
            bits.push(x);
        }
        if block.is_empty() {
            // only reachable with a non-positive block mass
            return Err(Error::NonpositiveMass(format!("block {b}")));
        }
        blocks.push(block);
    }
    let space = SampleSpace::new(labels, masses)?;
    let sigma = CondExp::new(&space, blocks)?;
    let qs = (0..n)
        .map(|i| {
            let pts: Vec<usize> = (0..bits.len()).filter(|&p| bits[p] >> i & 1 == 1).collect();
            LatticeElement::indicator(&space, &pts)
        })
        .collect();
    let family = BernoulliFamily::new(&sigma, qs)?;
    Ok(ProductModel { space, sigma, family })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    #[test]
    fn single_bernoulli() {
        let m = build_product_model(&[ratio(1, 1)], &[vec![ratio(1, 3)]]).unwrap();
        assert_eq!(m.space.masses(), &[ratio(2, 3), ratio(1, 3)]);
        assert_eq!(m.space.labels(), &["b0:x0".to_string(), "b0:x1".to_string()]);
        assert_eq!(m.family.intensities()[0].values(), &[ratio(1, 3), ratio(1, 3)]);
    }

    #[test]
    fn example_one_structure() {
        let m = build_product_model(
            &[ratio(1, 2), ratio(1, 2)],
            &[vec![ratio(1, 4), ratio(1, 4)], vec![ratio(0, 1), ratio(1, 1)]],
        )
        .unwrap();
        // the deterministic second component leaves two points per block
        assert_eq!(m.space.len(), 4);
        let h = m.sigma.block_values(m.family.h());
        assert_eq!(h, vec![ratio(1, 4), ratio(5, 4)]);
        let rep = m.family.independence().unwrap();
        assert!(rep.is_independent && rep.exact);
        assert_eq!(rep.max_residual, 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        let e = build_product_model(&[ratio(1, 1)], &[vec![ratio(3, 2)]]).unwrap_err();
        assert!(matches!(e, Error::BadProbability(_)));
        let e = build_product_model(&[ratio(1, 1)], &[vec![ratio(1, 2), ratio(1, 2)]]).unwrap_err();
        assert!(matches!(e, Error::BadProbability(_)));
        let many = vec![vec![ratio(1, 2)]; 17];
        assert!(matches!(build_product_model(&[ratio(1, 1)], &many).unwrap_err(), Error::TooLarge(_)));
        let e = build_product_model(&[ratio(3, 4), ratio(1, 2)], &[]).unwrap_err();
        assert_eq!(e, Error::MassExceedsOne);
    }

    #[test]
    fn empty_family_has_one_point_per_block() {
        let m = build_product_model(&[ratio(1, 4), ratio(3, 4)], &[]).unwrap();
        assert_eq!(m.space.len(), 2);
        assert!(m.family.is_empty());
    }
}
