use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::poly::{Monomial, MonomialSet};

pub const DEFAULT_CLOSURE_BUDGET: usize = 1_000_000;

/// `ℳ_{Σ E_i} = ∪ ℳ_{E_i}`.
pub fn closure_sum(sets: &[MonomialSet]) -> MonomialSet {
    sets.iter().fold(MonomialSet::new(), |acc, s| acc.union(s))
}

/// `(E ∪ {1})^k`: every product of at most `k` members of `E`.
///
/// Fails when the intermediate set would exceed `budget` monomials; the error
/// carries the a priori bound `(|E| + 1)^k`.
pub fn closure_prod(e: &MonomialSet, k: u32, budget: usize) -> Result<MonomialSet> {
    let overflow = || Error::ClosureOverflow {
        budget,
        bound: BigUint::from(e.len() + 1).pow(k),
    };
    let mut base = e.clone();
    base.insert(Monomial::one());
    let mut acc: MonomialSet = std::iter::once(Monomial::one()).collect();
    for _ in 0..k {
        let mut next = MonomialSet::new();
        for m in acc.iter() {
            for f in base.iter() {
                next.insert(m.mul(f));
                if next.len() > budget {
                    return Err(overflow());
                }
            }
        }
        if next == acc {
            break;
        }
        acc = next;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(ms: &[&[(u32, u32)]]) -> MonomialSet {
        ms.iter()
            .map(|m| Monomial::from_pairs(m.to_vec()))
            .collect()
    }

    #[test]
    fn sum_is_union() {
        let a = set(&[&[(0, 1)]]);
        let b = set(&[&[(1, 1)], &[(0, 1)]]);
        assert_eq!(closure_sum(&[a, b]).len(), 2);
        assert!(closure_sum(&[]).is_empty());
    }

    #[test]
    fn product_closure_of_two_variables() {
        let e = set(&[&[(0, 1)], &[(1, 1)]]);
        // {1, x, y, x^2, xy, y^2}
        let c = closure_prod(&e, 2, 100).unwrap();
        assert_eq!(c.len(), 6);
        assert!(c.contains(&Monomial::one()));
        assert!(c.len() as u64 <= 3u64.pow(2));
    }

    #[test]
    fn product_closure_budget() {
        let e: MonomialSet = (0..10).map(Monomial::var).collect();
        match closure_prod(&e, 4, 50) {
            Err(Error::ClosureOverflow { budget, bound }) => {
                assert_eq!(budget, 50);
                assert_eq!(bound, BigUint::from(11u32).pow(4));
            }
            other => panic!("expected overflow, got {other:?}"),
        }
    }
}
