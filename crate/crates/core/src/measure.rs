//! The uniform dyadic premeasure on the hypothesis algebra.
//!
//! Every value here is an exact dyadic rational. Additivity checks are
//! exact equalities; nothing in this module touches floating point except
//! the display conversion [`DyadicRational::to_f64`].

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::hypothesis::{DepthCap, Hypothesis};

/// `numerator / 2^log2_denominator`, always in reduced form
/// (numerator odd, or zero with exponent zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DyadicRational {
    numerator: u128,
    log2_denominator: u32,
}

impl DyadicRational {
    pub const ZERO: DyadicRational = DyadicRational {
        numerator: 0,
        log2_denominator: 0,
    };
    pub const ONE: DyadicRational = DyadicRational {
        numerator: 1,
        log2_denominator: 0,
    };

    pub fn new(numerator: u128, log2_denominator: u32) -> Self {
        assert!(log2_denominator < 128, "denominator 2^{log2_denominator} too large");
        if numerator == 0 {
            return Self::ZERO;
        }
        let shift = numerator.trailing_zeros().min(log2_denominator);
        DyadicRational {
            numerator: numerator >> shift,
            log2_denominator: log2_denominator - shift,
        }
    }

    pub fn numerator(self) -> u128 {
        self.numerator
    }

    pub fn log2_denominator(self) -> u32 {
        self.log2_denominator
    }

    pub fn is_zero(self) -> bool {
        self.numerator == 0
    }

    // Both numerators scaled to the larger denominator.
    fn aligned(self, other: Self) -> (u128, u128, u32) {
        let k = self.log2_denominator.max(other.log2_denominator);
        let a = self
            .numerator
            .checked_shl(k - self.log2_denominator)
            .filter(|v| v >> (k - self.log2_denominator) == self.numerator)
            .expect("dyadic alignment overflow");
        let b = other
            .numerator
            .checked_shl(k - other.log2_denominator)
            .filter(|v| v >> (k - other.log2_denominator) == other.numerator)
            .expect("dyadic alignment overflow");
        (a, b, k)
    }

    pub fn checked_sub(self, other: Self) -> Option<Self> {
        let (a, b, k) = self.aligned(other);
        a.checked_sub(b).map(|n| DyadicRational::new(n, k))
    }

    /// Multiplication by `2^-k`.
    pub fn halve(self, k: u32) -> Self {
        DyadicRational::new(self.numerator, self.log2_denominator + k)
    }

    pub fn to_f64(self) -> f64 {
        self.numerator as f64 / 2f64.powi(self.log2_denominator as i32)
    }

    pub fn to_big_rational(self) -> BigRational {
        BigRational::new(BigInt::from(self.numerator), BigInt::from(1u8) << self.log2_denominator)
    }
}

impl Add for DyadicRational {
    type Output = DyadicRational;

    fn add(self, other: Self) -> Self {
        let (a, b, k) = self.aligned(other);
        DyadicRational::new(a.checked_add(b).expect("dyadic addition overflow"), k)
    }
}

impl std::iter::Sum for DyadicRational {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(DyadicRational::ZERO, Add::add)
    }
}

impl PartialOrd for DyadicRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DyadicRational {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.aligned(*other);
        a.cmp(&b)
    }
}

impl fmt::Display for DyadicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.log2_denominator == 0 {
            write!(f, "{}", self.numerator)
        } else {
            write!(f, "{}/{}", self.numerator, 1u128 << self.log2_denominator)
        }
    }
}

/// `|cells| / 2^depth`.
pub fn premeasure(h: &Hypothesis) -> DyadicRational {
    DyadicRational::new(h.cell_count() as u128, h.depth())
}

/// Both sides of the finite-additivity identity for a disjoint family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdditivityWitness {
    pub measure_of_union: DyadicRational,
    pub sum_of_measures: DyadicRational,
}

impl AdditivityWitness {
    pub fn holds(&self) -> bool {
        self.measure_of_union == self.sum_of_measures
    }
}

/// Checks `P0(h_1 ∪ ... ∪ h_k) = Σ P0(h_i)` for pairwise-disjoint inputs.
///
/// Returns [`Error::NotDisjoint`] naming the first overlapping pair.
pub fn check_finite_additivity(hs: &[Hypothesis]) -> Result<AdditivityWitness> {
    for i in 0..hs.len() {
        for j in i + 1..hs.len() {
            if !hs[i].is_disjoint(&hs[j]) {
                return Err(Error::NotDisjoint { first: i, second: j });
            }
        }
    }
    let measure_of_union = match hs.split_first() {
        None => DyadicRational::ZERO,
        Some((first, rest)) => premeasure(&rest.iter().fold(first.clone(), |acc, h| acc.union(h))),
    };
    let sum_of_measures = hs.iter().map(premeasure).sum();
    Ok(AdditivityWitness {
        measure_of_union,
        sum_of_measures,
    })
}

/// `[P0(∩_{j≤k} {bit 2j-1 is 1})]` for `k = 1..=count`.
///
/// Each finite stage is a member of the algebra; the limit (bit 1 at every
/// odd position) is not, and its measure sequence `2^-k` tends to zero.
pub fn shrinking_intersection_measures(count: u32, cap: DepthCap) -> Result<Vec<DyadicRational>> {
    if count == 0 {
        return Err(Error::Config("need at least one intersection stage".into()));
    }
    cap.check(2 * count - 1)?;
    let mut out = Vec::with_capacity(count as usize);
    let mut meet = Hypothesis::bit_is_one(1)?;
    out.push(premeasure(&meet));
    for j in 2..=count {
        meet = meet.intersection(&Hypothesis::bit_is_one(2 * j - 1)?);
        out.push(premeasure(&meet));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(s: &str) -> Hypothesis {
        s.parse().unwrap()
    }

    #[test]
    fn premeasure_examples() {
        assert_eq!(premeasure(&h("2:00,01,10")), DyadicRational::new(3, 2));
        for d in 1..8 {
            assert_eq!(premeasure(&Hypothesis::full(d).unwrap()), DyadicRational::ONE);
            assert_eq!(premeasure(&Hypothesis::empty(d).unwrap()), DyadicRational::ZERO);
        }
    }

    #[test]
    fn reduced_form() {
        let v = DyadicRational::new(4, 3);
        assert_eq!((v.numerator(), v.log2_denominator()), (1, 1));
        assert_eq!(DyadicRational::new(0, 9), DyadicRational::ZERO);
        assert_eq!(DyadicRational::new(8, 3), DyadicRational::ONE);
        assert_eq!(DyadicRational::new(3, 2).to_string(), "3/4");
        assert_eq!(DyadicRational::ONE.to_string(), "1");
        assert_eq!(DyadicRational::new(3, 2).to_f64(), 0.75);
    }

    #[test]
    fn arithmetic_and_order() {
        let half = DyadicRational::new(1, 1);
        let quarter = DyadicRational::new(1, 2);
        assert_eq!(half + quarter, DyadicRational::new(3, 2));
        assert_eq!(half.checked_sub(quarter), Some(quarter));
        assert_eq!(quarter.checked_sub(half), None);
        assert!(quarter < half);
        assert_eq!(half.halve(2), DyadicRational::new(1, 3));
    }

    #[test]
    fn additivity_examples() {
        let w = check_finite_additivity(&[h("1:0"), h("1:1")]).unwrap();
        assert!(w.holds());
        assert_eq!(w.measure_of_union, DyadicRational::ONE);

        let w = check_finite_additivity(&[h("2:00"), h("2:01"), h("1:1")]).unwrap();
        assert!(w.holds());
        assert_eq!(w.sum_of_measures, DyadicRational::ONE);

        let err = check_finite_additivity(&[h("1:0"), h("2:01")]).unwrap_err();
        assert!(matches!(err, Error::NotDisjoint { first: 0, second: 1 }));
    }

    #[test]
    fn shrinking_intersections() {
        let cap = DepthCap::default();
        assert_eq!(
            shrinking_intersection_measures(1, cap).unwrap(),
            vec![DyadicRational::new(1, 1)]
        );

        // enumerate depth-5 prefixes with ones at positions 1, 3, 5
        let brute: Vec<DyadicRational> = (1..=3u32)
            .map(|k| {
                let hits = (0..32u64)
                    .filter(|c| (1..=k).all(|j| c >> (5 - (2 * j - 1)) & 1 == 1))
                    .count();
                DyadicRational::new(hits as u128, 5)
            })
            .collect();
        assert_eq!(shrinking_intersection_measures(3, cap).unwrap(), brute);
        assert_eq!(
            brute,
            vec![
                DyadicRational::new(1, 1),
                DyadicRational::new(1, 2),
                DyadicRational::new(1, 3)
            ]
        );

        assert!(matches!(
            shrinking_intersection_measures(11, cap),
            Err(Error::DepthCap { depth: 21, cap: 20 })
        ));
        assert!(shrinking_intersection_measures(0, cap).is_err());
    }
}
