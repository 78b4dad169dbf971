//! Pairwise sums of integer multisets, the exhaustive search for multisets
//! sharing their pairwise sums, and the exponential lift `x -> base^x` that
//! turns such a pair into two partitions sharing their pairwise products.
//!
//! Pairwise sums determine a multiset of length 3 uniquely but not one of
//! length 4 (for example `{0,3,5,6}` and `{1,2,4,7}`), and lifting that pair
//! gives partitions of different sizes with the same `pre2` image.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::multiset::{parse_terms, MultisetError};
use crate::partition::Partition;
use crate::verifier::{CollisionError, CollisionPair};

/// A multiset of integers (zero and negatives allowed) in run-length form,
/// values strictly decreasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct IntMultiset {
    entries: Vec<(i64, u64)>,
    total_count: u64,
}

impl IntMultiset {
    pub fn from_values(values: impl IntoIterator<Item = i64>) -> Self {
        let mut vals: Vec<i64> = values.into_iter().collect();
        vals.sort_unstable_by(|a, b| b.cmp(a));
        let mut entries: Vec<(i64, u64)> = Vec::new();
        for v in vals {
            match entries.last_mut() {
                Some((last, m)) if *last == v => *m += 1,
                _ => entries.push((v, 1)),
            }
        }
        let total_count = entries.iter().map(|e| e.1).sum();
        Self {
            entries,
            total_count,
        }
    }

    pub fn entries(&self) -> &[(i64, u64)] {
        &self.entries
    }

    pub fn total_count(&self) -> u64 {
        self.total_count
    }

    /// Elements with multiplicity, largest first.
    pub fn values(&self) -> Vec<i64> {
        self.entries
            .iter()
            .flat_map(|&(v, m)| std::iter::repeat_n(v, m as usize))
            .collect()
    }

    /// Every multiplicity is one.
    pub fn is_set(&self) -> bool {
        self.entries.iter().all(|e| e.1 == 1)
    }

    pub fn sum(&self) -> i128 {
        self.entries
            .iter()
            .map(|&(v, m)| v as i128 * m as i128)
            .sum()
    }

    pub fn shifted(&self, by: i64) -> Self {
        Self {
            entries: self.entries.iter().map(|&(v, m)| (v + by, m)).collect(),
            total_count: self.total_count,
        }
    }
}

impl fmt::Display for IntMultiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (v, m)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            write!(f, "{v}^{m}")?;
        }
        Ok(())
    }
}

impl FromStr for IntMultiset {
    type Err = MultisetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut entries = Vec::new();
        let mut total = 0u64;
        for (v, m) in parse_terms(s)? {
            let v: i64 = v.parse().map_err(|_| MultisetError::Parse(s.to_string()))?;
            if m == 0 {
                return Err(MultisetError::ZeroMultiplicity);
            }
            if matches!(entries.last(), Some(&(prev, _)) if prev <= v) {
                return Err(MultisetError::NotDecreasing);
            }
            total = total.checked_add(m).ok_or(MultisetError::CountOverflow)?;
            entries.push((v, m));
        }
        Ok(Self {
            entries,
            total_count: total,
        })
    }
}

/// `{x_i + x_j : i < j}` with multiplicity.
pub fn pairwise_sums(x: &IntMultiset) -> IntMultiset {
    let vals = x.values();
    let mut sums = Vec::with_capacity(vals.len() * vals.len().saturating_sub(1) / 2);
    for (i, &a) in vals.iter().enumerate() {
        for &b in &vals[i + 1..] {
            sums.push(a.checked_add(b).expect("pairwise sum overflows i64"));
        }
    }
    IntMultiset::from_values(sums)
}

/// Two distinct multisets with the same pairwise sums.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SumCollision {
    pub first: IntMultiset,
    pub second: IntMultiset,
}

impl SumCollision {
    /// Both sides are sets (no repeated element), the setting in which the
    /// classical power-of-two criterion is stated.
    pub fn is_set_collision(&self) -> bool {
        self.first.is_set() && self.second.is_set()
    }
}

fn for_each_nondecreasing(
    prefix: &mut Vec<i64>,
    len: usize,
    lo: i64,
    hi: i64,
    f: &mut impl FnMut(&[i64]),
) {
    if len == 0 {
        f(prefix);
        return;
    }
    for x in lo..=hi {
        prefix.push(x);
        for_each_nondecreasing(prefix, len - 1, x, hi, f);
        prefix.pop();
    }
}

/// All unordered pairs of distinct `length`-element multisets drawn from
/// `[0, max_abs]` that have equal pairwise sums.
///
/// The outer loop runs over the smallest element, so it can be sharded; two
/// colliding multisets share the smallest pairwise sum but not necessarily
/// the smallest element, hence the merge before grouping.
pub fn search_sum_collisions(length: usize, max_abs: i64) -> Vec<SumCollision> {
    assert!(length >= 2, "sum collision search needs length >= 2");
    assert!(max_abs >= 0, "max_abs must be nonnegative");
    let keyed: Vec<(IntMultiset, IntMultiset)> = (0..=max_abs)
        .into_par_iter()
        .flat_map_iter(|lo| {
            let mut out = Vec::new();
            let mut prefix = vec![lo];
            for_each_nondecreasing(&mut prefix, length - 1, lo, max_abs, &mut |xs| {
                let m = IntMultiset::from_values(xs.iter().copied());
                out.push((pairwise_sums(&m), m));
            });
            out
        })
        .collect();
    let mut groups: HashMap<IntMultiset, Vec<IntMultiset>> = HashMap::new();
    for (key, m) in keyed {
        groups.entry(key).or_default().push(m);
    }
    let mut classes: Vec<Vec<IntMultiset>> = groups.into_values().filter(|g| g.len() > 1).collect();
    for class in &mut classes {
        class.sort_unstable();
    }
    classes.sort_unstable();
    let mut out = Vec::new();
    for class in classes {
        for (i, a) in class.iter().enumerate() {
            for b in &class[i + 1..] {
                out.push(SumCollision {
                    first: a.clone(),
                    second: b.clone(),
                });
            }
        }
    }
    out
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LiftError {
    #[error("exponential lift needs base >= 2, got {0}")]
    BadBase(u64),
    #[error("exponential lift needs nonnegative exponents, got {0}")]
    NegativeExponent(i64),
    #[error("{base}^{exponent} does not fit in 64 bits")]
    Overflow { base: u64, exponent: i64 },
    #[error("LiftVerificationFailed: {0}")]
    LiftVerificationFailed(CollisionError),
}

fn lift_one(x: &IntMultiset, base: u64) -> Result<Partition, LiftError> {
    let mut parts = Vec::with_capacity(x.total_count() as usize);
    for v in x.values() {
        if v < 0 {
            return Err(LiftError::NegativeExponent(v));
        }
        let e = u32::try_from(v).map_err(|_| LiftError::Overflow { base, exponent: v })?;
        let part = base
            .checked_pow(e)
            .ok_or(LiftError::Overflow { base, exponent: v })?;
        parts.push(part);
    }
    Ok(Partition::new(parts).expect("powers of base >= 2 are positive and bounded"))
}

/// Maps every element `x` to `base^x` on both sides and re-verifies that the
/// two resulting partitions have the same `pre2` image.
pub fn exp_lift(
    first: &IntMultiset,
    second: &IntMultiset,
    base: u64,
) -> Result<CollisionPair, LiftError> {
    if base < 2 {
        return Err(LiftError::BadBase(base));
    }
    let a = lift_one(first, base)?;
    let b = lift_one(second, base)?;
    CollisionPair::new(a, b).map_err(LiftError::LiftVerificationFailed)
}
