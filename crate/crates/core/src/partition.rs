//! Integer partitions: the canonical representation, enumeration in
//! descending lexicographic order, counting, uniform sampling, and the
//! elementary symmetric polynomials evaluated at the parts.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error("NonPositivePart: {0} is not a positive integer")]
    NonPositivePart(i128),
    #[error("partition size overflows 64 bits")]
    SizeOverflow,
    #[error("invalid partition text {0:?}")]
    Parse(String),
    #[error("partition counts for n = {0} do not fit the 128-bit sampling table")]
    SamplerOverflow(u64),
}

/// A weakly decreasing sequence of positive integers.
///
/// The empty partition (size 0, length 0) is representable but only shows up
/// as an intermediate value; every public constructor that takes a size
/// requires it to be positive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    parts: Vec<u64>,
    size: u64,
}

impl Partition {
    /// Sorts `parts` into canonical (weakly decreasing) order and validates it.
    pub fn new(mut parts: Vec<u64>) -> Result<Self, PartitionError> {
        if parts.contains(&0) {
            return Err(PartitionError::NonPositivePart(0));
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        let size = parts
            .iter()
            .try_fold(0u64, |acc, &p| acc.checked_add(p))
            .ok_or(PartitionError::SizeOverflow)?;
        Ok(Self { parts, size })
    }

    /// The empty partition.
    pub fn empty() -> Self {
        Self {
            parts: Vec::new(),
            size: 0,
        }
    }

    /// Builds a partition from parts already known to be canonical.
    pub(crate) fn from_canonical(parts: Vec<u64>) -> Self {
        debug_assert!(parts.windows(2).all(|w| w[0] >= w[1]));
        debug_assert!(parts.last().is_none_or(|&p| p > 0));
        let size = parts.iter().sum();
        Self { parts, size }
    }

    pub fn parts(&self) -> &[u64] {
        &self.parts
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Largest part, or `None` for the empty partition.
    pub fn largest(&self) -> Option<u64> {
        self.parts.first().copied()
    }

    /// Parts grouped into `(value, multiplicity)` runs, largest value first.
    pub fn runs(&self) -> Vec<(u64, u64)> {
        runs_of(&self.parts)
    }
}

pub(crate) fn runs_of(parts: &[u64]) -> Vec<(u64, u64)> {
    let mut runs: Vec<(u64, u64)> = Vec::new();
    for &p in parts {
        match runs.last_mut() {
            Some((v, m)) if *v == p => *m += 1,
            _ => runs.push((p, 1)),
        }
    }
    runs
}

/// Canonicalizes an arbitrary integer sequence into a [`Partition`].
///
/// Every element must be positive; the order of `raw` is irrelevant.
pub fn make_partition(raw: &[i64]) -> Result<Partition, PartitionError> {
    let mut parts = Vec::with_capacity(raw.len());
    for &x in raw {
        if x <= 0 {
            return Err(PartitionError::NonPositivePart(x.into()));
        }
        parts.push(x as u64);
    }
    Partition::new(parts)
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl FromStr for Partition {
    type Err = PartitionError;

    /// Parses comma-separated parts. The empty string is the empty partition.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Partition::empty());
        }
        let mut raw = Vec::new();
        for tok in s.split(',') {
            let tok = tok.trim();
            let v: i128 = tok
                .parse()
                .map_err(|_| PartitionError::Parse(s.to_string()))?;
            if v <= 0 {
                return Err(PartitionError::NonPositivePart(v));
            }
            let v = u64::try_from(v).map_err(|_| PartitionError::Parse(s.to_string()))?;
            raw.push(v);
        }
        Partition::new(raw)
    }
}

/// Replaces `parts` by its successor in descending lexicographic order.
/// Returns `false` (leaving `parts` untouched) at the all-ones partition.
fn advance(parts: &mut Vec<u64>) -> bool {
    let Some(i) = parts.iter().rposition(|&p| p > 1) else {
        return false;
    };
    let ones = (parts.len() - i - 1) as u64;
    let v = parts[i] - 1;
    parts[i] = v;
    parts.truncate(i + 1);
    fill_greedy(parts, ones + 1, v);
    true
}

/// Appends the lexicographically largest partition of `rem` with parts `<= cap`.
fn fill_greedy(parts: &mut Vec<u64>, mut rem: u64, cap: u64) {
    while rem > 0 {
        let take = rem.min(cap);
        parts.push(take);
        rem -= take;
    }
}

/// Iterator over partitions of a fixed size in descending lexicographic order.
///
/// A stream can start at any partition (see [`PartitionIter::resume_from`])
/// and can optionally be confined to a single largest part, which is how the
/// verifier shards the space.
#[derive(Debug, Clone)]
pub struct PartitionIter {
    current: Option<Vec<u64>>,
    fixed_largest: Option<u64>,
}

impl PartitionIter {
    /// Resumes enumeration at `start` (inclusive).
    pub fn resume_from(start: &Partition) -> Self {
        Self {
            current: (!start.is_empty()).then(|| start.parts.clone()),
            fixed_largest: None,
        }
    }

    /// Partitions of `n` whose largest part is exactly `largest`.
    pub fn with_largest_part(n: u64, largest: u64) -> Self {
        if largest == 0 || largest > n {
            return Self {
                current: None,
                fixed_largest: None,
            };
        }
        let mut parts = vec![largest];
        fill_greedy(&mut parts, n - largest, largest);
        Self {
            current: Some(parts),
            fixed_largest: Some(largest),
        }
    }

    /// Advances without allocating, exposing the current parts to `f`.
    /// Used on hot paths that only need to look at each partition once.
    pub fn for_each_parts(mut self, mut f: impl FnMut(&[u64])) {
        while let Some(parts) = self.current.as_mut() {
            f(parts);
            if !advance(parts) || self.fixed_largest.is_some_and(|l| parts[0] != l) {
                self.current = None;
            }
        }
    }
}

impl Iterator for PartitionIter {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        let parts = self.current.as_mut()?;
        let out = Partition::from_canonical(parts.clone());
        if !advance(parts) || self.fixed_largest.is_some_and(|l| parts[0] != l) {
            self.current = None;
        }
        Some(out)
    }
}

/// Every partition of `n` exactly once, in descending lexicographic order.
pub fn enumerate_partitions(n: u64) -> PartitionIter {
    if n == 0 {
        return PartitionIter {
            current: None,
            fixed_largest: None,
        };
    }
    PartitionIter {
        current: Some(vec![n]),
        fixed_largest: None,
    }
}

/// p(n) via Euler's pentagonal number recurrence; p(0) = 1.
pub fn count_partitions(n: u64) -> BigUint {
    let n = n as usize;
    let mut table: Vec<BigInt> = Vec::with_capacity(n + 1);
    table.push(BigInt::one());
    for i in 1..=n {
        let mut acc = BigInt::zero();
        for k in 1usize.. {
            let g1 = k * (3 * k - 1) / 2;
            if g1 > i {
                break;
            }
            let mut term = table[i - g1].clone();
            let g2 = k * (3 * k + 1) / 2;
            if g2 <= i {
                term += &table[i - g2];
            }
            if k % 2 == 1 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        table.push(acc);
    }
    table[n]
        .to_biguint()
        .expect("partition counts are nonnegative")
}

/// Draws partitions of `n` uniformly at random.
///
/// `table[m][k]` holds the number of partitions of `m` with every part `<= k`.
#[derive(Debug, Clone)]
pub struct PartitionSampler {
    n: u64,
    table: Vec<Vec<u128>>,
}

impl PartitionSampler {
    pub fn new(n: u64) -> Result<Self, PartitionError> {
        if n == 0 {
            return Err(PartitionError::NonPositivePart(0));
        }
        // p(n) bounds every entry of the table.
        if count_partitions(n).bits() > 127 {
            return Err(PartitionError::SamplerOverflow(n));
        }
        let size = n as usize;
        let mut table = vec![vec![0u128; size + 1]; size + 1];
        table[0].iter_mut().for_each(|c| *c = 1);
        for m in 1..=size {
            for k in 1..=size {
                let without_k = table[m][k - 1];
                let with_k = if k <= m { table[m - k][k] } else { 0 };
                table[m][k] = without_k
                    .checked_add(with_k)
                    .ok_or(PartitionError::SamplerOverflow(n))?;
            }
        }
        Ok(Self { n, table })
    }

    pub fn total(&self) -> u128 {
        let n = self.n as usize;
        self.table[n][n]
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Partition {
        let mut rank = rng.gen_range(0..self.total());
        let mut rem = self.n as usize;
        let mut cap = rem;
        let mut parts = Vec::new();
        while rem > 0 {
            // Largest part first, so ranks follow descending lexicographic order.
            let mut chosen = None;
            for a in (1..=cap.min(rem)).rev() {
                let c = self.table[rem - a][a];
                if rank < c {
                    chosen = Some(a);
                    break;
                }
                rank -= c;
            }
            let a = chosen.expect("rank is below the partition count");
            parts.push(a as u64);
            rem -= a;
            cap = a;
        }
        Partition::from_canonical(parts)
    }
}

/// e_k evaluated at the parts of `lambda`; e_0 = 1 and e_k = 0 for k > length.
pub fn elementary_symmetric(lambda: &Partition, k: usize) -> BigUint {
    if k > lambda.len() {
        return BigUint::zero();
    }
    // Coefficients of prod (1 + x_i t), truncated at degree k.
    let mut e = vec![BigUint::zero(); k + 1];
    e[0] = BigUint::one();
    for (i, &x) in lambda.parts.iter().enumerate() {
        for j in (1..=k.min(i + 1)).rev() {
            let add = &e[j - 1] * x;
            e[j] += add;
        }
    }
    e.swap_remove(k)
}
