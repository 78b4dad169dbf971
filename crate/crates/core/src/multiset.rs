//! Product multisets: the image of a partition under `pre_k`, stored as
//! run-length `(value, multiplicity)` pairs with values strictly decreasing.

use std::fmt;
use std::hash::Hasher;
use std::io::Write;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::partition::{runs_of, Partition};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MultisetError {
    #[error("invalid multiset text {0:?}")]
    Parse(String),
    #[error("multiset values must be positive")]
    ZeroValue,
    #[error("multiplicities must be positive")]
    ZeroMultiplicity,
    #[error("multiset values must be strictly decreasing")]
    NotDecreasing,
    #[error("multiset element count overflows 64 bits")]
    CountOverflow,
}

/// A multiset of positive integers in canonical run-length form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ProductMultiset {
    entries: Vec<(BigUint, u64)>,
    total_count: u64,
}

impl ProductMultiset {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Validates already-canonical entries.
    pub fn from_entries(entries: Vec<(BigUint, u64)>) -> Result<Self, MultisetError> {
        let mut total = 0u64;
        for (i, (v, m)) in entries.iter().enumerate() {
            if v.is_zero() {
                return Err(MultisetError::ZeroValue);
            }
            if *m == 0 {
                return Err(MultisetError::ZeroMultiplicity);
            }
            if i > 0 && entries[i - 1].0 <= *v {
                return Err(MultisetError::NotDecreasing);
            }
            total = total.checked_add(*m).ok_or(MultisetError::CountOverflow)?;
        }
        Ok(Self {
            entries,
            total_count: total,
        })
    }

    /// Collects values in any order, merging duplicates.
    pub fn from_values<I>(values: I) -> Result<Self, MultisetError>
    where
        I: IntoIterator,
        I::Item: Into<BigUint>,
    {
        let mut vals: Vec<BigUint> = values.into_iter().map(Into::into).collect();
        vals.sort_unstable_by(|a, b| b.cmp(a));
        let mut entries: Vec<(BigUint, u64)> = Vec::new();
        for v in vals {
            match entries.last_mut() {
                Some((last, m)) if *last == v => *m += 1,
                _ => entries.push((v, 1)),
            }
        }
        Self::from_entries(entries)
    }

    /// Entries sorted by value, largest first.
    pub fn entries(&self) -> &[(BigUint, u64)] {
        &self.entries
    }

    pub fn total_count(&self) -> u64 {
        self.total_count
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max(&self) -> Option<&BigUint> {
        self.entries.first().map(|(v, _)| v)
    }

    pub fn min(&self) -> Option<&BigUint> {
        self.entries.last().map(|(v, _)| v)
    }

    /// Sum of all elements counted with multiplicity.
    pub fn sum(&self) -> BigUint {
        self.entries.iter().map(|(v, m)| v * *m).sum()
    }

    /// All elements with multiplicity, largest first.
    pub fn values(&self) -> impl Iterator<Item = &BigUint> + '_ {
        self.entries
            .iter()
            .flat_map(|(v, m)| std::iter::repeat_n(v, *m as usize))
    }

    /// 64-bit fingerprint of the canonical text encoding.
    pub fn fingerprint(&self) -> u64 {
        canonical_fingerprint(self.to_string().as_bytes())
    }
}

/// Hash used to bucket images before exact comparison. Deterministic across
/// runs and processes: `DefaultHasher::new` uses fixed zero keys.
pub fn canonical_fingerprint(encoding: &[u8]) -> u64 {
    let mut h = std::hash::DefaultHasher::new();
    h.write(encoding);
    h.finish()
}

impl fmt::Display for ProductMultiset {
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

/// Splits `value^multiplicity` terms joined by `+`. The empty string (after
/// trimming) has no terms.
pub(crate) fn parse_terms(s: &str) -> Result<Vec<(&str, u64)>, MultisetError> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split('+')
        .map(|term| {
            let (v, m) = term
                .trim()
                .split_once('^')
                .ok_or_else(|| MultisetError::Parse(s.to_string()))?;
            let m: u64 = m
                .trim()
                .parse()
                .map_err(|_| MultisetError::Parse(s.to_string()))?;
            Ok((v.trim(), m))
        })
        .collect()
}

impl FromStr for ProductMultiset {
    type Err = MultisetError;

    /// Parses the canonical form, e.g. `8^1+4^2+2^2+1^1`. Terms must already
    /// be in strictly decreasing order.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut entries = Vec::new();
        for (v, m) in parse_terms(s)? {
            if v.starts_with('-') || v.starts_with('+') {
                return Err(MultisetError::Parse(s.to_string()));
            }
            let v: BigUint = v.parse().map_err(|_| MultisetError::Parse(s.to_string()))?;
            entries.push((v, m));
        }
        Self::from_entries(entries)
    }
}

/// Pairwise products of `parts` (canonical order) as merged runs, largest
/// value first. Works on the distinct parts, so the cost is quadratic in the
/// number of distinct parts rather than in the length.
pub(crate) fn pre2_runs(parts: &[u64], out: &mut Vec<(u128, u64)>) {
    out.clear();
    let runs = runs_of(parts);
    for (i, &(a, ma)) in runs.iter().enumerate() {
        if ma >= 2 {
            out.push((a as u128 * a as u128, ma * (ma - 1) / 2));
        }
        for &(b, mb) in &runs[i + 1..] {
            out.push((a as u128 * b as u128, ma * mb));
        }
    }
    out.sort_unstable_by_key(|r| std::cmp::Reverse(r.0));
    let mut w = 0;
    for r in 0..out.len() {
        if w > 0 && out[w - 1].0 == out[r].0 {
            out[w - 1].1 += out[r].1;
        } else {
            out[w] = out[r];
            w += 1;
        }
    }
    out.truncate(w);
}

/// Writes the canonical text encoding of merged runs into `buf`.
pub(crate) fn encode_runs(runs: &[(u128, u64)], buf: &mut Vec<u8>) {
    buf.clear();
    for (i, (v, m)) in runs.iter().enumerate() {
        if i > 0 {
            buf.push(b'+');
        }
        write!(buf, "{v}^{m}").expect("writing to a Vec cannot fail");
    }
}

/// `pre_2(lambda)`: the multiset of products `lambda_i * lambda_j`, `i < j`.
pub fn pre2(lambda: &Partition) -> ProductMultiset {
    let mut runs = Vec::new();
    pre2_runs(lambda.parts(), &mut runs);
    let total_count = runs.iter().map(|r| r.1).sum();
    ProductMultiset {
        entries: runs
            .into_iter()
            .map(|(v, m)| (BigUint::from(v), m))
            .collect(),
        total_count,
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        assert!(
            acc <= u64::MAX as u128,
            "multiplicity C({n}, {k}) overflows 64 bits"
        );
    }
    acc as u64
}

/// `pre_k(lambda)`: products over all `k`-element index subsets. Empty when
/// `lambda` has fewer than `k` parts.
///
/// # Panics
///
/// If `k == 0`, or if a multiplicity exceeds `u64::MAX`.
pub fn pre_k(lambda: &Partition, k: usize) -> ProductMultiset {
    assert!(k >= 1, "pre_k requires k >= 1");
    if lambda.len() < k {
        return ProductMultiset::empty();
    }
    if k == 2 {
        return pre2(lambda);
    }
    // Choose how many copies c_i of each distinct part enter the product;
    // that choice occurs prod C(m_i, c_i) times.
    let runs = lambda.runs();
    let mut acc: Vec<(BigUint, u64)> = Vec::new();
    fn walk(
        runs: &[(u64, u64)],
        left: u64,
        value: BigUint,
        mult: u64,
        acc: &mut Vec<(BigUint, u64)>,
    ) {
        let Some((&(v, m), rest)) = runs.split_first() else {
            if left == 0 {
                acc.push((value, mult));
            }
            return;
        };
        let available: u64 = rest.iter().map(|r| r.1).sum();
        for c in 0..=m.min(left) {
            if left - c > available {
                continue;
            }
            let mult = mult
                .checked_mul(binomial(m, c))
                .expect("pre_k multiplicity overflows 64 bits");
            let value = &value * BigUint::from(v).pow(c as u32);
            walk(rest, left - c, value, mult, acc);
        }
    }
    walk(&runs, k as u64, BigUint::one(), 1, &mut acc);
    acc.sort_unstable_by(|a, b| b.0.cmp(&a.0));
    let mut entries: Vec<(BigUint, u64)> = Vec::with_capacity(acc.len());
    for (v, m) in acc {
        match entries.last_mut() {
            Some((last, lm)) if *last == v => {
                *lm = lm
                    .checked_add(m)
                    .expect("pre_k multiplicity overflows 64 bits")
            }
            _ => entries.push((v, m)),
        }
    }
    ProductMultiset::from_entries(entries).expect("pre_k builds canonical entries")
}
