//! Inverting `pre2` given the image and the partition size.
//!
//! The size `n` fixes the power sum `p_1 = sum lambda_i`. Squaring and
//! subtracting twice the matching power sum of the products gives the next
//! power sum, `p_{2^m} = p_{2^(m-1)}^2 - 2 * sum_{q in P} q^(2^(m-1))`. After
//! enough doublings the largest part dominates, so `floor(p_{2^M}^(1/2^M))`
//! is exactly `lambda_1`. With `lambda_1` known, the maximum of what remains
//! of the image after removing all products among `lambda_1..lambda_{k-1}` is
//! `lambda_1 * lambda_k`, which peels off the parts one at a time.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::{Integer, Roots};
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::multiset::{pre2, ProductMultiset};
use crate::partition::Partition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReconstructionErrorKind {
    NotTriangularCount,
    IndivisibleStep,
    MissingProduct,
    NonMonotoneParts,
    ResidueNonEmpty,
    SizeMismatch,
    NoCandidateRoot,
}

impl fmt::Display for ReconstructionErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind}: {detail}")]
pub struct ReconstructionError {
    pub kind: ReconstructionErrorKind,
    pub detail: String,
}

impl ReconstructionError {
    fn new(kind: ReconstructionErrorKind, detail: impl Into<String>) -> Self {
        Self {
            kind,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvertError {
    #[error("NoPreimage: {0}")]
    NoPreimage(ReconstructionError),
    /// Two partitions of the same size share the image. Never expected; if it
    /// fires, the inverter has a bug or injectivity fails.
    #[error("AmbiguousPreimage: {0} and {1} share the image")]
    AmbiguousPreimage(Partition, Partition),
}

impl From<ReconstructionError> for InvertError {
    fn from(e: ReconstructionError) -> Self {
        InvertError::NoPreimage(e)
    }
}

use ReconstructionErrorKind::*;

/// The length `l` with `l(l-1)/2 = count`; a count of zero gives length 1.
pub fn length_from_count(count: u64) -> Result<u64, ReconstructionError> {
    if count == 0 {
        return Ok(1);
    }
    let disc = 1 + 8 * count as u128;
    let root = disc.sqrt();
    let len = root.div_ceil(2);
    if root * root == disc && len * (len - 1) / 2 == count as u128 {
        Ok(len as u64)
    } else {
        Err(ReconstructionError::new(
            NotTriangularCount,
            format!("{count} is not a triangular number"),
        ))
    }
}

/// Power sums `p[m] = sum lambda_i^(2^m)` for `m = 0..=depth`, as derived from
/// an image and a size. Values are signed: on a corrupt image the recurrence
/// can go negative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PowerSumSequence {
    values: Vec<BigInt>,
    source_size: u64,
}

impl PowerSumSequence {
    pub fn values(&self) -> &[BigInt] {
        &self.values
    }

    pub fn source_size(&self) -> u64 {
        self.source_size
    }

    pub fn depth(&self) -> u32 {
        (self.values.len() - 1) as u32
    }

    pub fn last(&self) -> &BigInt {
        self.values.last().expect("sequence always holds p[0]")
    }
}

/// Runs the doubling recurrence `depth` times starting from `p[0] = n`.
pub fn power_sums_from_pre2(image: &ProductMultiset, n: u64, depth: u32) -> PowerSumSequence {
    let mut values = Vec::with_capacity(depth as usize + 1);
    values.push(BigInt::from(n));
    // powers[i] = q_i^(2^(m-1)) for the step producing p[m].
    let mut powers: Vec<BigUint> = image.entries().iter().map(|(q, _)| q.clone()).collect();
    for m in 1..=depth {
        if m > 1 {
            for q in &mut powers {
                *q = &*q * &*q;
            }
        }
        let correction: BigUint = powers
            .iter()
            .zip(image.entries())
            .map(|(q, (_, mult))| q * *mult)
            .sum();
        let prev = &values[m as usize - 1];
        let next = prev * prev - (BigInt::from(correction) << 1u32);
        values.push(next);
    }
    PowerSumSequence {
        values,
        source_size: n,
    }
}

/// Least `M` with `2^M > ln(n) / ln(1 + 1/n)`.
///
/// Decided in exact integer arithmetic through the equivalent condition
/// `(n + 1)^(2^M) > n^(2^M + 1)`. For a partition of `n` with largest part
/// `a` and length `l <= n`, `a^(2^M) <= p[M] <= l * a^(2^M) < (a + 1)^(2^M)`,
/// so the floor root of `p[M]` is `a`.
pub fn doubling_depth(n: u64) -> u32 {
    assert!(n >= 1, "doubling_depth requires n >= 1");
    let n_big = BigUint::from(n);
    let mut lhs = &n_big + 1u32; // (n+1)^(2^M)
    let mut rhs = n_big.clone(); // n^(2^M)
    let mut depth = 0;
    while lhs <= &rhs * &n_big {
        lhs = &lhs * &lhs;
        rhs = &rhs * &rhs;
        depth += 1;
    }
    depth
}

/// `floor(x^(1/r))`.
pub fn integer_root(x: &BigUint, r: u32) -> BigUint {
    assert!(r >= 1, "integer_root requires r >= 1");
    x.nth_root(r)
}

/// Recovers `lambda_1` from the image and the size via the doubling
/// recurrence and an exact floor root.
pub fn largest_part(image: &ProductMultiset, n: u64) -> Result<u64, ReconstructionError> {
    let depth = doubling_depth(n);
    if depth > 31 {
        return Err(ReconstructionError::new(
            NoCandidateRoot,
            format!("doubling depth {depth} for n = {n} exceeds the supported root degree"),
        ));
    }
    let sums = power_sums_from_pre2(image, n, depth);
    let top = sums.last();
    if !top.is_positive() {
        return Err(ReconstructionError::new(
            NoCandidateRoot,
            format!("power sum p[{depth}] = {top} is not positive"),
        ));
    }
    let root = integer_root(top.magnitude(), 1u32 << depth);
    match root.to_u64() {
        Some(r) if (1..=n).contains(&r) => Ok(r),
        _ => Err(ReconstructionError::new(
            NoCandidateRoot,
            format!("root {root} of p[{depth}] is outside 1..={n}"),
        )),
    }
}

/// Peels parts off `image` given the largest part.
///
/// At step `k` the maximum of the working multiset must be
/// `lambda1 * lambda_k`; every product `lambda_i * lambda_k` with `i < k` is
/// then removed one occurrence at a time.
pub fn greedy_recover(
    image: &ProductMultiset,
    lambda1: u64,
) -> Result<Partition, ReconstructionError> {
    assert!(lambda1 >= 1, "greedy_recover requires lambda1 >= 1");
    let len = length_from_count(image.total_count())?;
    let mut work: BTreeMap<BigUint, u64> = image.entries().iter().cloned().collect();
    let mut parts: Vec<u64> = Vec::with_capacity(len as usize);
    parts.push(lambda1);
    let lead = BigUint::from(lambda1);
    for k in 2..=len {
        let (q, _) = work
            .last_key_value()
            .expect("counts match the triangular length");
        let (part, rem) = q.div_rem(&lead);
        if !rem.is_zero() {
            return Err(ReconstructionError::new(
                IndivisibleStep,
                format!("step {k}: {lambda1} does not divide {q}"),
            ));
        }
        let prev = parts[parts.len() - 1];
        if part > BigUint::from(prev) {
            return Err(ReconstructionError::new(
                NonMonotoneParts,
                format!("step {k}: recovered part {part} exceeds previous part {prev}"),
            ));
        }
        let part = part.to_u64().expect("bounded by the previous part");
        for &earlier in &parts {
            let product = BigUint::from(earlier) * part;
            match work.get_mut(&product) {
                Some(m) if *m > 1 => *m -= 1,
                Some(_) => {
                    work.remove(&product);
                }
                None => {
                    return Err(ReconstructionError::new(
                        MissingProduct,
                        format!("step {k}: product {earlier}*{part} = {product} is not available"),
                    ))
                }
            }
        }
        parts.push(part);
    }
    if !work.is_empty() {
        let left: u64 = work.values().sum();
        return Err(ReconstructionError::new(
            ResidueNonEmpty,
            format!("{left} products remain after recovering {len} parts"),
        ));
    }
    Ok(Partition::from_canonical(parts))
}

/// Accepts `candidate` only if it has size `n` and image exactly `image`.
fn confirm(
    candidate: Partition,
    image: &ProductMultiset,
    n: u64,
) -> Result<Partition, ReconstructionError> {
    if candidate.size() != n {
        return Err(ReconstructionError::new(
            SizeMismatch,
            format!(
                "recovered {candidate} has size {}, expected {n}",
                candidate.size()
            ),
        ));
    }
    if pre2(&candidate) != *image {
        return Err(ReconstructionError::new(
            ResidueNonEmpty,
            format!("recovered {candidate} does not reproduce the image"),
        ));
    }
    Ok(candidate)
}

/// The unique partition of `n` whose pairwise-product image is `image`.
pub fn invert_pre2(image: &ProductMultiset, n: u64) -> Result<Partition, InvertError> {
    if n == 0 {
        return Err(ReconstructionError::new(SizeMismatch, "size must be positive").into());
    }
    if image.is_empty() {
        return Ok(Partition::from_canonical(vec![n]));
    }
    let lambda1 = largest_part(image, n)?;
    let candidate = greedy_recover(image, lambda1)?;
    Ok(confirm(candidate, image, n)?)
}

/// Inversion by trying every feasible largest part: the divisors `d` of
/// `max(image)` with `d^2 >= max(image)` and `d <= n`. Does not use the
/// power-sum route at all, so it serves as an independent check on
/// [`invert_pre2`].
pub fn divisor_scan_invert(image: &ProductMultiset, n: u64) -> Result<Partition, InvertError> {
    if n == 0 {
        return Err(ReconstructionError::new(SizeMismatch, "size must be positive").into());
    }
    let Some(top) = image.max() else {
        return Ok(Partition::from_canonical(vec![n]));
    };
    let mut low = top.sqrt();
    if &low * &low < *top {
        low += 1u32;
    }
    let mut found: Option<Partition> = None;
    let mut last_err = ReconstructionError::new(
        NoCandidateRoot,
        format!("no divisor of {top} lies in [ceil(sqrt({top})), {n}]"),
    );
    if let Some(low) = low.to_u64() {
        for d in low..=n {
            if !(top % d).is_zero() {
                continue;
            }
            match greedy_recover(image, d).and_then(|c| confirm(c, image, n)) {
                Ok(c) => {
                    if let Some(prev) = found.take() {
                        return Err(InvertError::AmbiguousPreimage(prev, c));
                    }
                    found = Some(c);
                }
                Err(e) => last_err = e,
            }
        }
    }
    found.ok_or(InvertError::NoPreimage(last_err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::enumerate_partitions;
    use num_traits::One;
    use proptest::prelude::*;

    fn p(s: &str) -> Partition {
        s.parse().unwrap()
    }

    fn ms(s: &str) -> ProductMultiset {
        s.parse().unwrap()
    }

    fn kind<T: fmt::Debug>(r: Result<T, ReconstructionError>) -> ReconstructionErrorKind {
        r.unwrap_err().kind
    }

    fn no_preimage_kind<T: fmt::Debug>(r: Result<T, InvertError>) -> ReconstructionErrorKind {
        match r.unwrap_err() {
            InvertError::NoPreimage(e) => e.kind,
            other => panic!("unexpected {other:?}"),
        }
    }

    /// Floor root by bisection; independent of the library routine.
    fn bisect_root(x: &BigUint, r: u32) -> BigUint {
        let (mut lo, mut hi) = (BigUint::zero(), x + 1u32);
        while &lo + 1u32 < hi {
            let mid: BigUint = (&lo + &hi) >> 1u32;
            if mid.pow(r) <= *x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    fn direct_power_sum(lam: &Partition, m: u32) -> BigInt {
        lam.parts()
            .iter()
            .map(|&x| BigInt::from(x).pow(1u32 << m))
            .sum()
    }

    #[test]
    fn length_from_count_examples() {
        assert_eq!(length_from_count(6), Ok(4));
        assert_eq!(length_from_count(0), Ok(1));
        assert_eq!(length_from_count(1), Ok(2));
        assert_eq!(kind(length_from_count(5)), NotTriangularCount);
        assert_eq!(kind(length_from_count(u64::MAX)), NotTriangularCount);
        for l in 2..2000u64 {
            assert_eq!(length_from_count(l * (l - 1) / 2), Ok(l));
            assert_eq!(
                kind(length_from_count(l * (l - 1) / 2 + 1)),
                NotTriangularCount
            );
        }
    }

    #[test]
    fn power_sum_examples() {
        let s = power_sums_from_pre2(&ms("6^1"), 5, 1);
        assert_eq!(s.values(), &[BigInt::from(5), BigInt::from(13)]);
        let s = power_sums_from_pre2(&ms("8^1+4^2+2^2+1^1"), 8, 1);
        assert_eq!(s.values(), &[BigInt::from(8), BigInt::from(22)]);
        let s = power_sums_from_pre2(&ProductMultiset::empty(), 7, 2);
        assert_eq!(
            s.values(),
            &[BigInt::from(7), BigInt::from(49), BigInt::from(2401)]
        );
        assert_eq!(s.depth(), 2);
        assert_eq!(s.source_size(), 7);
    }

    #[test]
    fn power_sums_match_direct_evaluation() {
        for n in 1..=16 {
            let depth = doubling_depth(n);
            for lam in enumerate_partitions(n) {
                let s = power_sums_from_pre2(&pre2(&lam), n, depth);
                for m in 0..=depth {
                    assert_eq!(
                        s.values()[m as usize],
                        direct_power_sum(&lam, m),
                        "{lam} m={m}"
                    );
                }
                for w in s.values().windows(2) {
                    assert!(w[1] >= BigInt::one() && w[1] <= &w[0] * &w[0]);
                }
            }
        }
    }

    /// Floating-point evaluation of the stopping bound.
    fn float_depth(n: u64) -> u32 {
        let x = n as f64;
        let bound = x.ln() / (1.0 / x).ln_1p();
        let mut m = 0;
        while 2f64.powi(m as i32) <= bound {
            m += 1;
        }
        m
    }

    #[test]
    fn doubling_depth_examples() {
        assert_eq!(doubling_depth(1), 0);
        assert_eq!(doubling_depth(8), 5);
        assert_eq!(doubling_depth(40), 8);
        for n in 1..=3000 {
            assert_eq!(doubling_depth(n), float_depth(n), "n = {n}");
        }
    }

    #[test]
    fn depth_makes_the_floor_root_exact() {
        for n in 1..=22 {
            let depth = doubling_depth(n);
            for lam in enumerate_partitions(n) {
                let top = direct_power_sum(&lam, depth);
                let root = integer_root(top.magnitude(), 1 << depth);
                assert_eq!(root, BigUint::from(lam.parts()[0]), "{lam}");
            }
        }
    }

    #[test]
    fn integer_root_examples() {
        let b = |x: u64| BigUint::from(x);
        assert_eq!(integer_root(&b(16), 4), b(2));
        assert_eq!(integer_root(&b(22), 2), b(4));
        assert_eq!(integer_root(&b(2401), 4), b(7));
        assert_eq!(integer_root(&b(0), 3), b(0));
        assert_eq!(integer_root(&b(1), 64), b(1));
    }

    proptest! {
        #[test]
        fn integer_root_is_the_floor(x in any::<u128>(), r in 1u32..9) {
            let x = BigUint::from(x);
            let t = integer_root(&x, r);
            prop_assert!(t.pow(r) <= x);
            prop_assert!((&t + 1u32).pow(r) > x);
            prop_assert_eq!(t, bisect_root(&x, r));
        }

        #[test]
        fn integer_root_of_large_powers(base in 1u64..1_000_000, e in 1u32..7) {
            let r = 1u32 << e;
            let x = BigUint::from(base).pow(r);
            prop_assert_eq!(integer_root(&x, r), BigUint::from(base));
            prop_assert_eq!(integer_root(&(x - 1u32), r), BigUint::from(base - 1));
        }
    }

    #[test]
    fn largest_part_examples() {
        assert_eq!(largest_part(&ms("8^1+4^2+2^2+1^1"), 8), Ok(4));
        assert_eq!(largest_part(&ProductMultiset::empty(), 9), Ok(9));
        assert_eq!(largest_part(&ms("6^1"), 5), Ok(3));
        // A product this large drives p[1] = 25 - 2000 negative.
        assert_eq!(kind(largest_part(&ms("1000^1"), 5)), NoCandidateRoot);
    }

    #[test]
    fn greedy_recover_examples() {
        let image = ms("8^1+4^2+2^2+1^1");
        assert_eq!(greedy_recover(&image, 4), Ok(p("4,2,1,1")));
        assert_eq!(greedy_recover(&ProductMultiset::empty(), 7), Ok(p("7")));
        assert_eq!(kind(greedy_recover(&image, 3)), IndivisibleStep);
    }

    #[test]
    fn greedy_recover_error_kinds() {
        assert_eq!(kind(greedy_recover(&ms("4^5"), 2)), NotTriangularCount);
        // lambda1 = 1 gives lambda2 = 8 > 1.
        assert_eq!(
            kind(greedy_recover(&ms("8^1+4^2+2^2+1^1"), 1)),
            NonMonotoneParts
        );
        // lambda = (4,2,?) needs 4*1 = 4 once lambda3 = 1, but 2*1 is absent.
        assert_eq!(kind(greedy_recover(&ms("8^1+4^1+3^1"), 4)), MissingProduct);
        // Three products from (2,2,2) would be 4^3; here the last one is a 1.
        assert_eq!(kind(greedy_recover(&ms("4^2+1^1"), 2)), MissingProduct);
        // (3,3,3,1) needs the product 3 three times; only one is present.
        assert_eq!(
            kind(greedy_recover(&ms("9^3+3^1+2^1+1^1"), 3)),
            MissingProduct
        );
    }

    #[test]
    fn greedy_consumes_duplicates_one_at_a_time() {
        // (2,2,2,2): six copies of 4; each step must consume exactly k-1 of them.
        assert_eq!(greedy_recover(&ms("4^6"), 2), Ok(p("2,2,2,2")));
        assert_eq!(kind(greedy_recover(&ms("4^5+1^1"), 2)), MissingProduct);
    }

    #[test]
    fn invert_examples() {
        assert_eq!(invert_pre2(&ms("8^1+4^2+2^2+1^1"), 8), Ok(p("4,2,1,1")));
        assert_eq!(invert_pre2(&ProductMultiset::empty(), 3), Ok(p("3")));
        assert_eq!(invert_pre2(&ms("6^1"), 5), Ok(p("3,2")));
        assert!(matches!(
            invert_pre2(&ms("6^1"), 6),
            Err(InvertError::NoPreimage(_))
        ));
        assert_eq!(no_preimage_kind(invert_pre2(&ms("6^1"), 0)), SizeMismatch);
    }

    #[test]
    fn six_one_with_size_six_has_no_preimage_by_brute_force() {
        let target = ms("6^1");
        let hits: Vec<Partition> = enumerate_partitions(6)
            .filter(|l| pre2(l) == target)
            .collect();
        assert!(hits.is_empty());
    }

    #[test]
    fn divisor_scan_examples() {
        assert_eq!(
            divisor_scan_invert(&ms("8^1+4^2+2^2+1^1"), 8),
            Ok(p("4,2,1,1"))
        );
        assert_eq!(divisor_scan_invert(&ms("6^1"), 5), Ok(p("3,2")));
        assert_eq!(divisor_scan_invert(&ms("1^3"), 3), Ok(p("1,1,1")));
        assert!(matches!(
            divisor_scan_invert(&ms("6^1"), 6),
            Err(InvertError::NoPreimage(_))
        ));
        // Candidates must not exceed n.
        assert!(divisor_scan_invert(&ms("1000000^1"), 10).is_err());
    }

    #[test]
    fn round_trip_exhaustive_small() {
        for n in 1..=20 {
            for lam in enumerate_partitions(n) {
                let image = pre2(&lam);
                assert_eq!(invert_pre2(&image, n).as_ref(), Ok(&lam));
                assert_eq!(divisor_scan_invert(&image, n).as_ref(), Ok(&lam));
            }
        }
    }

    #[test]
    fn wrong_size_is_rejected() {
        // The image of (4,2,1,1) paired with the wrong size.
        let image = ms("8^1+4^2+2^2+1^1");
        for n in [1, 5, 7, 9, 12, 40] {
            assert!(invert_pre2(&image, n).is_err(), "n = {n}");
            assert!(divisor_scan_invert(&image, n).is_err(), "n = {n}");
        }
    }

    fn adversarial_image() -> impl Strategy<Value = ProductMultiset> {
        prop::collection::vec(1u64..200, 0..16)
            .prop_map(|v| ProductMultiset::from_values(v).unwrap())
    }

    proptest! {
        #[test]
        fn inversion_is_total(image in adversarial_image(), n in 1u64..60) {
            let a = invert_pre2(&image, n);
            let b = divisor_scan_invert(&image, n);
            if let Ok(lam) = &a {
                prop_assert_eq!(lam.size(), n);
                prop_assert_eq!(&pre2(lam), &image);
            }
            prop_assert!(!matches!(b, Err(InvertError::AmbiguousPreimage(..))));
            prop_assert_eq!(a.ok(), b.ok());
        }

        #[test]
        fn inversion_round_trips(raw in prop::collection::vec(1u64..50, 1..25)) {
            let lam = Partition::new(raw).unwrap();
            let image = pre2(&lam);
            prop_assert_eq!(invert_pre2(&image, lam.size()), Ok(lam.clone()));
            prop_assert_eq!(divisor_scan_invert(&image, lam.size()), Ok(lam));
        }
    }
}
