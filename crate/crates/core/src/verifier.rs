//! Exhaustive injectivity checks for `pre2` on partitions of a fixed size,
//! round-trip checks for the inverter, and the cross-size collision search
//! showing that the fixed-size hypothesis matters.
//!
//! Partitions are sharded by largest part. Each shard fingerprints the
//! canonical text of every image; only fingerprint buckets with two or more
//! members are compared exactly, so a fingerprint collision can never be
//! reported as an image collision.

mod spill;

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::multiset::{canonical_fingerprint, encode_runs, pre2, pre2_runs, ProductMultiset};
use crate::partition::{
    count_partitions, enumerate_partitions, Partition, PartitionError, PartitionIter,
    PartitionSampler,
};
use crate::reconstruction::{divisor_scan_invert, invert_pre2};

pub const DEFAULT_MEMORY_BUDGET: u64 = 2 << 30;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("ResourceExhausted: in-memory fingerprint table needs more than {budget} bytes; retry with sort_merge")]
    ResourceExhausted { budget: u64 },
    #[error("enumeration produced {got} partitions of {n}, expected {expected}")]
    EnumerationMismatch { n: u64, expected: BigUint, got: u64 },
    #[error("size must be positive")]
    ZeroSize,
    #[error(transparent)]
    Sampling(#[from] PartitionError),
    #[error("spill I/O failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("could not start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CollisionError {
    #[error("a collision needs two distinct partitions, got {0} twice")]
    Identical(Partition),
    #[error("{first} and {second} have different images")]
    ImagesDiffer { first: Partition, second: Partition },
}

/// Two distinct partitions with the same `pre2` image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollisionPair {
    first: Partition,
    second: Partition,
    shared_image: ProductMultiset,
}

impl CollisionPair {
    /// Recomputes both images exactly and checks they agree.
    pub fn new(first: Partition, second: Partition) -> Result<Self, CollisionError> {
        if first == second {
            return Err(CollisionError::Identical(first));
        }
        let image = pre2(&first);
        if pre2(&second) != image {
            return Err(CollisionError::ImagesDiffer { first, second });
        }
        Ok(Self {
            first,
            second,
            shared_image: image,
        })
    }

    pub fn first(&self) -> &Partition {
        &self.first
    }

    pub fn second(&self) -> &Partition {
        &self.second
    }

    pub fn shared_image(&self) -> &ProductMultiset {
        &self.shared_image
    }

    /// Both partitions have the same size, which would contradict injectivity.
    pub fn is_same_size(&self) -> bool {
        self.first.size() == self.second.size()
    }

    pub fn to_json(&self) -> CollisionJson {
        CollisionJson {
            first: self.first.to_string(),
            second: self.second.to_string(),
            shared_image: self.shared_image.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollisionJson {
    pub first: String,
    pub second: String,
    pub shared_image: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum MemoryMode {
    #[default]
    #[value(name = "in_memory", alias = "in-memory")]
    InMemory,
    #[value(name = "sort_merge", alias = "sort-merge")]
    SortMerge,
}

pub type FingerprintFn = fn(&[u8]) -> u64;

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub workers: usize,
    pub memory_mode: MemoryMode,
    /// Byte budget for the in-memory table.
    pub memory_budget: u64,
    /// Also run both inverters on every partition.
    pub check_roundtrip: bool,
    /// Records per sorted run in sort_merge mode.
    pub spill_records: usize,
    /// Overridable so tests can force every image into one bucket.
    pub fingerprint: FingerprintFn,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            workers: default_workers(),
            memory_mode: MemoryMode::InMemory,
            memory_budget: DEFAULT_MEMORY_BUDGET,
            check_roundtrip: false,
            spill_records: 1 << 16,
            fingerprint: canonical_fingerprint,
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationReport {
    pub n: u64,
    pub partitions_checked: u64,
    pub distinct_images: u64,
    pub collisions: Vec<CollisionPair>,
    pub roundtrip_failures: Vec<Partition>,
    pub wall_time: Duration,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportJson {
    pub n: u64,
    pub partitions_checked: u64,
    pub distinct_images: u64,
    pub collisions: Vec<CollisionJson>,
    pub roundtrip_failures: Vec<String>,
    pub wall_time_ms: u64,
    pub workers: usize,
}

impl VerificationReport {
    /// No collisions and no round-trip failures.
    pub fn is_clean(&self) -> bool {
        self.collisions.is_empty() && self.roundtrip_failures.is_empty()
    }

    pub fn to_json(&self) -> ReportJson {
        ReportJson {
            n: self.n,
            partitions_checked: self.partitions_checked,
            distinct_images: self.distinct_images,
            collisions: self.collisions.iter().map(CollisionPair::to_json).collect(),
            roundtrip_failures: self
                .roundtrip_failures
                .iter()
                .map(|p| p.to_string())
                .collect(),
            wall_time_ms: self.wall_time.as_millis() as u64,
            workers: self.workers,
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("report serializes")
    }

    /// The JSON document without `wall_time_ms` and `workers`, the two fields
    /// that describe the run rather than its findings. Identical across
    /// memory modes and worker counts.
    pub fn findings_json(&self) -> String {
        let mut value = serde_json::to_value(self.to_json()).expect("report serializes");
        let obj = value.as_object_mut().expect("report is an object");
        obj.remove("wall_time_ms");
        obj.remove("workers");
        serde_json::to_string_pretty(&value).expect("report serializes")
    }
}

/// Per-shard scratch for computing fingerprints without big integers.
struct Fingerprinter {
    runs: Vec<(u128, u64)>,
    buf: Vec<u8>,
    hash: FingerprintFn,
}

impl Fingerprinter {
    fn new(hash: FingerprintFn) -> Self {
        Self {
            runs: Vec::new(),
            buf: Vec::new(),
            hash,
        }
    }

    fn of(&mut self, parts: &[u64]) -> u64 {
        pre2_runs(parts, &mut self.runs);
        encode_runs(&self.runs, &mut self.buf);
        (self.hash)(&self.buf)
    }
}

fn roundtrip_ok(lam: &Partition) -> bool {
    let image = pre2(lam);
    let n = lam.size();
    matches!(invert_pre2(&image, n), Ok(ref r) if r == lam)
        && matches!(divisor_scan_invert(&image, n), Ok(ref r) if r == lam)
}

/// Splits a bucket of partitions sharing a fingerprint into exact image
/// classes. Returns the number of classes and every colliding pair.
fn resolve_bucket(members: &[Partition]) -> (u64, Vec<CollisionPair>) {
    let mut classes: HashMap<ProductMultiset, Vec<&Partition>> = HashMap::new();
    for lam in members {
        classes.entry(pre2(lam)).or_default().push(lam);
    }
    let mut pairs = Vec::new();
    for class in classes.values() {
        for (i, a) in class.iter().enumerate() {
            for b in &class[i + 1..] {
                let (x, y) = if a >= b { (a, b) } else { (b, a) };
                pairs.push(
                    CollisionPair::new((*x).clone(), (*y).clone())
                        .expect("class members share an exact image"),
                );
            }
        }
    }
    (classes.len() as u64, pairs)
}

struct ShardTable {
    table: HashMap<u64, Vec<Partition>>,
    count: u64,
    roundtrip_failures: Vec<Partition>,
}

/// Rough heap cost of one stored record.
fn record_bytes(len: usize) -> u64 {
    (std::mem::size_of::<Partition>() + 8 * len + 48) as u64
}

fn shard_in_memory(
    n: u64,
    largest: u64,
    config: &VerifyConfig,
    used: &AtomicU64,
    exhausted: &AtomicBool,
) -> ShardTable {
    let mut fp = Fingerprinter::new(config.fingerprint);
    let mut out = ShardTable {
        table: HashMap::new(),
        count: 0,
        roundtrip_failures: Vec::new(),
    };
    for lam in PartitionIter::with_largest_part(n, largest) {
        if exhausted.load(Ordering::Relaxed) {
            break;
        }
        let key = fp.of(lam.parts());
        let cost = record_bytes(lam.len());
        if used.fetch_add(cost, Ordering::Relaxed) + cost > config.memory_budget {
            exhausted.store(true, Ordering::Relaxed);
            break;
        }
        if config.check_roundtrip && !roundtrip_ok(&lam) {
            out.roundtrip_failures.push(lam.clone());
        }
        out.table.entry(key).or_default().push(lam);
        out.count += 1;
    }
    out
}

struct Findings {
    count: u64,
    distinct: u64,
    collisions: Vec<CollisionPair>,
    roundtrip_failures: Vec<Partition>,
}

fn run_in_memory(n: u64, config: &VerifyConfig) -> Result<Findings, VerifyError> {
    let used = AtomicU64::new(0);
    let exhausted = AtomicBool::new(false);
    let shards: Vec<ShardTable> = (1..=n)
        .rev()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|a| shard_in_memory(n, a, config, &used, &exhausted))
        .collect();
    if exhausted.load(Ordering::Relaxed) {
        return Err(VerifyError::ResourceExhausted {
            budget: config.memory_budget,
        });
    }
    let mut count = 0;
    let mut roundtrip_failures = Vec::new();
    let mut merged: HashMap<u64, Vec<Partition>> = HashMap::new();
    for shard in shards {
        count += shard.count;
        roundtrip_failures.extend(shard.roundtrip_failures);
        for (key, members) in shard.table {
            merged.entry(key).or_default().extend(members);
        }
    }
    let mut distinct = 0;
    let mut collisions = Vec::new();
    for members in merged.values() {
        if members.len() == 1 {
            distinct += 1;
        } else {
            let (classes, pairs) = resolve_bucket(members);
            distinct += classes;
            collisions.extend(pairs);
        }
    }
    Ok(Findings {
        count,
        distinct,
        collisions,
        roundtrip_failures,
    })
}

struct ShardRuns {
    runs: Vec<std::path::PathBuf>,
    count: u64,
    roundtrip_failures: Vec<Partition>,
}

fn shard_spill(
    n: u64,
    largest: u64,
    dir: &Path,
    config: &VerifyConfig,
) -> std::io::Result<ShardRuns> {
    let mut fp = Fingerprinter::new(config.fingerprint);
    let mut writer = spill::RunWriter::new(dir, largest, config.spill_records);
    let mut count = 0;
    let mut roundtrip_failures = Vec::new();
    let mut result = Ok(());
    PartitionIter::with_largest_part(n, largest).for_each_parts(|parts| {
        if result.is_err() {
            return;
        }
        let key = fp.of(parts);
        let lam = Partition::from_canonical(parts.to_vec());
        if config.check_roundtrip && !roundtrip_ok(&lam) {
            roundtrip_failures.push(lam.clone());
        }
        result = writer.push(key, lam.to_string());
        count += 1;
    });
    result?;
    Ok(ShardRuns {
        runs: writer.finish()?,
        count,
        roundtrip_failures,
    })
}

fn run_sort_merge(n: u64, config: &VerifyConfig) -> Result<Findings, VerifyError> {
    let dir = tempfile::tempdir()?;
    let shards: Vec<ShardRuns> = (1..=n)
        .rev()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|a| shard_spill(n, a, dir.path(), config))
        .collect::<std::io::Result<_>>()?;
    let mut count = 0;
    let mut runs = Vec::new();
    let mut roundtrip_failures = Vec::new();
    for shard in shards {
        count += shard.count;
        runs.extend(shard.runs);
        roundtrip_failures.extend(shard.roundtrip_failures);
    }

    let mut merge = spill::Merge::open(&runs)?;
    let mut distinct = 0;
    let mut collisions = Vec::new();
    let mut bucket: Vec<Partition> = Vec::new();
    let mut bucket_key = None;
    let mut close = |bucket: &mut Vec<Partition>, distinct: &mut u64| {
        match bucket.len() {
            0 => {}
            1 => *distinct += 1,
            _ => {
                let (classes, pairs) = resolve_bucket(bucket);
                *distinct += classes;
                collisions.extend(pairs);
            }
        }
        bucket.clear();
    };
    while let Some((key, text)) = merge.next_record()? {
        if bucket_key != Some(key) {
            close(&mut bucket, &mut distinct);
            bucket_key = Some(key);
        }
        let lam: Partition = text
            .parse()
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{e}")))?;
        bucket.push(lam);
    }
    close(&mut bucket, &mut distinct);
    Ok(Findings {
        count,
        distinct,
        collisions,
        roundtrip_failures,
    })
}

/// Checks that no two distinct partitions of `n` share a `pre2` image.
pub fn verify_injectivity(
    n: u64,
    config: &VerifyConfig,
) -> Result<VerificationReport, VerifyError> {
    if n == 0 {
        return Err(VerifyError::ZeroSize);
    }
    let start = Instant::now();
    let workers = config.workers.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()?;
    let mut findings = pool.install(|| match config.memory_mode {
        MemoryMode::InMemory => run_in_memory(n, config),
        MemoryMode::SortMerge => run_sort_merge(n, config),
    })?;
    let expected = count_partitions(n);
    if expected != BigUint::from(findings.count) {
        return Err(VerifyError::EnumerationMismatch {
            n,
            expected,
            got: findings.count,
        });
    }
    findings
        .collisions
        .sort_by(|a, b| (&a.first, &a.second).cmp(&(&b.first, &b.second)));
    findings.roundtrip_failures.sort();
    Ok(VerificationReport {
        n,
        partitions_checked: findings.count,
        distinct_images: findings.distinct,
        collisions: findings.collisions,
        roundtrip_failures: findings.roundtrip_failures,
        wall_time: start.elapsed(),
        workers,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sample {
    All,
    Random { count: usize, seed: u64 },
}

/// Partitions of `n` for which inversion fails or the two inverters disagree.
pub fn roundtrip_check(n: u64, sample: Sample) -> Result<Vec<Partition>, VerifyError> {
    if n == 0 {
        return Err(VerifyError::ZeroSize);
    }
    let selected: Vec<Partition> = match sample {
        Sample::All => enumerate_partitions(n).collect(),
        Sample::Random { count, seed } => {
            let sampler = PartitionSampler::new(n)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count).map(|_| sampler.sample(&mut rng)).collect()
        }
    };
    let mut failures: Vec<Partition> = selected
        .into_par_iter()
        .filter(|lam| !roundtrip_ok(lam))
        .collect();
    failures.sort();
    failures.dedup();
    Ok(failures)
}

/// Nonincreasing sequences of `len` parts, each at most `cap`, appended to
/// `prefix` one at a time.
fn for_each_tail(prefix: &mut Vec<u64>, len: usize, cap: u64, f: &mut impl FnMut(&[u64])) {
    if len == 0 {
        f(prefix);
        return;
    }
    for x in 1..=cap {
        prefix.push(x);
        for_each_tail(prefix, len - 1, x, f);
        prefix.pop();
    }
}

/// All pairs of partitions with exactly `length` parts, each part at most
/// `max_part`, that share a `pre2` image. Any pair found must differ in size.
///
/// Partitions are grouped by their largest product `lambda_1 * lambda_2`,
/// which equal images necessarily share, so groups are searched independently.
pub fn search_cross_size_collisions(length: usize, max_part: u64) -> Vec<CollisionPair> {
    assert!(length >= 2, "collision search needs length >= 2");
    assert!(max_part <= u32::MAX as u64, "max_part must fit in 32 bits");
    let mut heads: HashMap<u64, Vec<(u64, u64)>> = HashMap::new();
    for a in 1..=max_part {
        for b in 1..=a {
            heads.entry(a * b).or_default().push((a, b));
        }
    }
    let mut groups: Vec<(u64, Vec<(u64, u64)>)> = heads.into_iter().collect();
    groups.sort_unstable_by_key(|g| g.0);

    groups
        .into_par_iter()
        .flat_map_iter(|(_, pairs)| {
            let mut classes: HashMap<Vec<(u128, u64)>, Vec<Vec<u64>>> = HashMap::new();
            let mut runs = Vec::new();
            for (a, b) in pairs {
                let mut prefix = vec![a, b];
                for_each_tail(&mut prefix, length - 2, b, &mut |parts| {
                    pre2_runs(parts, &mut runs);
                    classes
                        .entry(runs.clone())
                        .or_default()
                        .push(parts.to_vec());
                });
            }
            let mut found: Vec<Vec<Vec<u64>>> =
                classes.into_values().filter(|c| c.len() > 1).collect();
            for class in &mut found {
                class.sort_unstable_by(|x, y| y.cmp(x));
            }
            found.sort_unstable();
            let mut out = Vec::new();
            for class in found {
                for (i, x) in class.iter().enumerate() {
                    for y in &class[i + 1..] {
                        out.push(
                            CollisionPair::new(
                                Partition::from_canonical(x.clone()),
                                Partition::from_canonical(y.clone()),
                            )
                            .expect("grouped by exact image"),
                        );
                    }
                }
            }
            out
        })
        .collect()
}
