//! Pairwise-product images of integer partitions.
//!
//! `pre2(lambda)` is the multiset of products `lambda_i * lambda_j` over
//! index pairs `i < j`. Among partitions of a fixed size the map is
//! injective, and [`reconstruction::invert_pre2`] recovers the partition from
//! its image and size using exact big-integer power sums followed by greedy
//! peeling of the largest residual product. The [`verifier`] module checks
//! injectivity exhaustively for a given size, and [`sumset`] covers the
//! additive analogue where lengths that are powers of two admit collisions.

pub mod cli;
pub mod multiset;
pub mod partition;
pub mod reconstruction;
pub mod sumset;
pub mod verifier;

pub use multiset::{pre2, pre_k, MultisetError, ProductMultiset};
pub use partition::{
    count_partitions, elementary_symmetric, enumerate_partitions, make_partition, Partition,
    PartitionError, PartitionIter, PartitionSampler,
};
pub use reconstruction::{
    divisor_scan_invert, doubling_depth, greedy_recover, integer_root, invert_pre2, largest_part,
    length_from_count, power_sums_from_pre2, InvertError, PowerSumSequence, ReconstructionError,
    ReconstructionErrorKind,
};
