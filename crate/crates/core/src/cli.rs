//! Command-line front end. Exit status 0 on success, 1 when a finding
//! contradicts injectivity (collisions among partitions of one size, failed
//! round trips), 2 on usage or input errors.

use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::multiset::{pre_k, ProductMultiset};
use crate::partition::Partition;
use crate::reconstruction::invert_pre2;
use crate::sumset::{exp_lift, search_sum_collisions, IntMultiset};
use crate::verifier::{
    default_workers, roundtrip_check, search_cross_size_collisions, verify_injectivity,
    CollisionJson, MemoryMode, Sample, VerifyConfig, VerifyError, DEFAULT_MEMORY_BUDGET,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct CliConfig {
    /// Worker threads (defaults to the available parallelism).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
    #[arg(
        long = "memory-mode",
        global = true,
        value_enum,
        default_value = "in_memory"
    )]
    pub memory_mode: MemoryMode,
    #[arg(long, global = true, value_enum, default_value = "text")]
    pub output: OutputFormat,
    /// Seed for sampled modes.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Parser)]
#[command(
    name = "pre2",
    version,
    about = "Pairwise-product images of integer partitions"
)]
struct Cli {
    #[command(flatten)]
    config: CliConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print pre_k of a partition, e.g. `pre --k 2 4,2,1,1`.
    Pre {
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
        k: u64,
        partition: String,
    },
    /// Recover the partition of N with the given pairwise-product image.
    Invert {
        #[arg(long)]
        n: u64,
        multiset: String,
    },
    /// Check that no two partitions of N share an image.
    Verify {
        #[arg(long)]
        n: u64,
        /// Also invert every image with both inverters.
        #[arg(long)]
        roundtrip: bool,
        #[arg(long = "memory-budget", default_value_t = DEFAULT_MEMORY_BUDGET)]
        memory_budget: u64,
    },
    /// Invert the image of every (or a random sample of) partition of N.
    Roundtrip {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        sample: Option<usize>,
    },
    /// Partitions of equal length but different sizes sharing an image.
    CrossCollide {
        #[arg(long)]
        length: usize,
        #[arg(long = "max-part")]
        max_part: u64,
    },
    /// Pairwise-sum experiments.
    Sums {
        #[command(subcommand)]
        command: SumsCommand,
    },
}

#[derive(Debug, Subcommand)]
enum SumsCommand {
    /// Multisets in [0, B] of length L sharing their pairwise sums.
    Search {
        #[arg(long)]
        length: usize,
        #[arg(long = "max-abs")]
        max_abs: i64,
    },
    /// Lift a sum collision `X/Y` to a product collision via x -> B^x.
    Lift {
        #[arg(long, default_value_t = 2)]
        base: u64,
        #[arg(allow_hyphen_values = true)]
        pair: String,
    },
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Io<'_> {
    fn usage(&mut self, msg: impl std::fmt::Display) -> i32 {
        let _ = writeln!(self.err, "error: {msg}");
        EXIT_USAGE
    }

    fn json<T: Serialize>(&mut self, value: &T) {
        let _ = writeln!(
            self.out,
            "{}",
            serde_json::to_string_pretty(value).expect("output serializes")
        );
    }
}

/// Runs the CLI on `argv` (including the program name) and returns the exit
/// status.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let mut io = Io { out, err };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(io.out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(io.err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    let cfg = cli.config;
    let workers = cfg.workers.map_or_else(default_workers, |w| w as usize);
    match cli.command {
        Command::Pre { k, partition } => {
            let lam: Partition = match partition.parse() {
                Ok(l) => l,
                Err(e) => return io.usage(e),
            };
            let image = pre_k(&lam, k as usize);
            match cfg.output {
                OutputFormat::Text => {
                    let _ = writeln!(io.out, "{image}");
                }
                OutputFormat::Json => io.json(&serde_json::json!({
                    "partition": lam.to_string(),
                    "k": k,
                    "image": image.to_string(),
                })),
            }
            EXIT_OK
        }
        Command::Invert { n, multiset } => {
            let image: ProductMultiset = match multiset.parse() {
                Ok(m) => m,
                Err(e) => return io.usage(e),
            };
            match invert_pre2(&image, n) {
                Ok(lam) => {
                    match cfg.output {
                        OutputFormat::Text => {
                            let _ = writeln!(io.out, "{lam}");
                        }
                        OutputFormat::Json => io.json(&serde_json::json!({
                            "n": n,
                            "image": image.to_string(),
                            "partition": lam.to_string(),
                        })),
                    }
                    EXIT_OK
                }
                Err(e) => io.usage(e),
            }
        }
        Command::Verify {
            n,
            roundtrip,
            memory_budget,
        } => {
            let mut config = VerifyConfig {
                workers,
                memory_mode: cfg.memory_mode,
                memory_budget,
                check_roundtrip: roundtrip,
                ..VerifyConfig::default()
            };
            let mut result = verify_injectivity(n, &config);
            if let Err(VerifyError::ResourceExhausted { .. }) = result {
                let _ = writeln!(
                    io.err,
                    "note: memory budget exceeded, retrying with sort_merge"
                );
                config.memory_mode = MemoryMode::SortMerge;
                result = verify_injectivity(n, &config);
            }
            let report = match result {
                Ok(r) => r,
                Err(e) => return io.usage(e),
            };
            match cfg.output {
                OutputFormat::Json => {
                    let _ = writeln!(io.out, "{}", report.to_json_string());
                }
                OutputFormat::Text => {
                    let _ = writeln!(
                        io.out,
                        "n={} partitions_checked={} distinct_images={} collisions={} roundtrip_failures={} wall_time_ms={} workers={}",
                        report.n,
                        report.partitions_checked,
                        report.distinct_images,
                        report.collisions.len(),
                        report.roundtrip_failures.len(),
                        report.wall_time.as_millis(),
                        report.workers
                    );
                    for c in &report.collisions {
                        let _ = writeln!(
                            io.out,
                            "collision {} ~ {} : {}",
                            c.first(),
                            c.second(),
                            c.shared_image()
                        );
                    }
                    for f in &report.roundtrip_failures {
                        let _ = writeln!(io.out, "roundtrip_failure {f}");
                    }
                }
            }
            if report.is_clean() {
                EXIT_OK
            } else {
                EXIT_VIOLATION
            }
        }
        Command::Roundtrip { n, sample } => {
            let mode = match sample {
                None => Sample::All,
                Some(count) => Sample::Random {
                    count,
                    seed: cfg.seed,
                },
            };
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
                Ok(p) => p,
                Err(e) => return io.usage(e),
            };
            let failures = match pool.install(|| roundtrip_check(n, mode)) {
                Ok(f) => f,
                Err(e) => return io.usage(e),
            };
            match cfg.output {
                OutputFormat::Json => io.json(&serde_json::json!({
                    "n": n,
                    "failures": failures.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
                })),
                OutputFormat::Text => {
                    let _ = writeln!(io.out, "n={n} failures={}", failures.len());
                    for f in &failures {
                        let _ = writeln!(io.out, "{f}");
                    }
                }
            }
            if failures.is_empty() {
                EXIT_OK
            } else {
                EXIT_VIOLATION
            }
        }
        Command::CrossCollide { length, max_part } => {
            if length < 2 {
                return io.usage("--length must be at least 2");
            }
            if max_part == 0 || max_part > u32::MAX as u64 {
                return io.usage("--max-part must be in 1..=4294967295");
            }
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
                Ok(p) => p,
                Err(e) => return io.usage(e),
            };
            let pairs = pool.install(|| search_cross_size_collisions(length, max_part));
            match cfg.output {
                OutputFormat::Json => {
                    let rows: Vec<CollisionJson> = pairs.iter().map(|c| c.to_json()).collect();
                    io.json(&rows);
                }
                OutputFormat::Text => {
                    for c in &pairs {
                        let _ = writeln!(
                            io.out,
                            "{} ~ {} : {}",
                            c.first(),
                            c.second(),
                            c.shared_image()
                        );
                    }
                }
            }
            if pairs.iter().any(|c| c.is_same_size()) {
                EXIT_VIOLATION
            } else {
                EXIT_OK
            }
        }
        Command::Sums { command } => match command {
            SumsCommand::Search { length, max_abs } => {
                if length < 2 {
                    return io.usage("--length must be at least 2");
                }
                if max_abs < 0 {
                    return io.usage("--max-abs must be nonnegative");
                }
                let found = search_sum_collisions(length, max_abs);
                match cfg.output {
                    OutputFormat::Json => {
                        let rows: Vec<_> = found
                            .iter()
                            .map(|c| {
                                serde_json::json!({
                                    "first": c.first.to_string(),
                                    "second": c.second.to_string(),
                                    "is_set": c.is_set_collision(),
                                })
                            })
                            .collect();
                        io.json(&rows);
                    }
                    OutputFormat::Text => {
                        for c in &found {
                            let tag = if c.is_set_collision() { " (sets)" } else { "" };
                            let _ = writeln!(io.out, "{} ~ {}{tag}", c.first, c.second);
                        }
                    }
                }
                EXIT_OK
            }
            SumsCommand::Lift { base, pair } => {
                let Some((a, b)) = pair.split_once('/') else {
                    return io
                        .usage("PAIR must look like X/Y, e.g. 6^1+5^1+3^1+0^1/7^1+4^1+2^1+1^1");
                };
                let (a, b): (IntMultiset, IntMultiset) = match (a.parse(), b.parse()) {
                    (Ok(a), Ok(b)) => (a, b),
                    (Err(e), _) | (_, Err(e)) => return io.usage(e),
                };
                match exp_lift(&a, &b, base) {
                    Ok(c) => {
                        match cfg.output {
                            OutputFormat::Json => io.json(&c.to_json()),
                            OutputFormat::Text => {
                                let _ = writeln!(
                                    io.out,
                                    "{} ~ {} : {}",
                                    c.first(),
                                    c.second(),
                                    c.shared_image()
                                );
                            }
                        }
                        EXIT_OK
                    }
                    Err(e) => io.usage(e),
                }
            }
        },
    }
}
