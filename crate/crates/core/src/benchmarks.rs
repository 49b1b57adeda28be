//! Fitness functions with known optima and building-block structure.
//!
//! The deceptive trap is the bounded deceptive function used to stress the
//! compact GA; OneMax is the easy linkage-free sanity case.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchmarkError {
    #[error("unitation {unitation} exceeds block size {k}")]
    UnitationOutOfRange { unitation: usize, k: usize },
    #[error("expected a bitstring of length {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("trap block size must be at least 2, got {0}")]
    BlockTooSmall(usize),
    #[error("trap must have at least one block")]
    NoBlocks,
    #[error("deceptive ratio must lie strictly between 0 and 1, got {0}")]
    RatioOutOfRange(f64),
    #[error("unknown benchmark `{0}` (expected trap<k>x<copies> or onemax)")]
    UnknownBenchmark(String),
    #[error("onemax needs a chromosome length")]
    MissingLength,
}

/// A pure, deterministic objective over bitstrings.
pub trait FitnessFunction {
    fn length(&self) -> usize;

    fn evaluate(&self, genes: &[bool]) -> f64;

    /// Fitness of the global optimum, when known. Used for termination.
    fn known_optimum(&self) -> Option<f64> {
        None
    }
}

/// Concatenated deceptive trap: `copies` tight blocks of `k` bits each.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapSpec {
    k: usize,
    copies: usize,
    deceptive_ratio: f64,
}

impl TrapSpec {
    pub fn new(k: usize, copies: usize, deceptive_ratio: f64) -> Result<Self, BenchmarkError> {
        if k < 2 {
            return Err(BenchmarkError::BlockTooSmall(k));
        }
        if copies == 0 {
            return Err(BenchmarkError::NoBlocks);
        }
        if !(deceptive_ratio > 0.0 && deceptive_ratio < 1.0) {
            return Err(BenchmarkError::RatioOutOfRange(deceptive_ratio));
        }
        Ok(Self {
            k,
            copies,
            deceptive_ratio,
        })
    }

    /// Ten 3-bit traps with deceptive-to-optimal ratio 0.7.
    pub fn trap3x10() -> Self {
        Self {
            k: 3,
            copies: 10,
            deceptive_ratio: 0.7,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn deceptive_ratio(&self) -> f64 {
        self.deceptive_ratio
    }

    pub fn length(&self) -> usize {
        self.k * self.copies
    }

    pub fn optimum(&self) -> f64 {
        self.copies as f64
    }

    fn check_len(&self, genes: &[bool]) -> Result<(), BenchmarkError> {
        if genes.len() != self.length() {
            return Err(BenchmarkError::LengthMismatch {
                expected: self.length(),
                actual: genes.len(),
            });
        }
        Ok(())
    }

    #[inline]
    fn block_value(&self, u: usize) -> f64 {
        if u == self.k {
            1.0
        } else {
            self.deceptive_ratio * (self.k - 1 - u) as f64 / (self.k - 1) as f64
        }
    }

    #[inline]
    fn sum_blocks(&self, genes: &[bool]) -> f64 {
        genes
            .chunks_exact(self.k)
            .map(|block| self.block_value(block.iter().filter(|&&g| g).count()))
            .sum()
    }
}

/// Value of one trap block with `u` ones: 1 at `u = k`, otherwise a linear
/// slope from `deceptive_ratio` at `u = 0` down to 0 at `u = k - 1`.
pub fn trap_block_fitness(u: usize, spec: &TrapSpec) -> Result<f64, BenchmarkError> {
    if u > spec.k {
        return Err(BenchmarkError::UnitationOutOfRange {
            unitation: u,
            k: spec.k,
        });
    }
    Ok(spec.block_value(u))
}

pub fn concatenated_trap(genes: &[bool], spec: &TrapSpec) -> Result<f64, BenchmarkError> {
    spec.check_len(genes)?;
    Ok(spec.sum_blocks(genes))
}

/// Number of blocks set to all ones.
pub fn count_solved_blocks(genes: &[bool], spec: &TrapSpec) -> Result<usize, BenchmarkError> {
    spec.check_len(genes)?;
    Ok(genes
        .chunks_exact(spec.k)
        .filter(|block| block.iter().all(|&g| g))
        .count())
}

pub fn onemax(genes: &[bool]) -> f64 {
    genes.iter().filter(|&&g| g).count() as f64
}

/// The benchmarks selectable by name from configuration and the CLI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Benchmark {
    Trap(TrapSpec),
    OneMax { length: usize },
}

impl Benchmark {
    /// Parses `trap<k>x<copies>` (ratio 0.7) or `onemax`; onemax takes its
    /// length from `length`.
    pub fn parse(name: &str, length: Option<usize>) -> Result<Self, BenchmarkError> {
        let lower = name.trim().to_ascii_lowercase();
        if lower == "onemax" {
            let length = length.ok_or(BenchmarkError::MissingLength)?;
            if length == 0 {
                return Err(BenchmarkError::MissingLength);
            }
            return Ok(Benchmark::OneMax { length });
        }
        let unknown = || BenchmarkError::UnknownBenchmark(name.to_string());
        let rest = lower.strip_prefix("trap").ok_or_else(unknown)?;
        let (k, copies) = rest.split_once('x').ok_or_else(unknown)?;
        let k = k.parse().map_err(|_| unknown())?;
        let copies = copies.parse().map_err(|_| unknown())?;
        let spec = TrapSpec::new(k, copies, 0.7)?;
        if let Some(len) = length {
            if len != spec.length() {
                return Err(BenchmarkError::LengthMismatch {
                    expected: spec.length(),
                    actual: len,
                });
            }
        }
        Ok(Benchmark::Trap(spec))
    }

    /// Building blocks solved: trap blocks at all-ones, or set bits for OneMax.
    pub fn blocks_solved(&self, genes: &[bool]) -> usize {
        match self {
            Benchmark::Trap(spec) => genes
                .chunks_exact(spec.k)
                .filter(|block| block.iter().all(|&g| g))
                .count(),
            Benchmark::OneMax { .. } => genes.iter().filter(|&&g| g).count(),
        }
    }

    pub fn block_count(&self) -> usize {
        match self {
            Benchmark::Trap(spec) => spec.copies,
            Benchmark::OneMax { length } => *length,
        }
    }
}

impl FitnessFunction for Benchmark {
    fn length(&self) -> usize {
        match self {
            Benchmark::Trap(spec) => spec.length(),
            Benchmark::OneMax { length } => *length,
        }
    }

    #[inline]
    fn evaluate(&self, genes: &[bool]) -> f64 {
        match self {
            Benchmark::Trap(spec) => spec.sum_blocks(genes),
            Benchmark::OneMax { .. } => onemax(genes),
        }
    }

    fn known_optimum(&self) -> Option<f64> {
        Some(match self {
            Benchmark::Trap(spec) => spec.optimum(),
            Benchmark::OneMax { length } => *length as f64,
        })
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Benchmark::Trap(spec) => write!(f, "trap{}x{}", spec.k, spec.copies),
            Benchmark::OneMax { .. } => f.write_str("onemax"),
        }
    }
}

impl FromStr for Benchmark {
    type Err = BenchmarkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Benchmark::parse(s, None)
    }
}
