//! The compact genetic algorithm.
//!
//! The population is never stored. Each gene carries an integer allele-1
//! count in `[0, N]`; its probability is `count / N`, so every update moves
//! a count by exactly one individual's worth (a step of `1/N`).

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::benchmarks::FitnessFunction;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CgaError {
    #[error("population size must be even and at least 2, got {0}")]
    InvalidPopulationSize(u64),
    #[error("selection rate must be at least 2, got {0}")]
    InvalidSelectionRate(usize),
    #[error("chromosome length must be at least 1")]
    EmptyChromosome,
    #[error("count {count} at gene {gene} exceeds population size {population_size}")]
    CountOutOfRange {
        gene: usize,
        count: u64,
        population_size: u64,
    },
    #[error("length mismatch: expected {expected} genes, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
}

/// Deterministic random stream used by every compact GA consumer.
pub type CgaRng = ChaCha8Rng;

/// Stream for consumer `index` under `master_seed`. Streams for different
/// indices never overlap, so results do not depend on scheduling.
pub fn derive_rng(master_seed: u64, index: u64) -> CgaRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CgaParams {
    population_size: u64,
    selection_rate: usize,
    seed: u64,
}

impl CgaParams {
    pub fn new(population_size: u64, selection_rate: usize, seed: u64) -> Result<Self, CgaError> {
        if population_size < 2 || !population_size.is_multiple_of(2) {
            return Err(CgaError::InvalidPopulationSize(population_size));
        }
        if selection_rate < 2 {
            return Err(CgaError::InvalidSelectionRate(selection_rate));
        }
        Ok(Self {
            population_size,
            selection_rate,
            seed,
        })
    }

    pub fn population_size(&self) -> u64 {
        self.population_size
    }

    pub fn selection_rate(&self) -> usize {
        self.selection_rate
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// The compact model: one allele-1 count per gene.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProbabilityVector {
    counts: Vec<u64>,
    population_size: u64,
}

impl ProbabilityVector {
    /// Builds a vector from raw counts, checking every bound.
    pub fn from_counts(counts: Vec<u64>, population_size: u64) -> Result<Self, CgaError> {
        if counts.is_empty() {
            return Err(CgaError::EmptyChromosome);
        }
        if population_size == 0 {
            return Err(CgaError::InvalidPopulationSize(population_size));
        }
        if let Some((gene, &count)) = counts
            .iter()
            .enumerate()
            .find(|(_, &c)| c > population_size)
        {
            return Err(CgaError::CountOutOfRange {
                gene,
                count,
                population_size,
            });
        }
        Ok(Self {
            counts,
            population_size,
        })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn population_size(&self) -> u64 {
        self.population_size
    }

    pub fn probability(&self, gene: usize) -> f64 {
        self.counts[gene] as f64 / self.population_size as f64
    }

    /// True when every gene is fixed at 0 or N.
    pub fn is_converged(&self) -> bool {
        let n = self.population_size;
        self.counts.iter().all(|&c| c == 0 || c == n)
    }

    /// Most likely string under the model; a gene at exactly one half decodes to 1.
    pub fn decode_model(&self) -> Vec<bool> {
        // c >= N/2 without dividing an odd N
        self.counts
            .iter()
            .map(|&c| 2 * c as u128 >= self.population_size as u128)
            .collect()
    }

    /// Adds `delta` to one count, saturating at `[0, N]`. Returns true when
    /// the bound cut the addition short.
    pub(crate) fn add_clamped(&mut self, gene: usize, delta: i64) -> bool {
        let n = self.population_size as i128;
        let raw = self.counts[gene] as i128 + delta as i128;
        let clamped = raw.clamp(0, n);
        self.counts[gene] = clamped as u64;
        clamped != raw
    }

    /// Moves the model one step toward `winner` at every gene where the two
    /// individuals disagree.
    pub fn compete(&mut self, winner: &[bool], loser: &[bool]) -> Result<(), CgaError> {
        for genes in [winner, loser] {
            if genes.len() != self.counts.len() {
                return Err(CgaError::LengthMismatch {
                    expected: self.counts.len(),
                    actual: genes.len(),
                });
            }
        }
        self.compete_unchecked(winner, loser);
        Ok(())
    }

    #[inline]
    fn compete_unchecked(&mut self, winner: &[bool], loser: &[bool]) {
        let n = self.population_size;
        for ((count, &w), &l) in self.counts.iter_mut().zip(winner).zip(loser) {
            if w != l {
                if w {
                    if *count < n {
                        *count += 1;
                    }
                } else if *count > 0 {
                    *count -= 1;
                }
            }
        }
    }
}

/// Fresh model with every gene at probability one half.
pub fn init_vector(params: &CgaParams, length: usize) -> Result<ProbabilityVector, CgaError> {
    if length == 0 {
        return Err(CgaError::EmptyChromosome);
    }
    let n = params.population_size;
    if n < 2 || !n.is_multiple_of(2) {
        return Err(CgaError::InvalidPopulationSize(n));
    }
    Ok(ProbabilityVector {
        counts: vec![n / 2; length],
        population_size: n,
    })
}

/// A sampled bitstring. `fitness` stays `None` until evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genes: Vec<bool>,
    pub fitness: Option<f64>,
}

impl Individual {
    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }
}

/// One Bernoulli draw with success probability `count / n`, consuming
/// exactly one 64-bit word from the stream.
#[inline]
pub fn draw_allele(rng: &mut impl RngCore, count: u64, n: u64) -> bool {
    ((rng.next_u64() as u128 * n as u128) >> 64) < count as u128
}

pub fn sample_individual(v: &ProbabilityVector, rng: &mut impl RngCore) -> Individual {
    let mut genes = Vec::with_capacity(v.len());
    sample_into(v, rng, &mut genes);
    Individual {
        genes,
        fitness: None,
    }
}

/// Samples into a reusable buffer; draws exactly `v.len()` words.
#[inline]
pub fn sample_into(v: &ProbabilityVector, rng: &mut impl RngCore, genes: &mut Vec<bool>) {
    let n = v.population_size;
    genes.clear();
    genes.extend(v.counts.iter().map(|&c| draw_allele(rng, c, n)));
}

pub fn compete_and_update(
    v: &mut ProbabilityVector,
    winner: &Individual,
    loser: &Individual,
) -> Result<(), CgaError> {
    v.compete(&winner.genes, &loser.genes)
}

/// Result of one tournament round.
#[derive(Debug, Clone, PartialEq)]
pub enum Iteration {
    /// All `s` individuals were evaluated and the model was updated.
    Completed { best: Individual },
    /// An individual reached the target fitness. Sampling stopped right
    /// after that evaluation and the model was left untouched.
    TargetReached {
        evaluations: usize,
        individual: Individual,
    },
    /// The evaluation budget ran out before all `s` samples were scored.
    /// The model was left untouched; `best` is the best individual scored.
    BudgetExhausted {
        evaluations: usize,
        best: Individual,
    },
}

impl Iteration {
    pub fn evaluations(&self, selection_rate: usize) -> usize {
        match self {
            Iteration::Completed { .. } => selection_rate,
            Iteration::TargetReached { evaluations, .. }
            | Iteration::BudgetExhausted { evaluations, .. } => *evaluations,
        }
    }

    pub fn best(&self) -> &Individual {
        match self {
            Iteration::Completed { best } => best,
            Iteration::TargetReached { individual, .. } => individual,
            Iteration::BudgetExhausted { best, .. } => best,
        }
    }
}

/// Reusable sampling buffers for one compact GA instance.
#[derive(Debug, Clone, Default)]
pub struct Tournament {
    genes: Vec<Vec<bool>>,
    fitness: Vec<f64>,
}

impl Tournament {
    pub fn new() -> Self {
        Self::default()
    }

    /// First index holding the highest fitness scored so far.
    fn best_index(&self) -> usize {
        let mut best = 0;
        for i in 1..self.fitness.len() {
            if self.fitness[i] > self.fitness[best] {
                best = i;
            }
        }
        best
    }

    /// One compact GA step. The best of `s` samples (lowest index on ties)
    /// competes against every other one in sample order.
    pub fn run<F, R>(
        &mut self,
        v: &mut ProbabilityVector,
        selection_rate: usize,
        fitness: &F,
        rng: &mut R,
    ) -> Iteration
    where
        F: FitnessFunction + ?Sized,
        R: RngCore,
    {
        self.run_until(v, selection_rate, fitness, rng, None, usize::MAX)
    }

    /// Like [`Tournament::run`], but stops right after an evaluation that
    /// reaches `target` or that uses up `budget` evaluations, leaving the
    /// model untouched.
    pub fn run_until<F, R>(
        &mut self,
        v: &mut ProbabilityVector,
        selection_rate: usize,
        fitness: &F,
        rng: &mut R,
        target: Option<f64>,
        budget: usize,
    ) -> Iteration
    where
        F: FitnessFunction + ?Sized,
        R: RngCore,
    {
        let s = selection_rate;
        self.genes.resize_with(s, Vec::new);
        self.fitness.clear();
        for i in 0..s {
            sample_into(v, rng, &mut self.genes[i]);
            let f = fitness.evaluate(&self.genes[i]);
            self.fitness.push(f);
            if target.is_some_and(|t| f >= t) {
                return Iteration::TargetReached {
                    evaluations: i + 1,
                    individual: Individual {
                        genes: self.genes[i].clone(),
                        fitness: Some(f),
                    },
                };
            }
            if i + 1 >= budget && i + 1 < s {
                let best = self.best_index();
                return Iteration::BudgetExhausted {
                    evaluations: i + 1,
                    best: Individual {
                        genes: self.genes[best].clone(),
                        fitness: Some(self.fitness[best]),
                    },
                };
            }
        }
        let best = self.best_index();
        for i in (0..s).filter(|&i| i != best) {
            v.compete_unchecked(&self.genes[best], &self.genes[i]);
        }
        Iteration::Completed {
            best: Individual {
                genes: self.genes[best].clone(),
                fitness: Some(self.fitness[best]),
            },
        }
    }
}

/// Outcome of [`cga_iteration`].
#[derive(Debug, Clone, PartialEq)]
pub struct IterationReport {
    pub evaluations: usize,
    pub best: Individual,
}

/// One full compact GA step (`s` evaluations, `s - 1` competitions).
pub fn cga_iteration<F, R>(
    v: &mut ProbabilityVector,
    params: &CgaParams,
    fitness: &F,
    rng: &mut R,
) -> IterationReport
where
    F: FitnessFunction + ?Sized,
    R: RngCore,
{
    match Tournament::new().run(v, params.selection_rate, fitness, rng) {
        Iteration::Completed { best } => IterationReport {
            evaluations: params.selection_rate,
            best,
        },
        _ => unreachable!("an unbounded tournament always completes"),
    }
}
