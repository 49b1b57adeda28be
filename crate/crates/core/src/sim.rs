//! Serial simulation of one manager and `P` lockstep compact GA workers.
//!
//! Workers take turns in strict round-robin order. A turn is one compact GA
//! iteration (`s` evaluations) on the worker's local vector. A worker that
//! has done at least `m` evaluations since it last synchronized opens its
//! next turn with one manager transaction: its delta is merged into the
//! manager vector and it continues from a copy of the merged vector, so the
//! iteration in that same turn already samples from the fresh model. A run
//! that ends first leaves that worker's work unreported. Communication is
//! counted in transactions; no wall time is modeled.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::benchmarks::{Benchmark, FitnessFunction};
use crate::cga::{
    derive_rng, init_vector, CgaError, CgaParams, CgaRng, Iteration, ProbabilityVector, Tournament,
};
use crate::protocol::{compute_delta, merge_delta};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("need at least one worker")]
    NoWorkers,
    #[error("sync interval must be at least 1")]
    ZeroSyncInterval,
    #[error("evaluation cap must be at least 1")]
    ZeroEvaluationCap,
    #[error("need at least one repetition")]
    NoRepetitions,
    #[error(transparent)]
    Cga(#[from] CgaError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Number of workers `P`.
    pub workers: usize,
    /// Evaluations `m` between manager transactions.
    pub sync_interval: u64,
    pub cga: CgaParams,
    pub benchmark: Benchmark,
    /// Safety cap on evaluations summed over all workers.
    pub max_total_evaluations: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.workers == 0 {
            return Err(SimError::NoWorkers);
        }
        if self.sync_interval == 0 {
            return Err(SimError::ZeroSyncInterval);
        }
        if self.max_total_evaluations == 0 {
            return Err(SimError::ZeroEvaluationCap);
        }
        // re-check in case the params were built by hand
        CgaParams::new(
            self.cga.population_size(),
            self.cga.selection_rate(),
            self.cga.seed(),
        )?;
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            cga: self.cga.with_seed(seed),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TerminationReason {
    OptimumSampled,
    ManagerConverged,
    EvalCap,
}

impl fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TerminationReason::OptimumSampled => "optimum-sampled",
            TerminationReason::ManagerConverged => "manager-converged",
            TerminationReason::EvalCap => "eval-cap",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub total_evaluations: u64,
    pub evaluations_per_worker: Vec<u64>,
    /// One step is one delta + update transaction.
    pub communication_steps_per_worker: Vec<u64>,
    /// The optimum was sampled, or the manager's decoded model attains it.
    pub solved: bool,
    pub termination_reason: TerminationReason,
    /// Blocks solved by the manager's decoded model at termination.
    pub blocks_solved: usize,
    pub best_fitness_ever: f64,
    /// Merge entries that hit a count bound.
    pub clamp_events: u64,
    pub final_manager: ProbabilityVector,
}

impl RunMetrics {
    pub fn workers(&self) -> usize {
        self.evaluations_per_worker.len()
    }

    pub fn evaluations_per_processor(&self) -> f64 {
        self.total_evaluations as f64 / self.workers() as f64
    }

    pub fn communication_steps_per_processor(&self) -> f64 {
        self.communication_steps_per_worker.iter().sum::<u64>() as f64 / self.workers() as f64
    }
}

#[derive(Debug, Clone)]
struct WorkerSlot {
    snapshot: ProbabilityVector,
    local: ProbabilityVector,
    rng: CgaRng,
    tournament: Tournament,
    since_sync: u64,
    evaluations: u64,
    comm_steps: u64,
}

/// A steppable simulation; [`run_simulation`] drives one to completion.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: SimConfig,
    manager: ProbabilityVector,
    workers: Vec<WorkerSlot>,
    next: usize,
    total: u64,
    best_ever: f64,
    clamp_events: u64,
    termination: Option<TerminationReason>,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        if config.sync_interval < config.cga.selection_rate() as u64 {
            log::warn!(
                "sync interval {} is below the selection rate {}; every iteration will sync",
                config.sync_interval,
                config.cga.selection_rate()
            );
        }
        let manager = init_vector(&config.cga, config.benchmark.length())?;
        let workers = (0..config.workers)
            .map(|w| WorkerSlot {
                snapshot: manager.clone(),
                local: manager.clone(),
                rng: derive_rng(config.cga.seed(), w as u64),
                tournament: Tournament::new(),
                since_sync: 0,
                evaluations: 0,
                comm_steps: 0,
            })
            .collect();
        Ok(Self {
            config,
            manager,
            workers,
            next: 0,
            total: 0,
            best_ever: f64::NEG_INFINITY,
            clamp_events: 0,
            termination: None,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn manager(&self) -> &ProbabilityVector {
        &self.manager
    }

    pub fn worker_local(&self, worker: usize) -> &ProbabilityVector {
        &self.workers[worker].local
    }

    pub fn worker_snapshot(&self, worker: usize) -> &ProbabilityVector {
        &self.workers[worker].snapshot
    }

    pub fn worker_communication_steps(&self, worker: usize) -> u64 {
        self.workers[worker].comm_steps
    }

    /// Worker whose turn comes next.
    pub fn next_worker(&self) -> usize {
        self.next
    }

    pub fn total_evaluations(&self) -> u64 {
        self.total
    }

    pub fn termination(&self) -> Option<TerminationReason> {
        self.termination
    }

    /// Runs one worker's turn. Returns the termination reason once the run
    /// has ended; further calls do nothing.
    pub fn step(&mut self) -> Option<TerminationReason> {
        if self.termination.is_some() {
            return self.termination;
        }
        let s = self.config.cga.selection_rate();
        let budget = (self.config.max_total_evaluations - self.total).min(s as u64) as usize;
        let target = self.config.benchmark.known_optimum();
        let w = self.next;
        self.next = (self.next + 1) % self.workers.len();

        let slot = &mut self.workers[w];
        if slot.since_sync >= self.config.sync_interval {
            let delta = compute_delta(&slot.snapshot, &slot.local, slot.since_sync)
                .expect("worker vectors share the manager's shape");
            let merged = merge_delta(&mut self.manager, &delta)
                .expect("delta indices come from a vector of the same length");
            self.clamp_events += merged.clamped as u64;
            slot.snapshot.clone_from(&self.manager);
            slot.local.clone_from(&self.manager);
            slot.since_sync = 0;
            slot.comm_steps += 1;
            if self.manager.is_converged() {
                self.termination = Some(TerminationReason::ManagerConverged);
                return self.termination;
            }
        }

        let outcome = slot.tournament.run_until(
            &mut slot.local,
            s,
            &self.config.benchmark,
            &mut slot.rng,
            target,
            budget,
        );
        let used = outcome.evaluations(s) as u64;
        slot.evaluations += used;
        slot.since_sync += used;
        self.total += used;
        if let Some(f) = outcome.best().fitness {
            self.best_ever = self.best_ever.max(f);
        }

        match outcome {
            Iteration::TargetReached { .. } => {
                self.termination = Some(TerminationReason::OptimumSampled);
            }
            Iteration::BudgetExhausted { .. } => {
                self.termination = Some(TerminationReason::EvalCap);
            }
            Iteration::Completed { .. } => {
                if self.total >= self.config.max_total_evaluations {
                    self.termination = Some(TerminationReason::EvalCap);
                }
            }
        }
        self.termination
    }

    /// Runs turns until the run terminates.
    pub fn run_to_end(&mut self) -> TerminationReason {
        loop {
            if let Some(reason) = self.step() {
                return reason;
            }
        }
    }

    /// Metrics as of now. `termination_reason` defaults to `EvalCap` while
    /// the run is still going.
    pub fn metrics(&self) -> RunMetrics {
        let reason = self.termination.unwrap_or(TerminationReason::EvalCap);
        let decoded = self.manager.decode_model();
        let decoded_optimal = self
            .config
            .benchmark
            .known_optimum()
            .is_some_and(|opt| self.config.benchmark.evaluate(&decoded) >= opt);
        RunMetrics {
            total_evaluations: self.total,
            evaluations_per_worker: self.workers.iter().map(|w| w.evaluations).collect(),
            communication_steps_per_worker: self.workers.iter().map(|w| w.comm_steps).collect(),
            solved: reason == TerminationReason::OptimumSampled || decoded_optimal,
            termination_reason: reason,
            blocks_solved: self.config.benchmark.blocks_solved(&decoded),
            best_fitness_ever: self.best_ever,
            clamp_events: self.clamp_events,
            final_manager: self.manager.clone(),
        }
    }
}

/// Runs one simulation to termination. A pure function of `config`.
pub fn run_simulation(config: &SimConfig) -> Result<RunMetrics, SimError> {
    let mut sim = Simulation::new(config.clone())?;
    sim.run_to_end();
    Ok(sim.metrics())
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    /// Standard deviation uses `n - 1`; a single value has deviation 0.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self::default();
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub repetitions: usize,
    pub evaluations_per_processor: Summary,
    pub communication_steps_per_processor: Summary,
    pub solved_fraction: f64,
    pub blocks_solved_mean: f64,
}

impl Aggregate {
    pub fn of(runs: &[RunMetrics]) -> Self {
        let evals: Vec<f64> = runs
            .iter()
            .map(RunMetrics::evaluations_per_processor)
            .collect();
        let comms: Vec<f64> = runs
            .iter()
            .map(RunMetrics::communication_steps_per_processor)
            .collect();
        let n = runs.len().max(1) as f64;
        Self {
            repetitions: runs.len(),
            evaluations_per_processor: Summary::of(&evals),
            communication_steps_per_processor: Summary::of(&comms),
            solved_fraction: runs.iter().filter(|r| r.solved).count() as f64 / n,
            blocks_solved_mean: runs.iter().map(|r| r.blocks_solved as f64).sum::<f64>() / n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replicates {
    pub runs: Vec<RunMetrics>,
    pub aggregate: Aggregate,
}

/// The default seed schedule: replicate `r` runs with `base + r`.
pub fn offset_seeds(base: u64) -> impl Fn(usize) -> u64 + Sync {
    move |r| base.wrapping_add(r as u64)
}

/// Runs `repetitions` independent simulations, replicate `r` with master
/// seed `schedule(r)`. Replicates run in parallel; results keep replicate order.
pub fn run_replicates<S>(
    config: &SimConfig,
    repetitions: usize,
    schedule: S,
) -> Result<Replicates, SimError>
where
    S: Fn(usize) -> u64 + Sync,
{
    if repetitions == 0 {
        return Err(SimError::NoRepetitions);
    }
    config.validate()?;
    let runs = (0..repetitions)
        .into_par_iter()
        .map(|r| run_simulation(&config.with_seed(schedule(r))))
        .collect::<Result<Vec<_>, _>>()?;
    let aggregate = Aggregate::of(&runs);
    Ok(Replicates { runs, aggregate })
}
