use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::benchmarks::{Benchmark, TrapSpec};
use crate::cga::CgaParams;
use crate::sim::{run_simulation, Aggregate, RunMetrics, SimConfig, SimError};

pub const CSV_HEADER: [&str; 9] = [
    "P",
    "m",
    "reps",
    "evals_per_proc_mean",
    "evals_per_proc_std",
    "comm_steps_mean",
    "comm_steps_std",
    "solved_frac",
    "blocks_mean",
];

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("sweep needs at least one worker count and one sync interval")]
    EmptySweep,
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("csv row {row}: {message}")]
    CsvContent { row: usize, message: String },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// A grid of simulations over worker counts and sync intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub workers: Vec<usize>,
    pub sync_intervals: Vec<u64>,
    pub repetitions: usize,
    /// Everything but `workers` and `sync_interval`, which the grid sets.
    /// Its seed is the base of the replicate seed schedule.
    pub base: SimConfig,
    pub output: Option<PathBuf>,
    /// Threads used to run cells.
    pub parallel: usize,
    /// Whether slope fits keep rows with unsolved replicates.
    pub include_unsolved: bool,
}

impl SweepSpec {
    fn trap_base(seed: u64) -> SimConfig {
        SimConfig {
            workers: 1,
            sync_interval: 8,
            cga: CgaParams::new(100_000, 8, seed).expect("valid constants"),
            benchmark: Benchmark::Trap(TrapSpec::trap3x10()),
            max_total_evaluations: super::config::DEFAULT_MAX_EVALUATIONS,
        }
    }

    /// The full grid: 11 worker counts by 5 intervals, 30 runs each.
    pub fn full_scale() -> Self {
        Self {
            workers: (0..=10).map(|k| 1 << k).collect(),
            sync_intervals: vec![8, 80, 800, 8000, 80000],
            repetitions: 30,
            base: Self::trap_base(super::config::DEFAULT_SEED),
            output: None,
            parallel: 1,
            include_unsolved: false,
        }
    }

    /// A grid that finishes in minutes on one core.
    pub fn desk_scale() -> Self {
        Self {
            workers: (0..=7).map(|k| 1 << k).collect(),
            sync_intervals: vec![8, 80, 800],
            repetitions: 10,
            ..Self::full_scale()
        }
    }

    /// `(P, m)` cells in output order: sorted by `m`, then `P`.
    pub fn cells(&self) -> Vec<(usize, u64)> {
        let mut ms = self.sync_intervals.clone();
        ms.sort_unstable();
        ms.dedup();
        let mut ps = self.workers.clone();
        ps.sort_unstable();
        ps.dedup();
        ms.iter()
            .flat_map(|&m| ps.iter().map(move |&p| (p, m)))
            .collect()
    }

    /// Seed of replicate `r`.
    pub fn replicate_seed(&self, r: usize) -> u64 {
        self.base.cga.seed().wrapping_add(r as u64)
    }

    pub fn cell_config(&self, workers: usize, sync_interval: u64) -> SimConfig {
        SimConfig {
            workers,
            sync_interval,
            ..self.base.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub workers: usize,
    pub sync_interval: u64,
    pub repetitions: usize,
    pub evals_per_proc_mean: f64,
    pub evals_per_proc_std: f64,
    pub comm_steps_mean: f64,
    pub comm_steps_std: f64,
    pub solved_frac: f64,
    pub blocks_mean: f64,
}

impl SweepRow {
    pub fn from_aggregate(workers: usize, sync_interval: u64, agg: &Aggregate) -> Self {
        Self {
            workers,
            sync_interval,
            repetitions: agg.repetitions,
            evals_per_proc_mean: agg.evaluations_per_processor.mean,
            evals_per_proc_std: agg.evaluations_per_processor.std,
            comm_steps_mean: agg.communication_steps_per_processor.mean,
            comm_steps_std: agg.communication_steps_per_processor.std,
            solved_frac: agg.solved_fraction,
            blocks_mean: agg.blocks_solved_mean,
        }
    }

    /// Every replicate of this cell solved the problem.
    pub fn all_solved(&self) -> bool {
        self.solved_frac >= 1.0
    }

    fn to_record(&self) -> [String; 9] {
        // f64 Display prints the shortest string that parses back exactly
        [
            self.workers.to_string(),
            self.sync_interval.to_string(),
            self.repetitions.to_string(),
            self.evals_per_proc_mean.to_string(),
            self.evals_per_proc_std.to_string(),
            self.comm_steps_mean.to_string(),
            self.comm_steps_std.to_string(),
            self.solved_frac.to_string(),
            self.blocks_mean.to_string(),
        ]
    }
}

/// Raw runs of one cell, in replicate order.
#[derive(Debug, Clone)]
pub struct CellRuns {
    pub workers: usize,
    pub sync_interval: u64,
    pub runs: Vec<RunMetrics>,
}

/// Runs every replicate of every cell, `spec.parallel` at a time.
pub fn run_sweep_cells(spec: &SweepSpec) -> Result<Vec<CellRuns>, HarnessError> {
    let cells = spec.cells();
    if cells.is_empty() || spec.repetitions == 0 {
        return Err(HarnessError::EmptySweep);
    }
    spec.base.validate()?;
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..spec.repetitions).map(move |r| (c, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.parallel.max(1))
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let results: Vec<RunMetrics> = pool.install(|| {
        jobs.par_iter()
            .map(|&(c, r)| {
                let (p, m) = cells[c];
                run_simulation(&spec.cell_config(p, m).with_seed(spec.replicate_seed(r)))
            })
            .collect::<Result<_, _>>()
    })?;
    let mut results = results.into_iter();
    Ok(cells
        .into_iter()
        .map(|(workers, sync_interval)| CellRuns {
            workers,
            sync_interval,
            runs: results.by_ref().take(spec.repetitions).collect(),
        })
        .collect())
}

/// Runs the sweep and, when `spec.output` is set, writes the CSV. The
/// output file is created before any simulation runs.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, HarnessError> {
    let out = match &spec.output {
        Some(path) => Some((
            path,
            File::create(path).map_err(|source| HarnessError::Output {
                path: path.clone(),
                source,
            })?,
        )),
        None => None,
    };
    let rows: Vec<SweepRow> = run_sweep_cells(spec)?
        .iter()
        .map(|cell| {
            SweepRow::from_aggregate(cell.workers, cell.sync_interval, &Aggregate::of(&cell.runs))
        })
        .collect();
    if let Some((path, file)) = out {
        write_csv(file, &rows).map_err(|e| match e {
            HarnessError::Csv(err) if err.is_io_error() => HarnessError::Output {
                path: path.clone(),
                source: std::io::Error::other(err.to_string()),
            },
            other => other,
        })?;
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(w: W, rows: &[SweepRow]) -> Result<(), HarnessError> {
    let mut writer = csv::Writer::from_writer(w);
    writer.write_record(CSV_HEADER)?;
    for row in rows {
        writer.write_record(row.to_record())?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<SweepRow>, HarnessError> {
    let mut reader = csv::Reader::from_reader(r);
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(HarnessError::CsvContent {
            row: 0,
            message: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let row = idx + 1;
        let field = |i: usize| -> &str { record.get(i).unwrap_or("") };
        let bad = |i: usize| HarnessError::CsvContent {
            row,
            message: format!("cannot parse {} = `{}`", CSV_HEADER[i], field(i)),
        };
        let float = |i: usize| field(i).parse::<f64>().map_err(|_| bad(i));
        rows.push(SweepRow {
            workers: field(0).parse().map_err(|_| bad(0))?,
            sync_interval: field(1).parse().map_err(|_| bad(1))?,
            repetitions: field(2).parse().map_err(|_| bad(2))?,
            evals_per_proc_mean: float(3)?,
            evals_per_proc_std: float(4)?,
            comm_steps_mean: float(5)?,
            comm_steps_std: float(6)?,
            solved_frac: float(7)?,
            blocks_mean: float(8)?,
        });
    }
    Ok(rows)
}

pub fn read_csv_file(path: &Path) -> Result<Vec<SweepRow>, HarnessError> {
    let file = File::open(path).map_err(|source| HarnessError::Output {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file)
}
