//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.
//!
//!     cargo test --release --test acceptance

mod common;

use std::thread;
use std::time::Instant;

use pcga::benchmarks::{Benchmark, FitnessFunction, TrapSpec};
use pcga::cga::{derive_rng, init_vector, CgaParams, ProbabilityVector, Tournament};
use pcga::harness::{
    fit_loglog_slope, run_sweep_cells, CellRuns, LogLogFit, Metric, SweepRow, SweepSpec,
};
use pcga::net::{worker_run, Manager, ManagerConfig, TerminationPolicy, WorkerConfig};
use pcga::protocol::encode_counts;
use pcga::sim::{run_simulation, Aggregate, SimConfig, Simulation};

const POWERS: [usize; 8] = [1, 2, 4, 8, 16, 32, 64, 128];

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: u32, name: &str, pass: bool, detail: String) {
        if !pass {
            self.failures += 1;
        }
        println!(
            "{} {id} {name}: {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
    }
}

fn desk_spec(sync_intervals: Vec<u64>) -> SweepSpec {
    let mut spec = SweepSpec::desk_scale();
    spec.workers = POWERS.to_vec();
    spec.sync_intervals = sync_intervals;
    spec.repetitions = 10;
    spec.parallel = thread::available_parallelism().map_or(1, |n| n.get());
    spec
}

fn rows_of(cells: &[CellRuns]) -> Vec<SweepRow> {
    cells
        .iter()
        .map(|c| SweepRow::from_aggregate(c.workers, c.sync_interval, &Aggregate::of(&c.runs)))
        .collect()
}

fn slope_ok(fit: &LogLogFit) -> bool {
    (-1.15..=-0.85).contains(&fit.slope) && fit.r_squared >= 0.98
}

fn fit_text(fit: &Result<LogLogFit, pcga::harness::AnalysisError>) -> String {
    match fit {
        Ok(f) => format!(
            "slope={:.4} r2={:.4} points={}",
            f.slope, f.r_squared, f.points
        ),
        Err(e) => format!("no fit ({e})"),
    }
}

fn print_rows(rows: &[SweepRow]) {
    println!("      P       m  evals/proc  comm/proc  solved  blocks");
    for r in rows {
        println!(
            "  {:>5} {:>7} {:>11.1} {:>10.3} {:>7.2} {:>7.2}",
            r.workers,
            r.sync_interval,
            r.evals_per_proc_mean,
            r.comm_steps_mean,
            r.solved_frac,
            r.blocks_mean
        );
    }
}

fn main() {
    let mut report = Report { failures: 0 };
    let started = Instant::now();

    // desk sweep shared by 1, 2 and 4
    let cells = run_sweep_cells(&desk_spec(vec![8, 80])).expect("desk sweep");
    let rows = rows_of(&cells);
    print_rows(&rows);

    let fit8 = fit_loglog_slope(&rows, 8, Metric::EvaluationsPerProcessor, false);
    let all_rows_in = fit8.as_ref().is_ok_and(|f| f.points == POWERS.len());
    report.line(
        1,
        "linear speedup at m=8",
        fit8.as_ref().is_ok_and(slope_ok) && all_rows_in,
        format!(
            "{} (want slope in [-1.15, -0.85], r2 >= 0.98, all 8 P solved)",
            fit_text(&fit8)
        ),
    );

    let mut ratios = Vec::new();
    for &p in &POWERS {
        let at = |m| {
            rows.iter()
                .find(|r| r.workers == p && r.sync_interval == m)
                .expect("cell")
        };
        let (fast, slow) = (at(8), at(80));
        if fast.all_solved() && slow.all_solved() {
            ratios.push((p, fast.comm_steps_mean / slow.comm_steps_mean));
        }
    }
    let listed: Vec<String> = ratios
        .iter()
        .map(|(p, r)| format!("P={p}:{r:.2}"))
        .collect();
    report.line(
        2,
        "communication ratio m=8 / m=80",
        !ratios.is_empty() && ratios.iter().all(|(_, r)| (8.0..=12.0).contains(r)),
        format!("{} (want each in 10 +/- 2)", listed.join(" ")),
    );

    let big = rows_of(&run_sweep_cells(&desk_spec(vec![80_000])).expect("m=80000 sweep"));
    print_rows(&big);
    let p128 = big.iter().find(|r| r.workers == 128).expect("P=128 row");
    let fit_big = fit_loglog_slope(&big, 80_000, Metric::EvaluationsPerProcessor, false);
    let degraded = !fit_big.as_ref().is_ok_and(slope_ok);
    report.line(
        3,
        "large-m degradation at m=80000",
        p128.comm_steps_mean < 1.0 && degraded,
        format!(
            "P=128 comm/proc={:.3} (want < 1); series {} (want outside the linear-speedup band)",
            p128.comm_steps_mean,
            fit_text(&fit_big)
        ),
    );

    let serial = cells
        .iter()
        .find(|c| c.workers == 1 && c.sync_interval == 8)
        .expect("P=1 cell");
    let blocks: Vec<usize> = serial.runs.iter().map(|r| r.blocks_solved).collect();
    let mean_blocks = blocks.iter().sum::<usize>() as f64 / blocks.len() as f64;
    // a run that samples the optimum has found every block
    let full = serial
        .runs
        .iter()
        .filter(|r| r.solved || r.blocks_solved == 10)
        .count() as f64
        / serial.runs.len() as f64;
    report.line(
        4,
        "solution quality at P=1",
        mean_blocks >= 9.0 && full >= 0.8,
        format!(
            "model blocks mean={mean_blocks:.2} per run {blocks:?}, all-10 fraction={full:.2} (want mean >= 9, fraction >= 0.8)"
        ),
    );

    let v = ProbabilityVector::from_counts(vec![123_457; 1000], 1_000_000).expect("vector");
    let bytes = encode_counts(&v).len();
    report.line(
        5,
        "model size",
        bytes == 2500,
        format!("l=1000 N=10^6 -> {bytes} bytes (want 2500)"),
    );

    let (trajectory_ok, trajectory_detail) = trajectory_oracle();
    let (net_ok, net_detail) = net_oracle();
    report.line(
        6,
        "oracle equivalence",
        trajectory_ok && net_ok,
        format!("{trajectory_detail}; {net_detail}"),
    );

    let props = common::all_properties(common::CASES);
    let failed: Vec<String> = props
        .iter()
        .filter_map(|(name, r)| r.as_ref().err().map(|e| format!("{name}: {e}")))
        .collect();
    report.line(
        7,
        "property suites",
        failed.is_empty(),
        if failed.is_empty() {
            format!("{} suites x {} cases", props.len(), common::CASES)
        } else {
            failed.join("; ")
        },
    );

    println!(
        "{} criteria failed; {:.0}s",
        report.failures,
        started.elapsed().as_secs_f64()
    );
    if report.failures > 0 {
        std::process::exit(1);
    }
}

fn trap_params(seed: u64) -> CgaParams {
    CgaParams::new(100_000, 8, seed).expect("params")
}

/// Simulated single worker that never syncs versus the bare tournament loop.
fn trajectory_oracle() -> (bool, String) {
    let iterations = 10_000u64;
    let seed = 7;
    let trap = Benchmark::Trap(TrapSpec::trap3x10());
    let mut sim = Simulation::new(SimConfig {
        workers: 1,
        sync_interval: 8 * iterations,
        cga: trap_params(seed),
        benchmark: trap,
        max_total_evaluations: 8 * iterations,
    })
    .expect("sim");
    let mut v = init_vector(&trap_params(seed), trap.length()).expect("vector");
    let mut rng = derive_rng(seed, 0);
    let mut t = Tournament::new();
    for i in 0..iterations {
        sim.step();
        t.run(&mut v, 8, &trap, &mut rng);
        if sim.worker_local(0) != &v {
            return (false, format!("trajectory diverged at iteration {i}"));
        }
    }
    (true, format!("{iterations} iterations bit-identical"))
}

/// Live manager and one worker on loopback versus the simulator at P=1.
fn net_oracle() -> (bool, String) {
    let seed = 1;
    let trap = Benchmark::Trap(TrapSpec::trap3x10());
    let sim = run_simulation(&SimConfig {
        workers: 1,
        sync_interval: 8,
        cga: trap_params(seed),
        benchmark: trap,
        max_total_evaluations: 100_000_000,
    })
    .expect("sim");

    let manager = Manager::bind(
        "127.0.0.1:0",
        ManagerConfig::new(
            trap_params(seed),
            trap.length(),
            TerminationPolicy {
                known_optimum: trap.known_optimum(),
                max_total_evaluations: None,
            },
        ),
    )
    .expect("bind");
    let addr = manager.local_addr().to_string();
    let server = thread::spawn(move || manager.serve());
    let worker = worker_run(&WorkerConfig::new(addr, 8, trap, seed));
    let served = server.join().expect("manager thread");
    let (worker, served) = match (worker, served) {
        (Ok(w), Ok(s)) => (w, s),
        (w, s) => {
            return (
                false,
                format!("net run failed: {:?} {:?}", w.err(), s.err()),
            )
        }
    };
    let same_model = served.vector.decode_model() == sim.final_manager.decode_model();
    let same_vector = served.vector == sim.final_manager;
    (
        same_model && same_vector && worker.evaluations == sim.total_evaluations,
        format!(
            "net P=1 m=8: decoded model equal={same_model}, counts equal={same_vector}, evals {} vs {} ({})",
            worker.evaluations, sim.total_evaluations, sim.termination_reason
        ),
    )
}
