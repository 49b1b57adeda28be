//! A manager and several workers over loopback TCP, all in one process.
//!
//!     cargo run --release --example loopback_cluster -- [workers]

use std::thread;

use pcga::benchmarks::{Benchmark, FitnessFunction};
use pcga::cga::CgaParams;
use pcga::net::{worker_run, Manager, ManagerConfig, TerminationPolicy, WorkerConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let workers: u64 = std::env::args()
        .nth(1)
        .map(|a| a.parse())
        .transpose()?
        .unwrap_or(4);
    let benchmark = Benchmark::OneMax { length: 64 };
    let params = CgaParams::new(1000, 4, 7)?;

    let manager = Manager::bind(
        "127.0.0.1:0",
        ManagerConfig::new(
            params,
            benchmark.length(),
            TerminationPolicy {
                known_optimum: benchmark.known_optimum(),
                max_total_evaluations: Some(10_000_000),
            },
        ),
    )?;
    let addr = manager.local_addr().to_string();
    let server = thread::spawn(move || manager.serve());

    let handles: Vec<_> = (0..workers)
        .map(|w| {
            let mut config = WorkerConfig::new(addr.clone(), 16, benchmark, 7);
            config.selection_rate = 4;
            config.stream = w;
            thread::spawn(move || worker_run(&config))
        })
        .collect();

    for (w, h) in handles.into_iter().enumerate() {
        let r = h.join().expect("worker thread")?;
        println!(
            "worker {w}: {:?} after {} evals, {} transactions, best {}",
            r.terminated_by, r.evaluations, r.transactions, r.best_fitness
        );
    }
    let report = server.join().expect("manager thread")?;
    println!(
        "manager: {:?}, {} merges, {} evaluations reported",
        report.status, report.merges_applied, report.total_evaluations
    );
    Ok(())
}
