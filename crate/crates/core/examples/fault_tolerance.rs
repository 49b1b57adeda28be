//! Workers that start early or vanish mid-interval still finish the job. The manager
//! checkpoints and is restarted from its checkpoint.
//!
//!     cargo run --release --example fault_tolerance

use std::io::{BufReader, Write};
use std::net::TcpStream;
use std::thread;
use std::time::Duration;

use pcga::benchmarks::{Benchmark, FitnessFunction};
use pcga::cga::CgaParams;
use pcga::net::{
    read_checkpoint, worker_run, CheckpointPolicy, Manager, ManagerConfig, TerminationPolicy,
    WorkerConfig,
};
use pcga::protocol::{read_frame, write_frame, Message};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let benchmark = Benchmark::OneMax { length: 48 };
    let params = CgaParams::new(600, 4, 3)?;
    let dir = std::env::temp_dir().join(format!("pcga-ft-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let checkpoint = dir.join("model.ckpt");

    let config = |max_evals| {
        let mut c = ManagerConfig::new(
            params,
            benchmark.length(),
            TerminationPolicy {
                known_optimum: benchmark.known_optimum(),
                max_total_evaluations: max_evals,
            },
        );
        c.checkpoint = Some(CheckpointPolicy {
            path: checkpoint.clone(),
            every: Duration::from_millis(20),
        });
        c
    };

    // reserve a port, then start a worker before anything listens on it
    let addr = std::net::TcpListener::bind("127.0.0.1:0")?.local_addr()?;
    let mut early = WorkerConfig::new(addr.to_string(), 8, benchmark, 3);
    early.selection_rate = 4;
    let early = thread::spawn(move || worker_run(&early));
    thread::sleep(Duration::from_millis(200));

    // first manager life: shut down after a budget, leaving a checkpoint
    let first = Manager::bind(addr, config(Some(2_000)))?;
    let report = first.serve()?;
    println!(
        "first manager: {:?} after {} evaluations",
        report.status, report.total_evaluations
    );
    println!(
        "early worker: {:?}",
        early.join().expect("thread")?.terminated_by
    );

    let saved = read_checkpoint(&checkpoint)?;
    println!("checkpoint mean p = {:.3}", mean_p(saved.counts(), 600));

    // second life resumes from the checkpoint
    let second = Manager::bind("127.0.0.1:0", config(None))?;
    let addr = second.local_addr();
    let server = thread::spawn(move || second.serve());

    // a client that takes the snapshot and disappears
    let mut stream = TcpStream::connect(addr)?;
    write_frame(&mut stream, &Message::hello())?;
    stream.flush()?;
    let snap = read_frame(&mut BufReader::new(&stream))?;
    println!("ghost worker got {} and vanished", snap.kind());
    drop(stream);

    let mut w = WorkerConfig::new(addr.to_string(), 8, benchmark, 4);
    w.selection_rate = 4;
    let r = worker_run(&w)?;
    println!(
        "rejoining worker: {:?} after {} evaluations",
        r.terminated_by, r.evaluations
    );
    let report = server.join().expect("thread")?;
    println!(
        "second manager: {:?}, {} connections",
        report.status, report.connections
    );

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

fn mean_p(counts: &[u64], n: u64) -> f64 {
    counts.iter().map(|&c| c as f64 / n as f64).sum::<f64>() / counts.len() as f64
}
