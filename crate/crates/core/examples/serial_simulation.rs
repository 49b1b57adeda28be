//! One simulated manager-worker run, stepping worker turns by hand.
//!
//!     cargo run --release --example serial_simulation -- [P] [m] [seed]

use pcga::benchmarks::{Benchmark, TrapSpec};
use pcga::cga::CgaParams;
use pcga::sim::{SimConfig, Simulation};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<u64> = std::env::args()
        .skip(1)
        .map(|a| a.parse())
        .collect::<Result<_, _>>()?;
    let config = SimConfig {
        workers: args.first().copied().unwrap_or(16) as usize,
        sync_interval: args.get(1).copied().unwrap_or(80),
        cga: CgaParams::new(100_000, 8, args.get(2).copied().unwrap_or(1))?,
        benchmark: Benchmark::Trap(TrapSpec::trap3x10()),
        max_total_evaluations: 100_000_000,
    };

    let mut sim = Simulation::new(config)?;
    let mut next_report = 50_000;
    let reason = loop {
        if let Some(reason) = sim.step() {
            break reason;
        }
        if sim.total_evaluations() >= next_report {
            let decoded = sim.manager().decode_model();
            println!(
                "{:>9} evals  manager model solves {} blocks",
                sim.total_evaluations(),
                sim.config().benchmark.blocks_solved(&decoded)
            );
            next_report += 50_000;
        }
    };

    let m = sim.metrics();
    println!("stopped: {reason}");
    println!(
        "evaluations/processor     {:.1}",
        m.evaluations_per_processor()
    );
    println!(
        "communication steps/proc  {:.2}",
        m.communication_steps_per_processor()
    );
    println!("blocks solved             {}", m.blocks_solved);
    println!("clamp events              {}", m.clamp_events);
    Ok(())
}
