//! A small P x m grid, written as CSV, with the log-log fit per interval.
//!
//!     cargo run --release --example speedup_sweep -- [out.csv]
//!
//! Uses a 60-bit OneMax so it finishes in seconds. `pcga sweep` runs the
//! trap grid from a config file.

use pcga::benchmarks::Benchmark;
use pcga::cga::CgaParams;
use pcga::harness::{fit_loglog_slope, run_sweep, Metric, SweepSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut spec = SweepSpec::desk_scale();
    spec.workers = vec![1, 2, 4, 8, 16, 32];
    spec.sync_intervals = vec![4, 40, 4000];
    spec.repetitions = 5;
    spec.base.cga = CgaParams::new(2000, 4, 1)?;
    spec.base.benchmark = Benchmark::OneMax { length: 60 };
    spec.output = std::env::args().nth(1).map(Into::into);

    let rows = run_sweep(&spec)?;
    println!("   P      m   evals/proc   comm/proc  solved");
    for r in &rows {
        println!(
            "{:>4} {:>6} {:>12.1} {:>11.2} {:>7.2}",
            r.workers, r.sync_interval, r.evals_per_proc_mean, r.comm_steps_mean, r.solved_frac
        );
    }
    for &m in &spec.sync_intervals {
        let fit = fit_loglog_slope(&rows, m, Metric::EvaluationsPerProcessor, false)?;
        println!(
            "m = {m:>5}: slope {:+.3}  r2 {:.3}",
            fit.slope, fit.r_squared
        );
    }
    Ok(())
}
