//! Serial compact GA on the concatenated 3-bit trap.
//!
//!     cargo run --release --example compact_ga -- [N] [s] [seed]

use pcga::benchmarks::{Benchmark, FitnessFunction, TrapSpec};
use pcga::cga::{derive_rng, init_vector, CgaParams, Iteration, Tournament};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<u64> = std::env::args()
        .skip(1)
        .map(|a| a.parse())
        .collect::<Result<_, _>>()?;
    let n = args.first().copied().unwrap_or(100_000);
    let s = args.get(1).copied().unwrap_or(8) as usize;
    let seed = args.get(2).copied().unwrap_or(1);

    let params = CgaParams::new(n, s, seed)?;
    let trap = Benchmark::Trap(TrapSpec::trap3x10());
    let mut v = init_vector(&params, trap.length())?;
    let mut rng = derive_rng(seed, 0);
    let mut tournament = Tournament::new();
    let mut evaluations = 0;

    loop {
        let it = tournament.run_until(&mut v, s, &trap, &mut rng, trap.known_optimum(), usize::MAX);
        evaluations += it.evaluations(s);
        if let Iteration::TargetReached { individual, .. } = it {
            println!(
                "optimum sampled after {evaluations} evaluations: {:?}",
                bits(&individual.genes)
            );
            break;
        }
        if v.is_converged() {
            let model = v.decode_model();
            println!(
                "converged after {evaluations} evaluations; model solves {}/{} blocks",
                trap.blocks_solved(&model),
                trap.block_count()
            );
            break;
        }
        if evaluations % 100_000 < s {
            let mean_p: f64 = (0..v.len()).map(|g| v.probability(g)).sum::<f64>() / v.len() as f64;
            println!("{evaluations:>8} evals  mean p = {mean_p:.3}");
        }
    }
    Ok(())
}

fn bits(genes: &[bool]) -> String {
    genes.iter().map(|&b| if b { '1' } else { '0' }).collect()
}
