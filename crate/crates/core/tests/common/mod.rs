//! Property suites shared by the `properties` and `acceptance` targets.
#![allow(dead_code)]

use std::io::Cursor;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pcga::benchmarks::Benchmark;
use pcga::cga::{derive_rng, init_vector, CgaParams, ProbabilityVector, Tournament};
use pcga::harness::{write_csv, SweepRow};
use pcga::protocol::{
    compute_delta, decode_counts, decode_frame, encode_counts, encode_frame, merge_delta,
    packed_len, read_frame, DeltaReport, Message, TerminateReason,
};
use pcga::sim::{run_simulation, Aggregate, SimConfig};

pub const CASES: u32 = 10_000;

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

fn finish<T: std::fmt::Debug>(r: Result<(), TestError<T>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

/// Counts drawn near the bounds as often as in the middle.
fn random_counts(rng: &mut ChaCha8Rng, n: u64, len: usize) -> Vec<u64> {
    (0..len)
        .map(|_| match rng.gen_range(0..4) {
            0 => 0,
            1 => n,
            2 => rng.gen_range(0..=n.min(3)).min(n),
            _ => rng.gen_range(0..=n),
        })
        .collect()
}

fn even_population() -> impl Strategy<Value = u64> {
    prop_oneof![1u64..=8, 1u64..=5_000, 1u64..=(1 << 39)].prop_map(|h| 2 * h)
}

/// Tournaments keep every count in [0, N] and move each gene by at most
/// s-1 per iteration.
pub fn count_bounds(cases: u32) -> Result<(), String> {
    let strategy = (
        1u64..=40,
        2usize..=10,
        1usize..=24,
        1usize..=30,
        any::<u64>(),
    );
    finish(
        runner(cases).run(&strategy, |(half_n, s, len, iters, seed)| {
            let params = CgaParams::new(2 * half_n, s, seed).unwrap();
            let mut v = init_vector(&params, len).unwrap();
            let mut rng = derive_rng(seed, 0);
            let mut t = Tournament::new();
            let f = Benchmark::OneMax { length: len };
            for _ in 0..iters {
                let before = v.counts().to_vec();
                t.run(&mut v, s, &f, &mut rng);
                for (g, (&a, &b)) in before.iter().zip(v.counts()).enumerate() {
                    prop_assert!(b <= 2 * half_n, "gene {g} count {b} > N");
                    prop_assert!(a.abs_diff(b) <= (s - 1) as u64);
                }
            }
            Ok(())
        }),
    )
}

/// decode(encode(v)) == v, and the size is ceil(len * w / 8).
pub fn codec_roundtrip(cases: u32) -> Result<(), String> {
    let strategy = (even_population(), 1usize..=4096, any::<u64>());
    finish(runner(cases).run(&strategy, |(n, len, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = ProbabilityVector::from_counts(random_counts(&mut rng, n, len), n).unwrap();
        let packed = encode_counts(&v);
        let w = 64 - n.leading_zeros() as usize;
        prop_assert_eq!(packed.len(), (len * w).div_ceil(8));
        prop_assert_eq!(packed.len(), packed_len(n, len));
        prop_assert_eq!(decode_counts(&packed, n, len).unwrap(), v);
        Ok(())
    }))
}

/// Applying a worker's delta to its snapshot reproduces its local vector;
/// unclamped deltas commute; merges never leave [0, N].
pub fn delta_merge_composition(cases: u32) -> Result<(), String> {
    let strategy = (1u64..=60, 1usize..=40, any::<u64>(), 1u64..=1000);
    finish(runner(cases).run(&strategy, |(half_n, len, seed, evals)| {
        let n = 2 * half_n;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let snap = ProbabilityVector::from_counts(random_counts(&mut rng, n, len), n).unwrap();
        let a = ProbabilityVector::from_counts(random_counts(&mut rng, n, len), n).unwrap();
        let b = ProbabilityVector::from_counts(random_counts(&mut rng, n, len), n).unwrap();
        let da = compute_delta(&snap, &a, evals).unwrap();
        let db = compute_delta(&snap, &b, evals).unwrap();
        prop_assert_eq!(da.evaluations(), evals);

        let mut only_a = snap.clone();
        let out = merge_delta(&mut only_a, &da).unwrap();
        prop_assert_eq!(&only_a, &a);
        prop_assert_eq!(out.clamped, 0);

        let mut ab = snap.clone();
        let ca =
            merge_delta(&mut ab, &da).unwrap().clamped + merge_delta(&mut ab, &db).unwrap().clamped;
        let mut ba = snap.clone();
        let cb =
            merge_delta(&mut ba, &db).unwrap().clamped + merge_delta(&mut ba, &da).unwrap().clamped;
        prop_assert!(ab.counts().iter().chain(ba.counts()).all(|&c| c <= n));
        if ca == 0 && cb == 0 {
            prop_assert_eq!(&ab, &ba);
            // and the merged vector is the sum of both moves
            for g in 0..len {
                let expect = snap.counts()[g] as i64
                    + (a.counts()[g] as i64 - snap.counts()[g] as i64)
                    + (b.counts()[g] as i64 - snap.counts()[g] as i64);
                prop_assert_eq!(ab.counts()[g] as i64, expect);
            }
        }
        Ok(())
    }))
}

fn arbitrary_message() -> impl Strategy<Value = Message> {
    prop_oneof![
        Just(Message::hello()),
        (1u64..=50, 0usize..=20, any::<u64>()).prop_map(|(h, len, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let len = len.max(1);
            Message::Snapshot(
                ProbabilityVector::from_counts(random_counts(&mut rng, 2 * h, len), 2 * h).unwrap(),
            )
        }),
        (
            proptest::collection::btree_map(0usize..10_000, -1000i64..1000, 0..20),
            any::<u64>(),
            any::<f64>()
        )
            .prop_map(|(m, evals, best)| {
                let entries: Vec<_> = m.into_iter().filter(|&(_, d)| d != 0).collect();
                Message::Delta {
                    report: DeltaReport::new(entries, evals).unwrap(),
                    best_fitness: best,
                }
            }),
        proptest::collection::vec(any::<u8>(), 0..64).prop_map(|packed| Message::Update { packed }),
        prop_oneof![
            Just(TerminateReason::Solved),
            Just(TerminateReason::Converged),
            Just(TerminateReason::Shutdown)
        ]
        .prop_map(Message::Terminate),
    ]
}

/// Random bytes and mutated valid frames never panic the decoder; they
/// either decode or yield an error.
pub fn frame_fuzzing(cases: u32) -> Result<(), String> {
    let raw = proptest::collection::vec(any::<u8>(), 0..128);
    let mutated = (
        arbitrary_message(),
        proptest::collection::vec((any::<usize>(), any::<u8>()), 1..4),
        any::<usize>(),
    );
    let strategy = (raw, mutated, any::<bool>());
    finish(
        runner(cases).run(&strategy, |(bytes, (msg, flips, cut), with_magic)| {
            let mut noise = bytes;
            if with_magic && noise.len() >= 10 {
                noise[..6].copy_from_slice(b"PCGA\x01\x03");
            }
            let _ = decode_frame(&noise);
            let _ = read_frame(&mut Cursor::new(&noise));

            let good = encode_frame(&msg).unwrap();
            let (back, used) = decode_frame(&good).unwrap();
            prop_assert_eq!(&back, &msg);
            prop_assert_eq!(used, good.len());

            let mut bad = good.clone();
            for (pos, byte) in flips {
                let i = pos % bad.len();
                bad[i] ^= byte | 1;
            }
            let _ = decode_frame(&bad);
            let _ = read_frame(&mut Cursor::new(&bad));
            let truncated = &good[..cut % good.len()];
            prop_assert!(decode_frame(truncated).is_err());
            prop_assert!(read_frame(&mut Cursor::new(truncated)).is_err());
            Ok(())
        }),
    )
}

fn small_config(workers: usize, m: u64, half_n: u64, s: usize, len: usize, seed: u64) -> SimConfig {
    SimConfig {
        workers,
        sync_interval: m,
        cga: CgaParams::new(2 * half_n, s, seed).unwrap(),
        benchmark: Benchmark::OneMax { length: len },
        max_total_evaluations: 20_000,
    }
}

fn csv_bytes(config: &SimConfig) -> Vec<u8> {
    let run = run_simulation(config).unwrap();
    let row =
        SweepRow::from_aggregate(config.workers, config.sync_interval, &Aggregate::of(&[run]));
    let mut out = Vec::new();
    write_csv(&mut out, &[row]).unwrap();
    out
}

/// Two executions of the same configuration agree exactly, down to the
/// CSV bytes.
pub fn determinism(cases: u32) -> Result<(), String> {
    let strategy = (
        1usize..=6,
        1u64..=64,
        1u64..=30,
        2usize..=6,
        1usize..=12,
        any::<u64>(),
    );
    finish(
        runner(cases).run(&strategy, |(p, m, half_n, s, len, seed)| {
            let config = small_config(p, m, half_n, s, len, seed);
            prop_assert_eq!(
                run_simulation(&config).unwrap(),
                run_simulation(&config).unwrap()
            );
            prop_assert_eq!(csv_bytes(&config), csv_bytes(&config));
            Ok(())
        }),
    )
}

pub fn all_properties(cases: u32) -> Vec<(&'static str, Result<(), String>)> {
    vec![
        ("count bounds", count_bounds(cases)),
        ("codec round-trip", codec_roundtrip(cases)),
        ("delta/merge composition", delta_merge_composition(cases)),
        ("frame fuzzing", frame_fuzzing(cases)),
        ("determinism", determinism(cases)),
    ]
}

/// Turns a failed property into a test failure with its message.
pub fn check(result: Result<(), String>) {
    if let Err(e) = result {
        panic!("{e}");
    }
}
