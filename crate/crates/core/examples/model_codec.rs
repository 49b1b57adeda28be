//! Bit-packed probability vectors and sparse deltas.
//!
//!     cargo run --example model_codec

use pcga::cga::{init_vector, CgaParams, ProbabilityVector};
use pcga::protocol::{
    compute_delta, decode_counts, encode_counts, field_width, merge_delta, packed_len,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // N = 10 needs 4 bits per count
    let v = ProbabilityVector::from_counts(vec![5, 5, 5], 10)?;
    let packed = encode_counts(&v);
    println!("w = {}, bytes = {:02x?}", field_width(10), packed);
    assert_eq!(decode_counts(&packed, 10, 3)?, v);

    for (n, len) in [(100_000u64, 30usize), (1_000_000, 1000), (1 << 40, 4096)] {
        println!(
            "N = {n:>13}  len = {len:>4}  -> {:>6} bytes packed, {:>6} as u64",
            packed_len(n, len),
            8 * len
        );
    }

    // two workers move away from the same snapshot; the manager merges both
    let params = CgaParams::new(100, 2, 0)?;
    let snapshot = init_vector(&params, 4)?;
    let a = ProbabilityVector::from_counts(vec![52, 50, 49, 50], 100)?;
    let b = ProbabilityVector::from_counts(vec![51, 47, 50, 50], 100)?;
    let da = compute_delta(&snapshot, &a, 8)?;
    let db = compute_delta(&snapshot, &b, 8)?;
    println!("delta a = {:?}", da.entries());
    println!("delta b = {:?}", db.entries());

    let mut manager = snapshot.clone();
    merge_delta(&mut manager, &da)?;
    merge_delta(&mut manager, &db)?;
    println!("merged  = {:?}", manager.counts());
    Ok(())
}
