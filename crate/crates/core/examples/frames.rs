//! Encoding and decoding every wire message, plus what malformed input
//! looks like to the decoder.
//!
//!     cargo run --example frames

use pcga::cga::ProbabilityVector;
use pcga::protocol::{decode_frame, encode_frame, DeltaReport, Message, TerminateReason};

fn hex(bytes: &[u8]) -> String {
    bytes
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let v = ProbabilityVector::from_counts(vec![5, 5, 5], 10)?;
    let messages = [
        Message::hello(),
        Message::Snapshot(v.clone()),
        Message::Delta {
            report: DeltaReport::new(vec![(0, 3), (2, -1)], 8)?,
            best_fitness: 2.7,
        },
        Message::update(&v),
        Message::Terminate(TerminateReason::Solved),
    ];
    for msg in &messages {
        let bytes = encode_frame(msg)?;
        let (back, used) = decode_frame(&bytes)?;
        assert_eq!(&back, msg);
        assert_eq!(used, bytes.len());
        println!("{:<9} {}", msg.kind(), hex(&bytes));
    }

    let good = encode_frame(&Message::Terminate(TerminateReason::Converged))?;
    let mut bad_magic = good.clone();
    bad_magic[0] = b'X';
    let mut bad_reason = good.clone();
    *bad_reason.last_mut().unwrap() = 9;
    for (label, bytes) in [
        ("bad magic", bad_magic),
        ("truncated", good[..good.len() - 1].to_vec()),
        ("bad reason", bad_reason),
    ] {
        println!("{label:<10} -> {}", decode_frame(&bytes).unwrap_err());
    }
    Ok(())
}
