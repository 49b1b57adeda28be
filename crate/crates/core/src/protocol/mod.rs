//! Model exchange between the manager and its workers: sparse deltas,
//! bit-packed vectors, and the framed wire format.

mod codec;
mod delta;
mod frame;

pub use codec::{decode_counts, encode_counts, field_width, packed_len, CodecError};
pub use delta::{compute_delta, merge_delta, DeltaError, DeltaReport, MergeOutcome};
pub use frame::{
    decode_frame, encode_frame, read_frame, write_frame, FrameError, Message, TerminateReason,
    HEADER_LEN, MAGIC, MAX_PAYLOAD, VERSION,
};
