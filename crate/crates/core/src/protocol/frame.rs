//! Wire envelope shared by manager and workers.
//!
//! ```text
//! "PCGA" | version: u8 | type: u8 | payload length: u32 BE | payload
//! ```
//!
//! Payloads, all integers big-endian:
//!
//! | type | kind      | payload                                                        |
//! |------|-----------|----------------------------------------------------------------|
//! | 1    | HELLO     | protocol version u8, token flag u8 (0/1), [token u64]           |
//! | 2    | SNAPSHOT  | N u64, length u32, packed counts                               |
//! | 3    | DELTA     | evaluations u64, entries u32, (gene u32, delta i32)*, best f64 |
//! | 4    | UPDATE    | packed counts                                                  |
//! | 5    | TERMINATE | reason u8 (1 solved, 2 converged, 3 shutdown)                  |

use std::io::{self, Read, Write};

use thiserror::Error;

use super::codec::{decode_counts, encode_counts, packed_len, CodecError};
use super::delta::{DeltaError, DeltaReport};
use crate::cga::ProbabilityVector;

pub const MAGIC: [u8; 4] = *b"PCGA";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 10;
/// Largest payload a peer may announce.
pub const MAX_PAYLOAD: u32 = 1 << 28;

const HELLO: u8 = 1;
const SNAPSHOT: u8 = 2;
const DELTA: u8 = 3;
const UPDATE: u8 = 4;
const TERMINATE: u8 = 5;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("bad magic {0:02x?}, expected \"PCGA\"")]
    BadMagic([u8; 4]),
    #[error("unsupported protocol version {0}")]
    UnsupportedVersion(u8),
    #[error("unknown message type {0}")]
    UnknownType(u8),
    #[error("payload length {0} exceeds the {MAX_PAYLOAD}-byte limit")]
    PayloadTooLarge(u32),
    #[error("truncated {what}: needed {needed} bytes, had {available}")]
    Truncated {
        what: &'static str,
        needed: usize,
        available: usize,
    },
    #[error("{0} payload has {1} unexpected trailing bytes")]
    TrailingBytes(&'static str, usize),
    #[error("invalid {what}: {detail}")]
    InvalidField { what: &'static str, detail: String },
    #[error("delta for gene {gene} ({delta}) does not fit the 32-bit wire field")]
    DeltaOverflow { gene: usize, delta: i64 },
    #[error("malformed counts: {0}")]
    Codec(#[from] CodecError),
    #[error("malformed delta: {0}")]
    Delta(#[from] DeltaError),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminateReason {
    Solved,
    Converged,
    Shutdown,
}

impl TerminateReason {
    fn code(self) -> u8 {
        match self {
            TerminateReason::Solved => 1,
            TerminateReason::Converged => 2,
            TerminateReason::Shutdown => 3,
        }
    }

    fn from_code(code: u8) -> Result<Self, FrameError> {
        match code {
            1 => Ok(TerminateReason::Solved),
            2 => Ok(TerminateReason::Converged),
            3 => Ok(TerminateReason::Shutdown),
            other => Err(FrameError::InvalidField {
                what: "terminate reason",
                detail: format!("code {other}"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Hello {
        version: u8,
        resume_token: Option<u64>,
    },
    Snapshot(ProbabilityVector),
    Delta {
        report: DeltaReport,
        /// Best fitness the worker has ever evaluated.
        best_fitness: f64,
    },
    /// The manager's full vector, packed. Decoded with the N and length
    /// from the connection's SNAPSHOT.
    Update {
        packed: Vec<u8>,
    },
    Terminate(TerminateReason),
}

impl Message {
    pub fn hello() -> Self {
        Message::Hello {
            version: VERSION,
            resume_token: None,
        }
    }

    pub fn update(v: &ProbabilityVector) -> Self {
        Message::Update {
            packed: encode_counts(v),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Message::Hello { .. } => "HELLO",
            Message::Snapshot(_) => "SNAPSHOT",
            Message::Delta { .. } => "DELTA",
            Message::Update { .. } => "UPDATE",
            Message::Terminate(_) => "TERMINATE",
        }
    }

    fn type_code(&self) -> u8 {
        match self {
            Message::Hello { .. } => HELLO,
            Message::Snapshot(_) => SNAPSHOT,
            Message::Delta { .. } => DELTA,
            Message::Update { .. } => UPDATE,
            Message::Terminate(_) => TERMINATE,
        }
    }

    fn encode_payload(&self) -> Result<Vec<u8>, FrameError> {
        let mut out = Vec::new();
        match self {
            Message::Hello {
                version,
                resume_token,
            } => {
                out.push(*version);
                match resume_token {
                    Some(token) => {
                        out.push(1);
                        out.extend_from_slice(&token.to_be_bytes());
                    }
                    None => out.push(0),
                }
            }
            Message::Snapshot(v) => {
                let length = u32::try_from(v.len()).map_err(|_| FrameError::InvalidField {
                    what: "snapshot length",
                    detail: format!("{} genes exceed u32", v.len()),
                })?;
                out.extend_from_slice(&v.population_size().to_be_bytes());
                out.extend_from_slice(&length.to_be_bytes());
                out.extend_from_slice(&encode_counts(v));
            }
            Message::Delta {
                report,
                best_fitness,
            } => {
                let entries = report.entries();
                out.reserve(20 + entries.len() * 8);
                out.extend_from_slice(&report.evaluations().to_be_bytes());
                out.extend_from_slice(&(entries.len() as u32).to_be_bytes());
                for &(gene, delta) in entries {
                    let g = u32::try_from(gene).map_err(|_| FrameError::InvalidField {
                        what: "gene index",
                        detail: format!("{gene} exceeds u32"),
                    })?;
                    let d = i32::try_from(delta)
                        .map_err(|_| FrameError::DeltaOverflow { gene, delta })?;
                    out.extend_from_slice(&g.to_be_bytes());
                    out.extend_from_slice(&d.to_be_bytes());
                }
                out.extend_from_slice(&best_fitness.to_be_bytes());
            }
            Message::Update { packed } => out.extend_from_slice(packed),
            Message::Terminate(reason) => out.push(reason.code()),
        }
        if out.len() > MAX_PAYLOAD as usize {
            return Err(FrameError::PayloadTooLarge(out.len() as u32));
        }
        Ok(out)
    }
}

/// Serializes a message with its envelope.
pub fn encode_frame(msg: &Message) -> Result<Vec<u8>, FrameError> {
    let payload = msg.encode_payload()?;
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(msg.type_code());
    out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    out.extend_from_slice(&payload);
    Ok(out)
}

struct Header {
    kind: u8,
    len: u32,
}

fn parse_header(bytes: &[u8; HEADER_LEN]) -> Result<Header, FrameError> {
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(FrameError::BadMagic(magic));
    }
    if bytes[4] != VERSION {
        return Err(FrameError::UnsupportedVersion(bytes[4]));
    }
    let kind = bytes[5];
    if !(HELLO..=TERMINATE).contains(&kind) {
        return Err(FrameError::UnknownType(kind));
    }
    let len = u32::from_be_bytes(bytes[6..10].try_into().unwrap());
    if len > MAX_PAYLOAD {
        return Err(FrameError::PayloadTooLarge(len));
    }
    Ok(Header { kind, len })
}

/// Cursor over a payload that reports truncation by field name.
struct Reader<'a> {
    buf: &'a [u8],
    what: &'static str,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FrameError> {
        if self.buf.len() < n {
            return Err(FrameError::Truncated {
                what: self.what,
                needed: n,
                available: self.buf.len(),
            });
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8, FrameError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, FrameError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, FrameError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn finish(self) -> Result<(), FrameError> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(FrameError::TrailingBytes(self.what, self.buf.len()))
        }
    }
}

fn decode_payload(kind: u8, payload: &[u8]) -> Result<Message, FrameError> {
    match kind {
        HELLO => {
            let mut r = Reader {
                buf: payload,
                what: "HELLO",
            };
            let version = r.u8()?;
            let resume_token = match r.u8()? {
                0 => None,
                1 => Some(r.u64()?),
                flag => {
                    return Err(FrameError::InvalidField {
                        what: "resume token flag",
                        detail: format!("{flag}"),
                    })
                }
            };
            r.finish()?;
            Ok(Message::Hello {
                version,
                resume_token,
            })
        }
        SNAPSHOT => {
            let mut r = Reader {
                buf: payload,
                what: "SNAPSHOT",
            };
            let n = r.u64()?;
            let length = r.u32()? as usize;
            if n == 0 || length == 0 {
                return Err(FrameError::InvalidField {
                    what: "snapshot shape",
                    detail: format!("N={n}, length={length}"),
                });
            }
            let packed = r.take(packed_len(n, length))?;
            r.finish()?;
            Ok(Message::Snapshot(decode_counts(packed, n, length)?))
        }
        DELTA => {
            let mut r = Reader {
                buf: payload,
                what: "DELTA",
            };
            let evaluations = r.u64()?;
            let count = r.u32()? as usize;
            let body = r.take(count.saturating_mul(8))?;
            let entries = body
                .chunks_exact(8)
                .map(|e| {
                    let gene = u32::from_be_bytes(e[0..4].try_into().unwrap()) as usize;
                    let delta = i32::from_be_bytes(e[4..8].try_into().unwrap()) as i64;
                    (gene, delta)
                })
                .collect();
            let best_fitness = f64::from_bits(r.u64()?);
            r.finish()?;
            Ok(Message::Delta {
                report: DeltaReport::new(entries, evaluations)?,
                best_fitness,
            })
        }
        UPDATE => Ok(Message::Update {
            packed: payload.to_vec(),
        }),
        TERMINATE => {
            let mut r = Reader {
                buf: payload,
                what: "TERMINATE",
            };
            let reason = TerminateReason::from_code(r.u8()?)?;
            r.finish()?;
            Ok(Message::Terminate(reason))
        }
        other => Err(FrameError::UnknownType(other)),
    }
}

/// Parses one frame from the front of `bytes`, returning the message and
/// the number of bytes consumed.
pub fn decode_frame(bytes: &[u8]) -> Result<(Message, usize), FrameError> {
    if bytes.len() < HEADER_LEN {
        return Err(FrameError::Truncated {
            what: "header",
            needed: HEADER_LEN,
            available: bytes.len(),
        });
    }
    let header = parse_header(bytes[..HEADER_LEN].try_into().unwrap())?;
    let end = HEADER_LEN + header.len as usize;
    if bytes.len() < end {
        return Err(FrameError::Truncated {
            what: "payload",
            needed: header.len as usize,
            available: bytes.len() - HEADER_LEN,
        });
    }
    let msg = decode_payload(header.kind, &bytes[HEADER_LEN..end])?;
    Ok((msg, end))
}

pub fn write_frame<W: Write>(w: &mut W, msg: &Message) -> Result<(), FrameError> {
    w.write_all(&encode_frame(msg)?)?;
    w.flush()?;
    Ok(())
}

/// Reads exactly one frame from a byte stream.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Message, FrameError> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    let header_info = parse_header(&header)?;
    let mut payload = vec![0u8; header_info.len as usize];
    r.read_exact(&mut payload).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => FrameError::Truncated {
            what: "payload",
            needed: header_info.len as usize,
            available: 0,
        },
        _ => FrameError::Io(e),
    })?;
    decode_payload(header_info.kind, &payload)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(msg: Message) {
        let bytes = encode_frame(&msg).unwrap();
        let (back, used) = decode_frame(&bytes).unwrap();
        assert_eq!(used, bytes.len());
        assert_eq!(back, msg);
        assert_eq!(read_frame(&mut bytes.as_slice()).unwrap(), msg);
    }

    #[test]
    fn every_kind_roundtrips() {
        roundtrip(Message::hello());
        roundtrip(Message::Hello {
            version: 1,
            resume_token: Some(0xDEAD_BEEF),
        });
        let v = ProbabilityVector::from_counts(vec![5, 0, 10, 3, 7], 10).unwrap();
        roundtrip(Message::Snapshot(v.clone()));
        roundtrip(Message::update(&v));
        roundtrip(Message::Delta {
            report: DeltaReport::new(vec![(0, 3), (4, -2)], 80).unwrap(),
            best_fitness: 9.35,
        });
        roundtrip(Message::Terminate(TerminateReason::Converged));
    }

    #[test]
    fn snapshot_golden_bytes() {
        let v = ProbabilityVector::from_counts(vec![5; 5], 10).unwrap();
        let bytes = encode_frame(&Message::Snapshot(v)).unwrap();
        let want: Vec<u8> = [
            &b"PCGA"[..],
            &[1, 2],
            &[0, 0, 0, 15],
            &[0, 0, 0, 0, 0, 0, 0, 10],
            &[0, 0, 0, 5],
            &[0x55, 0x55, 0x50],
        ]
        .concat();
        assert_eq!(bytes, want);
    }

    #[test]
    fn delta_golden_bytes() {
        let msg = Message::Delta {
            report: DeltaReport::new(vec![(1, -1)], 8).unwrap(),
            best_fitness: 1.0,
        };
        let want: Vec<u8> = [
            &b"PCGA"[..],
            &[1, 3],
            &[0, 0, 0, 28],
            &[0, 0, 0, 0, 0, 0, 0, 8],
            &[0, 0, 0, 1],
            &[0, 0, 0, 1, 0xFF, 0xFF, 0xFF, 0xFF],
            &[0x3F, 0xF0, 0, 0, 0, 0, 0, 0],
        ]
        .concat();
        assert_eq!(encode_frame(&msg).unwrap(), want);
    }

    #[test]
    fn terminate_and_hello_golden_bytes() {
        assert_eq!(
            encode_frame(&Message::Terminate(TerminateReason::Solved)).unwrap(),
            b"PCGA\x01\x05\x00\x00\x00\x01\x01"
        );
        assert_eq!(
            encode_frame(&Message::hello()).unwrap(),
            b"PCGA\x01\x01\x00\x00\x00\x02\x01\x00"
        );
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode_frame(&Message::hello()).unwrap();
        bytes[0] = b'X';
        assert!(matches!(decode_frame(&bytes), Err(FrameError::BadMagic(m)) if &m == b"XCGA"));
    }

    #[test]
    fn bad_version_and_type() {
        let mut bytes = encode_frame(&Message::hello()).unwrap();
        bytes[4] = 2;
        assert!(matches!(
            decode_frame(&bytes),
            Err(FrameError::UnsupportedVersion(2))
        ));
        let mut bytes = encode_frame(&Message::hello()).unwrap();
        bytes[5] = 9;
        assert!(matches!(
            decode_frame(&bytes),
            Err(FrameError::UnknownType(9))
        ));
    }

    #[test]
    fn delta_with_missing_entry_is_truncated() {
        let msg = Message::Delta {
            report: DeltaReport::new(vec![(0, 1)], 8).unwrap(),
            best_fitness: 0.0,
        };
        let mut bytes = encode_frame(&msg).unwrap();
        // claim two entries while carrying one
        bytes[HEADER_LEN + 11] = 2;
        match decode_frame(&bytes) {
            Err(FrameError::Truncated { what: "DELTA", .. }) => {}
            other => panic!("expected truncation, got {other:?}"),
        }
    }

    #[test]
    fn short_stream_is_truncated() {
        let bytes = encode_frame(&Message::hello()).unwrap();
        assert!(matches!(
            decode_frame(&bytes[..5]),
            Err(FrameError::Truncated { what: "header", .. })
        ));
        assert!(matches!(
            decode_frame(&bytes[..bytes.len() - 1]),
            Err(FrameError::Truncated {
                what: "payload",
                ..
            })
        ));
        assert!(matches!(
            read_frame(&mut &bytes[..bytes.len() - 1]),
            Err(FrameError::Truncated { .. })
        ));
    }

    #[test]
    fn oversized_delta_is_rejected_on_encode() {
        let msg = Message::Delta {
            report: DeltaReport::new(vec![(0, 1 << 40)], 8).unwrap(),
            best_fitness: 0.0,
        };
        assert!(matches!(
            encode_frame(&msg),
            Err(FrameError::DeltaOverflow { .. })
        ));
    }

    #[test]
    fn snapshot_with_out_of_range_count() {
        let v = ProbabilityVector::from_counts(vec![5; 5], 10).unwrap();
        let mut bytes = encode_frame(&Message::Snapshot(v)).unwrap();
        bytes[HEADER_LEN + 12] = 0xB5;
        assert!(matches!(
            decode_frame(&bytes),
            Err(FrameError::Codec(CodecError::CountOutOfRange {
                count: 11,
                ..
            }))
        ));
    }
}
