//! Networked deployment: one manager holding the authoritative vector and
//! any number of workers that come and go, talking the [`crate::protocol`]
//! frame format over TCP.
//!
//! Every transaction is short. The manager locks its vector only to merge
//! one delta and encode the reply; all socket I/O happens outside the lock.
//! Log lines carry an `event=` key (`connect`, `merge`, `clamp`,
//! `terminate`, `disconnect`) for scraping.

mod checkpoint;
mod manager;
mod worker;

use std::io;

use thiserror::Error;

use crate::protocol::{CodecError, DeltaError, FrameError};

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use manager::{
    manager_serve, CheckpointPolicy, Manager, ManagerConfig, ManagerHandle, ManagerReport,
    ManagerState, ManagerStatus, TerminationPolicy,
};
pub use worker::{worker_run, RetryPolicy, WorkerConfig, WorkerReport};

#[derive(Debug, Error)]
pub enum NetError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("frame: {0}")]
    Frame(#[from] FrameError),
    #[error("counts: {0}")]
    Codec(#[from] CodecError),
    #[error("delta: {0}")]
    Delta(#[from] DeltaError),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("gave up after {attempts} connection attempts: {last}")]
    RetriesExhausted { attempts: u32, last: io::Error },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
