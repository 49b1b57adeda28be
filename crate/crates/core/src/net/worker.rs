use std::io::{BufReader, BufWriter};
use std::net::TcpStream;
use std::thread;
use std::time::Duration;

use super::NetError;
use crate::benchmarks::{Benchmark, FitnessFunction};
use crate::cga::{derive_rng, CgaRng, Iteration, ProbabilityVector, Tournament};
use crate::protocol::{
    compute_delta, decode_counts, read_frame, write_frame, FrameError, Message, TerminateReason,
};

/// Exponential reconnect backoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub initial: Duration,
    pub max_delay: Duration,
    /// Consecutive failed connection attempts before giving up.
    pub max_attempts: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            initial: Duration::from_millis(50),
            max_delay: Duration::from_secs(5),
            max_attempts: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkerConfig {
    pub manager: String,
    /// Evaluations `m` between transactions.
    pub sync_interval: u64,
    pub selection_rate: usize,
    pub benchmark: Benchmark,
    pub seed: u64,
    /// Stream index under `seed`; stream 0 matches simulated worker 0.
    pub stream: u64,
    pub retry: RetryPolicy,
}

impl WorkerConfig {
    pub fn new(
        manager: impl Into<String>,
        sync_interval: u64,
        benchmark: Benchmark,
        seed: u64,
    ) -> Self {
        Self {
            manager: manager.into(),
            sync_interval,
            selection_rate: 8,
            benchmark,
            seed,
            stream: 0,
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkerReport {
    /// Evaluations performed, including work lost to disconnects.
    pub evaluations: u64,
    pub transactions: u64,
    /// Sessions opened after the first.
    pub reconnects: u32,
    pub best_fitness: f64,
    pub terminated_by: TerminateReason,
    /// Last vector received from the manager.
    pub last_vector: Option<ProbabilityVector>,
}

struct Session {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
}

impl Session {
    fn exchange(&mut self, msg: &Message) -> Result<Message, NetError> {
        write_frame(&mut self.writer, msg)?;
        Ok(read_frame(&mut self.reader)?)
    }
}

fn connect(config: &WorkerConfig) -> Result<Session, NetError> {
    let mut delay = config.retry.initial;
    let mut attempt = 0;
    loop {
        attempt += 1;
        match TcpStream::connect(&config.manager) {
            Ok(stream) => {
                stream.set_nodelay(true)?;
                let reader = BufReader::new(stream.try_clone()?);
                return Ok(Session {
                    reader,
                    writer: BufWriter::new(stream),
                });
            }
            Err(e) if attempt >= config.retry.max_attempts => {
                return Err(NetError::RetriesExhausted {
                    attempts: attempt,
                    last: e,
                })
            }
            Err(e) => {
                log::info!(
                    "event=connect-retry attempt={attempt} delay_ms={} error={e}",
                    delay.as_millis()
                );
                thread::sleep(delay);
                delay = (delay * 2).min(config.retry.max_delay);
            }
        }
    }
}

/// How a session ended.
enum SessionEnd {
    Terminated(TerminateReason),
    Lost(NetError),
}

struct WorkerLoop<'a> {
    config: &'a WorkerConfig,
    rng: CgaRng,
    tournament: Tournament,
    evaluations: u64,
    transactions: u64,
    best: f64,
    last_vector: Option<ProbabilityVector>,
}

impl WorkerLoop<'_> {
    fn session(&mut self, session: &mut Session) -> SessionEnd {
        match self.try_session(session) {
            Ok(reason) => SessionEnd::Terminated(reason),
            Err(e) => SessionEnd::Lost(e),
        }
    }

    fn try_session(&mut self, session: &mut Session) -> Result<TerminateReason, NetError> {
        let mut snapshot = match session.exchange(&Message::hello())? {
            Message::Snapshot(v) => v,
            Message::Terminate(reason) => return Ok(reason),
            other => {
                return Err(NetError::Protocol(format!(
                    "expected SNAPSHOT, got {}",
                    other.kind()
                )))
            }
        };
        let length = self.config.benchmark.length();
        if snapshot.len() != length {
            return Err(NetError::Protocol(format!(
                "manager vector has {} genes, benchmark {} needs {length}",
                snapshot.len(),
                self.config.benchmark
            )));
        }
        let n = snapshot.population_size();
        self.last_vector = Some(snapshot.clone());
        let mut local = snapshot.clone();
        let mut since_sync = 0u64;
        let target = self.config.benchmark.known_optimum();
        let s = self.config.selection_rate;

        loop {
            let outcome = self.tournament.run_until(
                &mut local,
                s,
                &self.config.benchmark,
                &mut self.rng,
                target,
                usize::MAX,
            );
            let used = outcome.evaluations(s) as u64;
            self.evaluations += used;
            since_sync += used;
            if let Some(f) = outcome.best().fitness {
                self.best = self.best.max(f);
            }
            let reached = matches!(outcome, Iteration::TargetReached { .. });
            if !(reached || since_sync >= self.config.sync_interval) {
                continue;
            }
            // report completed work; reaching the optimum reports at once
            let report = compute_delta(&snapshot, &local, since_sync)?;
            let reply = session.exchange(&Message::Delta {
                report,
                best_fitness: self.best,
            })?;
            self.transactions += 1;
            match reply {
                Message::Update { packed } => {
                    snapshot = decode_counts(&packed, n, length)?;
                    local.clone_from(&snapshot);
                    self.last_vector = Some(snapshot.clone());
                    since_sync = 0;
                }
                Message::Terminate(reason) => return Ok(reason),
                other => {
                    return Err(NetError::Protocol(format!(
                        "expected UPDATE, got {}",
                        other.kind()
                    )))
                }
            }
        }
    }
}

/// Runs a worker until the manager sends TERMINATE. Lost connections are
/// retried with a fresh HELLO; unsent progress is dropped. Fails once the
/// retry budget is exhausted.
pub fn worker_run(config: &WorkerConfig) -> Result<WorkerReport, NetError> {
    let mut state = WorkerLoop {
        config,
        rng: derive_rng(config.seed, config.stream),
        tournament: Tournament::new(),
        evaluations: 0,
        transactions: 0,
        best: f64::NEG_INFINITY,
        last_vector: None,
    };
    let mut sessions = 0u32;
    loop {
        let mut session = connect(config)?;
        sessions += 1;
        match state.session(&mut session) {
            SessionEnd::Terminated(reason) => {
                log::info!(
                    "event=terminate reason={reason:?} evaluations={} transactions={}",
                    state.evaluations,
                    state.transactions
                );
                return Ok(WorkerReport {
                    evaluations: state.evaluations,
                    transactions: state.transactions,
                    reconnects: sessions - 1,
                    best_fitness: state.best,
                    terminated_by: reason,
                    last_vector: state.last_vector,
                });
            }
            SessionEnd::Lost(NetError::Frame(FrameError::Io(e)))
            | SessionEnd::Lost(NetError::Io(e)) => {
                log::info!("event=disconnect cause={e}; rejoining");
                thread::sleep(config.retry.initial);
            }
            SessionEnd::Lost(e) => return Err(e),
        }
    }
}
