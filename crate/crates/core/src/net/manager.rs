use std::io::{self, BufReader, BufWriter};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use super::checkpoint::{read_checkpoint, write_checkpoint};
use super::NetError;
use crate::cga::{init_vector, CgaParams, ProbabilityVector};
use crate::protocol::{
    encode_frame, merge_delta, read_frame, FrameError, Message, TerminateReason,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManagerStatus {
    Running,
    Solved,
    Converged,
    ShuttingDown,
}

impl ManagerStatus {
    pub fn is_terminal(self) -> bool {
        self != ManagerStatus::Running
    }

    fn reason(self) -> Option<TerminateReason> {
        match self {
            ManagerStatus::Running => None,
            ManagerStatus::Solved => Some(TerminateReason::Solved),
            ManagerStatus::Converged => Some(TerminateReason::Converged),
            ManagerStatus::ShuttingDown => Some(TerminateReason::Shutdown),
        }
    }
}

/// When the manager stops the run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TerminationPolicy {
    /// A worker reporting this fitness solves the problem.
    pub known_optimum: Option<f64>,
    /// Shut down once reported evaluations reach this many.
    pub max_total_evaluations: Option<u64>,
}

/// The authoritative model and its bookkeeping. Pure message handling,
/// independent of any transport.
#[derive(Debug, Clone)]
pub struct ManagerState {
    pub vector: ProbabilityVector,
    pub merges_applied: u64,
    pub clamp_events: u64,
    pub best_fitness_reported: f64,
    pub total_evaluations: u64,
    status: ManagerStatus,
    policy: TerminationPolicy,
}

impl ManagerState {
    pub fn new(vector: ProbabilityVector, policy: TerminationPolicy) -> Self {
        Self {
            vector,
            merges_applied: 0,
            clamp_events: 0,
            best_fitness_reported: f64::NEG_INFINITY,
            total_evaluations: 0,
            status: ManagerStatus::Running,
            policy,
        }
    }

    pub fn status(&self) -> ManagerStatus {
        self.status
    }

    /// Moves to a terminal status. Later calls keep the first terminal status.
    pub fn finish(&mut self, status: ManagerStatus) {
        if !self.status.is_terminal() {
            self.status = status;
            log::info!("event=terminate reason={status:?}");
        }
    }

    /// Answers one worker message. Errors mean the peer broke the protocol
    /// and its connection should be dropped; the state is left untouched.
    pub fn handle(&mut self, msg: Message) -> Result<Message, NetError> {
        match msg {
            Message::Hello { .. } => Ok(match self.status.reason() {
                Some(reason) => Message::Terminate(reason),
                None => Message::Snapshot(self.vector.clone()),
            }),
            Message::Delta {
                report,
                best_fitness,
            } => {
                if let Some(reason) = self.status.reason() {
                    return Ok(Message::Terminate(reason));
                }
                let outcome = merge_delta(&mut self.vector, &report)?;
                self.merges_applied += 1;
                self.clamp_events += outcome.clamped as u64;
                self.total_evaluations += report.evaluations();
                if best_fitness > self.best_fitness_reported {
                    self.best_fitness_reported = best_fitness;
                }
                log::info!(
                    "event=merge entries={} evaluations={} total_evaluations={} merges={}",
                    report.entries().len(),
                    report.evaluations(),
                    self.total_evaluations,
                    self.merges_applied
                );
                if outcome.clamped > 0 {
                    log::info!("event=clamp genes={}", outcome.clamped);
                }

                if self
                    .policy
                    .known_optimum
                    .is_some_and(|opt| self.best_fitness_reported >= opt)
                {
                    self.finish(ManagerStatus::Solved);
                } else if self.vector.is_converged() {
                    self.finish(ManagerStatus::Converged);
                } else if self
                    .policy
                    .max_total_evaluations
                    .is_some_and(|cap| self.total_evaluations >= cap)
                {
                    self.finish(ManagerStatus::ShuttingDown);
                }
                Ok(match self.status.reason() {
                    Some(reason) => Message::Terminate(reason),
                    None => Message::update(&self.vector),
                })
            }
            other => Err(NetError::Protocol(format!(
                "manager does not accept {}",
                other.kind()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointPolicy {
    pub path: PathBuf,
    pub every: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManagerConfig {
    pub params: CgaParams,
    pub length: usize,
    pub policy: TerminationPolicy,
    /// Periodic vector checkpoint; restored at startup when the file exists.
    pub checkpoint: Option<CheckpointPolicy>,
    /// How long to keep answering TERMINATE after the run ends.
    pub linger: Duration,
}

impl ManagerConfig {
    pub fn new(params: CgaParams, length: usize, policy: TerminationPolicy) -> Self {
        Self {
            params,
            length,
            policy,
            checkpoint: None,
            linger: Duration::from_millis(500),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ManagerReport {
    pub status: ManagerStatus,
    pub vector: ProbabilityVector,
    pub merges_applied: u64,
    pub clamp_events: u64,
    pub total_evaluations: u64,
    pub best_fitness_reported: f64,
    pub connections: u64,
}

type Shared = Arc<Mutex<ManagerState>>;

fn lock(state: &Shared) -> MutexGuard<'_, ManagerState> {
    // a panicking connection thread cannot leave a half-merged vector:
    // merge_delta validates before it mutates
    state.lock().unwrap_or_else(|e| e.into_inner())
}

/// Cloneable control surface for a running manager.
#[derive(Debug, Clone)]
pub struct ManagerHandle {
    state: Shared,
    addr: SocketAddr,
}

impl ManagerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn status(&self) -> ManagerStatus {
        lock(&self.state).status()
    }

    pub fn vector(&self) -> ProbabilityVector {
        lock(&self.state).vector.clone()
    }

    pub fn merges_applied(&self) -> u64 {
        lock(&self.state).merges_applied
    }

    /// Ends the run; connected workers get TERMINATE(shutdown).
    pub fn shutdown(&self) {
        lock(&self.state).finish(ManagerStatus::ShuttingDown);
    }
}

pub struct Manager {
    listener: TcpListener,
    state: Shared,
    config: ManagerConfig,
    addr: SocketAddr,
}

impl Manager {
    pub fn bind<A: ToSocketAddrs>(addr: A, config: ManagerConfig) -> Result<Self, NetError> {
        let fresh = init_vector(&config.params, config.length)
            .map_err(|e| NetError::Protocol(e.to_string()))?;
        let vector = match &config.checkpoint {
            Some(ck) if ck.path.exists() => {
                let restored = read_checkpoint(&ck.path)?;
                if restored.len() != fresh.len()
                    || restored.population_size() != fresh.population_size()
                {
                    return Err(NetError::Checkpoint(format!(
                        "{} holds N={}, length {}; expected N={}, length {}",
                        ck.path.display(),
                        restored.population_size(),
                        restored.len(),
                        fresh.population_size(),
                        fresh.len()
                    )));
                }
                log::info!("event=restore path={}", ck.path.display());
                restored
            }
            _ => fresh,
        };
        let listener = TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        log::info!("event=listen addr={addr}");
        Ok(Self {
            listener,
            state: Arc::new(Mutex::new(ManagerState::new(vector, config.policy))),
            config,
            addr,
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn handle(&self) -> ManagerHandle {
        ManagerHandle {
            state: Arc::clone(&self.state),
            addr: self.addr,
        }
    }

    /// Serves workers until the run reaches a terminal status, keeps
    /// answering TERMINATE for the linger period, then closes every
    /// connection and returns. With no workers it waits indefinitely.
    pub fn serve(self) -> Result<ManagerReport, NetError> {
        let stop = Arc::new(AtomicBool::new(false));
        let mut connections: Vec<(TcpStream, JoinHandle<()>)> = Vec::new();
        let mut accepted = 0u64;
        let mut terminal_since: Option<Instant> = None;
        let mut last_checkpoint = Instant::now();

        loop {
            match self.listener.accept() {
                Ok((stream, peer)) => {
                    accepted += 1;
                    log::info!("event=connect peer={peer}");
                    stream.set_nonblocking(false)?;
                    stream.set_nodelay(true)?;
                    let control = stream.try_clone()?;
                    let state = Arc::clone(&self.state);
                    let stop = Arc::clone(&stop);
                    let worker = thread::spawn(move || serve_connection(stream, peer, state, stop));
                    connections.push((control, worker));
                    continue;
                }
                Err(e) if e.kind() == io::ErrorKind::WouldBlock => {}
                Err(e) => log::warn!("event=accept-error error={e}"),
            }

            connections.retain(|(_, worker)| !worker.is_finished());

            if let Some(ck) = &self.config.checkpoint {
                if last_checkpoint.elapsed() >= ck.every {
                    let v = lock(&self.state).vector.clone();
                    if let Err(e) = write_checkpoint(&ck.path, &v) {
                        log::warn!("event=checkpoint-error error={e}");
                    }
                    last_checkpoint = Instant::now();
                }
            }

            if lock(&self.state).status().is_terminal() {
                let since = *terminal_since.get_or_insert_with(Instant::now);
                if since.elapsed() >= self.config.linger {
                    break;
                }
            }
            thread::sleep(Duration::from_millis(2));
        }

        stop.store(true, Ordering::SeqCst);
        for (control, worker) in connections {
            let _ = control.shutdown(Shutdown::Both);
            let _ = worker.join();
        }
        let state = lock(&self.state).clone();
        if let Some(ck) = &self.config.checkpoint {
            write_checkpoint(&ck.path, &state.vector)?;
        }
        Ok(ManagerReport {
            status: state.status(),
            vector: state.vector,
            merges_applied: state.merges_applied,
            clamp_events: state.clamp_events,
            total_evaluations: state.total_evaluations,
            best_fitness_reported: state.best_fitness_reported,
            connections: accepted,
        })
    }
}

fn serve_connection(stream: TcpStream, peer: SocketAddr, state: Shared, stop: Arc<AtomicBool>) {
    let mut reader = BufReader::new(&stream);
    let mut writer = BufWriter::new(&stream);
    let mut greeted = false;
    loop {
        let msg = match read_frame(&mut reader) {
            Ok(msg) => msg,
            Err(FrameError::Io(e)) => {
                if !stop.load(Ordering::SeqCst) {
                    log::info!("event=disconnect peer={peer} cause={e}");
                }
                return;
            }
            Err(e) => {
                log::warn!("event=malformed peer={peer} error={e}");
                return;
            }
        };
        if !greeted && !matches!(msg, Message::Hello { .. }) {
            log::warn!(
                "event=malformed peer={peer} error=\"{} before HELLO\"",
                msg.kind()
            );
            return;
        }
        greeted = true;
        // merge and encode under one lock; I/O happens after release
        let reply = {
            let mut st = lock(&state);
            st.handle(msg).and_then(|reply| Ok(encode_frame(&reply)?))
        };
        let bytes = match reply {
            Ok(bytes) => bytes,
            Err(e) => {
                log::warn!("event=malformed peer={peer} error={e}");
                return;
            }
        };
        if let Err(e) =
            io::Write::write_all(&mut writer, &bytes).and_then(|_| io::Write::flush(&mut writer))
        {
            log::info!("event=disconnect peer={peer} cause={e}");
            return;
        }
    }
}

/// Binds and serves until the run ends.
pub fn manager_serve<A: ToSocketAddrs>(
    addr: A,
    params: CgaParams,
    length: usize,
    policy: TerminationPolicy,
) -> Result<ManagerReport, NetError> {
    Manager::bind(addr, ManagerConfig::new(params, length, policy))?.serve()
}
