//! TCP front-end for the orchestrator.
//!
//! One reader and one writer thread per connection; all session state lives
//! in a single event-loop thread that owns the [`Orchestrator`]. A
//! connection's member id is the `sender_id` of its first HELLO.

use std::collections::BTreeMap;
use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use super::{Event, Orchestrator, OrchestratorConfig, RelayStats};
use crate::wire::{encode_message, FrameDecoder, MsgType, WireMessage};

const TICK: Duration = Duration::from_millis(50);

pub fn wall_clock_us() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_micros() as u64)
        .unwrap_or(0)
}

enum Inbound {
    Opened(u64, Sender<Vec<u8>>),
    Message(u64, WireMessage),
    Closed(u64),
}

/// Final state handed back by [`ServerHandle::stop`].
#[derive(Debug, Default)]
pub struct ServerReport {
    pub events: Vec<Event>,
    pub relay_stats: BTreeMap<(u32, u32), RelayStats>,
}

pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    core: Option<JoinHandle<ServerReport>>,
    acceptor: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn stop(mut self) -> ServerReport {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(a) = self.acceptor.take() {
            let _ = a.join();
        }
        self.core
            .take()
            .and_then(|c| c.join().ok())
            .unwrap_or_default()
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
    }
}

/// Binds `addr` and serves until stopped. Each orchestrator event is written
/// to `log` as one JSON object per line.
pub fn spawn(
    addr: SocketAddr,
    config: OrchestratorConfig,
    log: Box<dyn Write + Send>,
) -> io::Result<ServerHandle> {
    let listener = TcpListener::bind(addr)?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let (tx, rx) = mpsc::channel();

    let acceptor = {
        let stop = stop.clone();
        thread::spawn(move || accept_loop(listener, tx, stop))
    };
    let core = {
        let stop = stop.clone();
        thread::spawn(move || core_loop(Orchestrator::new(config), rx, stop, log))
    };
    Ok(ServerHandle {
        addr,
        stop,
        core: Some(core),
        acceptor: Some(acceptor),
    })
}

fn accept_loop(listener: TcpListener, tx: Sender<Inbound>, stop: Arc<AtomicBool>) {
    let mut next_conn = 0u64;
    while !stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, _)) => {
                let id = next_conn;
                next_conn += 1;
                if let Err(e) = start_connection(id, stream, tx.clone(), stop.clone()) {
                    eprintln!("connection {id} setup failed: {e}");
                }
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                thread::sleep(Duration::from_millis(10))
            }
            Err(e) => {
                eprintln!("accept failed: {e}");
                thread::sleep(Duration::from_millis(10));
            }
        }
    }
}

fn start_connection(
    id: u64,
    stream: TcpStream,
    tx: Sender<Inbound>,
    stop: Arc<AtomicBool>,
) -> io::Result<()> {
    stream.set_nonblocking(false)?;
    stream.set_nodelay(true)?;
    stream.set_read_timeout(Some(TICK))?;
    let mut writer = stream.try_clone()?;
    let (out_tx, out_rx) = mpsc::channel::<Vec<u8>>();
    tx.send(Inbound::Opened(id, out_tx)).ok();

    thread::spawn(move || {
        for bytes in out_rx {
            if writer.write_all(&bytes).is_err() {
                break;
            }
        }
        let _ = writer.shutdown(std::net::Shutdown::Write);
    });

    thread::spawn(move || {
        let mut reader = stream;
        let mut decoder = FrameDecoder::new();
        let mut buf = vec![0u8; 64 * 1024];
        'read: while !stop.load(Ordering::SeqCst) {
            match reader.read(&mut buf) {
                Ok(0) => break,
                Ok(n) => {
                    decoder.push(&buf[..n]);
                    loop {
                        match decoder.next_message() {
                            Ok(Some(msg)) => {
                                if tx.send(Inbound::Message(id, msg)).is_err() {
                                    break 'read;
                                }
                            }
                            Ok(None) => break,
                            Err(_) => decoder.resync(),
                        }
                    }
                }
                Err(e)
                    if matches!(
                        e.kind(),
                        io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut
                    ) => {}
                Err(_) => break,
            }
        }
        tx.send(Inbound::Closed(id)).ok();
    });
    Ok(())
}

fn core_loop(
    mut orch: Orchestrator,
    rx: Receiver<Inbound>,
    stop: Arc<AtomicBool>,
    mut log: Box<dyn Write + Send>,
) -> ServerReport {
    let mut writers: BTreeMap<u64, Sender<Vec<u8>>> = BTreeMap::new();
    let mut member_of: BTreeMap<u64, u32> = BTreeMap::new();
    let mut conn_of: BTreeMap<u32, u64> = BTreeMap::new();
    let mut all_events = Vec::new();
    let mut last_tick = wall_clock_us();

    let deliver = |orch: &mut Orchestrator,
                   writers: &BTreeMap<u64, Sender<Vec<u8>>>,
                   conn_of: &BTreeMap<u32, u64>,
                   out: Vec<super::Outbound>| {
        for o in out {
            let sent = conn_of
                .get(&o.to)
                .and_then(|c| writers.get(c))
                .and_then(|w| encode_message(&o.msg).ok().map(|b| w.send(b).is_ok()))
                .unwrap_or(false);
            if !sent && o.msg.msg_type.is_media() {
                orch.record_drop(o.msg.session_id, o.msg.sender_id);
            }
        }
    };

    while !stop.load(Ordering::SeqCst) {
        let now = wall_clock_us();
        match rx.recv_timeout(TICK) {
            Ok(Inbound::Opened(id, w)) => {
                writers.insert(id, w);
            }
            Ok(Inbound::Message(id, msg)) => {
                if msg.msg_type == MsgType::Hello && !member_of.contains_key(&id) {
                    member_of.insert(id, msg.sender_id);
                    conn_of.insert(msg.sender_id, id);
                }
                if let Some(&member) = member_of.get(&id) {
                    let out = orch.handle(member, &msg, now);
                    deliver(&mut orch, &writers, &conn_of, out);
                }
            }
            Ok(Inbound::Closed(id)) => {
                writers.remove(&id);
                if let Some(member) = member_of.remove(&id) {
                    conn_of.remove(&member);
                    for session in orch.sessions_of(member) {
                        if let Ok(out) = orch.leave(session, member, now) {
                            deliver(&mut orch, &writers, &conn_of, out);
                        }
                    }
                }
            }
            Err(RecvTimeoutError::Timeout) => {}
            Err(RecvTimeoutError::Disconnected) => break,
        }
        if now.saturating_sub(last_tick) >= 1_000_000 {
            last_tick = now;
            let (_, out) = orch.heartbeat_tick(now);
            deliver(&mut orch, &writers, &conn_of, out);
        }
        for e in orch.take_events() {
            if let Ok(line) = serde_json::to_string(&e) {
                let _ = writeln!(log, "{line}");
            }
            all_events.push(e);
        }
    }
    let _ = log.flush();
    ServerReport {
        events: all_events,
        relay_stats: orch.relay_stats().clone(),
    }
}
