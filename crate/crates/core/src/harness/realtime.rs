//! Wall-clock scenario execution over TCP.
//!
//! Each participant is a thread with its own socket; the orchestrator is
//! either started in-process or reached at the configured endpoint. Links
//! are the real loopback or network path, so the link model is not applied.
//! Clients share the session id out of band (the leader creates it), which
//! stands in for an invitation link.

use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::thread;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{member_id, ClientRecord, HarnessError, RelayRow, RunLog, ScenarioConfig};
use crate::client::{Participant, ParticipantConfig};
use crate::orchestrator::server::{self, wall_clock_us};
use crate::orchestrator::OrchestratorConfig;
use crate::wire::{encode_message, FrameDecoder, MsgType, WireMessage};

const JOIN_TIMEOUT: Duration = Duration::from_secs(10);
const SETUP_US: u64 = 1_500_000;
const DRAIN_US: u64 = 1_000_000;

pub fn run_realtime(cfg: &ScenarioConfig) -> Result<RunLog, HarnessError> {
    let (addr, server) = match &cfg.orchestrator {
        Some(ep) => {
            let addr = ep
                .to_socket_addrs()
                .map_err(|e| HarnessError::Config(format!("bad orchestrator endpoint {ep}: {e}")))?
                .next()
                .ok_or_else(|| HarnessError::Config(format!("endpoint {ep} did not resolve")))?;
            (addr, None)
        }
        None => {
            let oc = OrchestratorConfig {
                heartbeat_timeout_ms: cfg.heartbeat_timeout_ms,
                ..OrchestratorConfig::default()
            };
            let h = server::spawn("127.0.0.1:0".parse().unwrap(), oc, Box::new(io::sink()))?;
            (h.local_addr(), Some(h))
        }
    };

    let n = cfg.total_clients();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let offsets = cfg.clock_offsets(&mut rng);
    let period = (1e6 / cfg.fps) as u64;
    let phases: Vec<u64> = (0..n).map(|_| rng.gen_range(0..period.max(1))).collect();
    let media_start = wall_clock_us() + SETUP_US;
    let media_end = media_start + (cfg.duration_s * 1e6).round() as u64;

    // Session id fan-out from each group leader to its members.
    let mut invites: Vec<Option<Receiver<u32>>> = Vec::new();
    let mut leaders: Vec<Vec<Sender<u32>>> = vec![Vec::new(); cfg.sessions];
    for i in 0..n {
        let (tx, rx) = mpsc::channel();
        leaders[i / cfg.participants].push(tx);
        invites.push(Some(rx));
    }

    let mut handles = Vec::new();
    for i in 0..n {
        let mut pc = ParticipantConfig::new(member_id(i), cfg.client_scene(i));
        pc.codec = cfg.codec;
        pc.fps = cfg.fps;
        pc.clock_offset_us = offsets[i];
        pc.frame_loop = cfg.frame_loop;
        let spec = ClientSpec {
            index: i,
            pc,
            addr,
            leader_of: if i % cfg.participants == 0 {
                Some(std::mem::take(&mut leaders[i / cfg.participants]))
            } else {
                None
            },
            max_members: cfg.participants as u8,
            invite: invites[i].take().unwrap(),
            first_capture: media_start + phases[i],
            media_end,
            audio_bytes: (cfg.audio_bps as f64 * 0.02 / 8.0) as usize,
        };
        handles.push(thread::spawn(move || run_client(spec)));
    }

    let mut clients = Vec::with_capacity(n);
    let mut failures = Vec::new();
    for (i, h) in handles.into_iter().enumerate() {
        match h.join() {
            Ok(Ok(mut rec)) => {
                rec.group = i / cfg.participants;
                clients.push(rec);
            }
            Ok(Err(e)) => failures.push(format!("client {}: {e}", member_id(i))),
            Err(_) => failures.push(format!("client {} panicked", member_id(i))),
        }
    }
    let report = server.map(|s| s.stop()).unwrap_or_default();
    if !failures.is_empty() {
        return Err(HarnessError::Scenario(failures.join("; ")));
    }

    Ok(RunLog {
        uplink_deliveries: clients.iter().map(|c| c.media_sends.clone()).collect(),
        clients,
        relay_stats: report
            .relay_stats
            .iter()
            .map(|(&(session, sender), &stats)| RelayRow {
                session,
                sender,
                stats,
            })
            .collect(),
        events: report.events,
        media_start_us: media_start,
        media_end_us: media_end,
        ..RunLog::default()
    })
}

struct ClientSpec {
    index: usize,
    pc: ParticipantConfig,
    addr: SocketAddr,
    leader_of: Option<Vec<Sender<u32>>>,
    max_members: u8,
    invite: Receiver<u32>,
    first_capture: u64,
    media_end: u64,
    audio_bytes: usize,
}

struct Conn {
    out: TcpStream,
    rx: Receiver<(WireMessage, u64)>,
    sent_media: Vec<(u64, u64)>,
}

impl Conn {
    fn open(addr: SocketAddr) -> io::Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        let mut reader = stream.try_clone()?;
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut dec = FrameDecoder::new();
            let mut buf = vec![0u8; 64 * 1024];
            loop {
                match reader.read(&mut buf) {
                    Ok(0) | Err(_) => break,
                    Ok(n) => {
                        let now = wall_clock_us();
                        dec.push(&buf[..n]);
                        loop {
                            match dec.next_message() {
                                Ok(Some(m)) => {
                                    if tx.send((m, now)).is_err() {
                                        return;
                                    }
                                }
                                Ok(None) => break,
                                Err(_) => dec.resync(),
                            }
                        }
                    }
                }
            }
        });
        Ok(Self {
            out: stream,
            rx,
            sent_media: Vec::new(),
        })
    }

    fn send(&mut self, m: &WireMessage) -> Result<(), String> {
        let bytes = encode_message(m).map_err(|e| e.to_string())?;
        self.out.write_all(&bytes).map_err(|e| e.to_string())?;
        if m.msg_type == MsgType::MediaPc {
            self.sent_media.push((wall_clock_us(), bytes.len() as u64));
        }
        Ok(())
    }

    /// Feeds inbound messages to `p` until one satisfies `done`.
    fn wait_for(
        &mut self,
        p: &mut Participant,
        done: impl Fn(&Participant) -> bool,
    ) -> Result<(), String> {
        let deadline = wall_clock_us() + JOIN_TIMEOUT.as_micros() as u64;
        while !done(p) {
            let left = deadline.saturating_sub(wall_clock_us());
            if left == 0 {
                return Err("timed out waiting for the orchestrator".into());
            }
            match self.rx.recv_timeout(Duration::from_micros(left)) {
                Ok((m, t)) => deliver(p, &m, t),
                Err(RecvTimeoutError::Timeout) => {}
                Err(RecvTimeoutError::Disconnected) => {
                    return Err("orchestrator closed the connection".into())
                }
            }
            if let Some(e) = p.last_error() {
                if p.session_id().is_none() {
                    return Err(format!("rejected: {:?} {}", e.code, e.text));
                }
            }
        }
        Ok(())
    }
}

fn deliver(p: &mut Participant, m: &WireMessage, received: u64) {
    if m.msg_type == MsgType::MediaPc {
        p.on_media(m, received, wall_clock_us());
    } else {
        p.on_message(m, received, received);
    }
}

fn run_client(spec: ClientSpec) -> Result<ClientRecord, String> {
    let mut p = Participant::new(spec.pc).map_err(|e| e.to_string())?;
    let mut conn = Conn::open(spec.addr).map_err(|e| format!("connect {}: {e}", spec.addr))?;
    let now = wall_clock_us();
    conn.send(&p.hello(now))?;

    let session = match &spec.leader_of {
        Some(members) => {
            conn.send(&p.create(spec.max_members, wall_clock_us()))?;
            conn.wait_for(&mut p, |p| p.created_session().is_some())?;
            let s = p.created_session().unwrap();
            for m in members {
                let _ = m.send(s);
            }
            s
        }
        None => spec
            .invite
            .recv_timeout(JOIN_TIMEOUT)
            .map_err(|_| "no session invitation".to_string())?,
    };
    conn.send(&p.join(session, wall_clock_us()))?;
    conn.wait_for(&mut p, |p| p.session_id().is_some())?;

    let mut first = spec.first_capture;
    let period = p.config().frame_period_us() as u64;
    while first < wall_clock_us() {
        first += period;
    }
    p.start_cadence(first);
    let mut next_hb = wall_clock_us() + 1_000_000;
    let mut next_audio = first;

    loop {
        let now = wall_clock_us();
        if now >= spec.media_end {
            break;
        }
        if p.next_capture_us().is_some_and(|t| now >= t) {
            if let Some(m) = p.capture_tick(now) {
                conn.send(&m)?;
            }
            continue;
        }
        if now >= next_hb {
            if let Some(m) = p.heartbeat(now) {
                conn.send(&m)?;
            }
            if let Some(m) = p.position(now) {
                conn.send(&m)?;
            }
            next_hb += 1_000_000;
        }
        if spec.audio_bytes > 0 && now >= next_audio {
            if let Some(m) = p.audio(spec.audio_bytes, now) {
                conn.send(&m)?;
            }
            next_audio += 20_000;
        }
        let mut wake = next_hb.min(spec.media_end);
        if let Some(t) = p.next_capture_us() {
            wake = wake.min(t);
        }
        if spec.audio_bytes > 0 {
            wake = wake.min(next_audio);
        }
        let wait = Duration::from_micros(wake.saturating_sub(now).max(1));
        match conn.rx.recv_timeout(wait) {
            Ok((m, t)) => deliver(&mut p, &m, t),
            Err(RecvTimeoutError::Timeout) => {}
            Err(RecvTimeoutError::Disconnected) => return Err("orchestrator went away".into()),
        }
    }

    // Let in-flight frames arrive, then leave.
    let drain_end = spec.media_end + DRAIN_US;
    loop {
        let now = wall_clock_us();
        if now >= drain_end {
            break;
        }
        if let Ok((m, t)) = conn.rx.recv_timeout(Duration::from_micros(drain_end - now)) {
            deliver(&mut p, &m, t);
        }
    }
    let session_id = p.session_id();
    if let Some(m) = p.leave(wall_clock_us()) {
        conn.send(&m)?;
    }
    let _ = conn.out.shutdown(std::net::Shutdown::Both);
    let offset = p.config().clock_offset_us;
    let (_, sink, stats) = p.into_parts();
    Ok(ClientRecord {
        member_id: member_id(spec.index),
        group: 0,
        session_id,
        clock_offset_us: offset,
        sink,
        stats,
        media_sends: conn.sent_media,
    })
}
