//! Virtual-clock scenario execution.
//!
//! A single-threaded discrete-event loop. Every message is serialized to
//! wire bytes, pushed through the sender's uplink, parsed and routed by a
//! real [`Orchestrator`], then pushed through each recipient's downlink.
//! Ties in time are broken by scheduling order, so a run is a pure function
//! of its config.

use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BinaryHeap};
use std::hash::{Hash, Hasher};
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    member_id, ClientRecord, HarnessError, Link, LinkDirection, LinkRow, Reception, RelayRow,
    RouteRecord, RunLog, ScenarioConfig, ServiceModel,
};
use crate::client::{FrameInfo, Participant, ParticipantConfig};
use crate::codec::{decode_bytes, peek_ids, FRAME_HEADER_LEN, FRAME_ID_RANGE};
use crate::orchestrator::{Orchestrator, OrchestratorConfig, Outbound, MAX_MEMBERS};
use crate::wire::{decode_message, encode_message, MsgType, WireMessage};

/// Virtual time origin. Large enough that negative clock offsets never
/// underflow.
pub const EPOCH_US: u64 = 10_000_000;
/// Signaling gets this long before media starts.
pub const MEDIA_START_DELAY_US: u64 = 1_000_000;
/// In-flight traffic gets this long after the last capture before LEAVE.
pub const DRAIN_US: u64 = 2_000_000;
const HEARTBEAT_US: u64 = 1_000_000;
const AUDIO_PACKET_US: u64 = 20_000;

enum Ev {
    Kickoff(usize),
    AtOrchestrator(usize, Vec<u8>),
    AtClient(usize, Vec<u8>),
    DecodeDone(usize, Rc<WireMessage>, u64),
    Capture(usize),
    EncodeDone(usize, WireMessage),
    Heartbeat(usize),
    Audio(usize),
    OrchestratorTick,
    Leave(usize),
}

struct Entry {
    t: u64,
    n: u64,
    ev: Ev,
}

impl PartialEq for Entry {
    fn eq(&self, o: &Self) -> bool {
        (self.t, self.n) == (o.t, o.n)
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Entry {
    fn cmp(&self, o: &Self) -> Ordering {
        (o.t, o.n).cmp(&(self.t, self.n))
    }
}

#[derive(Default)]
struct Queue {
    heap: BinaryHeap<Entry>,
    n: u64,
}

impl Queue {
    fn push(&mut self, t: u64, ev: Ev) {
        self.n += 1;
        self.heap.push(Entry { t, n: self.n, ev });
    }

    fn pop(&mut self) -> Option<(u64, Ev)> {
        self.heap.pop().map(|e| (e.t, e.ev))
    }
}

struct Sim<'a> {
    cfg: &'a ScenarioConfig,
    svc: ServiceModel,
    q: Queue,
    rng: ChaCha8Rng,
    orch: Orchestrator,
    clients: Vec<Participant>,
    up: Vec<Link>,
    down: Vec<Link>,
    phase_us: Vec<u64>,
    index_of: BTreeMap<u32, usize>,
    left: Vec<bool>,
    media_start: u64,
    media_end: u64,
    leave_at: u64,
    /// Decode outcome (point count, or `None` on failure) per sender and
    /// frame body. Bodies repeat across receivers and across animation
    /// loops; decoding is deterministic, so one decode serves them all.
    decode_memo: BTreeMap<(u32, u64), Option<u32>>,
    log: RunLog,
}

pub fn run_virtual(cfg: &ScenarioConfig, svc: &ServiceModel) -> Result<RunLog, HarnessError> {
    let n = cfg.total_clients();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let offsets = cfg.clock_offsets(&mut rng);
    let period = (1e6 / cfg.fps) as u64;
    let phase_us: Vec<u64> = (0..n).map(|_| rng.gen_range(0..period.max(1))).collect();

    let mut clients = Vec::with_capacity(n);
    for (i, &offset) in offsets.iter().enumerate() {
        let mut pc = ParticipantConfig::new(member_id(i), cfg.client_scene(i));
        pc.codec = cfg.codec;
        pc.fps = cfg.fps;
        pc.clock_offset_us = offset;
        pc.frame_loop = cfg.frame_loop;
        clients.push(Participant::new(pc).map_err(|e| HarnessError::Config(e.to_string()))?);
    }
    let link_seed = |i: usize, dir: u64| cfg.seed ^ ((i as u64 + 1) << 32) ^ (dir << 60);
    let up = (0..n)
        .map(|i| Link::new(cfg.uplink(i), link_seed(i, 1)))
        .collect();
    let down = (0..n)
        .map(|i| Link::new(cfg.downlink(i), link_seed(i, 2)))
        .collect();

    let media_start = EPOCH_US + MEDIA_START_DELAY_US;
    let media_end = media_start + (cfg.duration_s * 1e6).round() as u64;
    let mut sim = Sim {
        cfg,
        svc: *svc,
        q: Queue::default(),
        rng: ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x5eed)),
        orch: Orchestrator::new(OrchestratorConfig {
            max_members: MAX_MEMBERS,
            heartbeat_timeout_ms: cfg.heartbeat_timeout_ms,
            ..OrchestratorConfig::default()
        }),
        clients,
        up,
        down,
        phase_us,
        index_of: (0..n).map(|i| (member_id(i), i)).collect(),
        left: vec![false; n],
        media_start,
        media_end,
        leave_at: media_end + DRAIN_US,
        decode_memo: BTreeMap::new(),
        log: RunLog {
            uplink_deliveries: vec![Vec::new(); n],
            media_start_us: media_start,
            media_end_us: media_end,
            ..RunLog::default()
        },
    };
    sim.log.clients = offsets
        .iter()
        .enumerate()
        .map(|(i, &o)| ClientRecord {
            member_id: member_id(i),
            group: i / cfg.participants,
            clock_offset_us: o,
            ..ClientRecord::default()
        })
        .collect();
    sim.run()?;
    Ok(sim.finish())
}

impl Sim<'_> {
    fn jittered(&mut self, base: u64) -> u64 {
        let j = self.svc.jitter_us as i64;
        if j == 0 {
            return base;
        }
        (base as i64 + self.rng.gen_range(-j..=j)).max(0) as u64
    }

    fn run(&mut self) -> Result<(), HarnessError> {
        for i in 0..self.clients.len() {
            self.q.push(EPOCH_US, Ev::Kickoff(i));
            self.q.push(EPOCH_US + HEARTBEAT_US, Ev::Heartbeat(i));
            self.q.push(self.leave_at, Ev::Leave(i));
            if self.cfg.audio_bps > 0 {
                self.q
                    .push(self.media_start + self.phase_us[i], Ev::Audio(i));
            }
        }
        self.q.push(EPOCH_US + HEARTBEAT_US, Ev::OrchestratorTick);

        while let Some((t, ev)) = self.q.pop() {
            match ev {
                Ev::Kickoff(i) => {
                    let hello = self.clients[i].hello(t);
                    self.send(i, &hello, t)?;
                    if i % self.cfg.participants == 0 {
                        let create = self.clients[i].create(self.cfg.participants as u8, t);
                        self.send(i, &create, t)?;
                    }
                }
                Ev::AtOrchestrator(i, bytes) => self.at_orchestrator(i, &bytes, t)?,
                Ev::AtClient(i, bytes) => self.at_client(i, &bytes, t)?,
                Ev::DecodeDone(i, msg, received) => self.decode_done(i, &msg, received, t),
                Ev::Capture(i) => self.capture(i, t),
                Ev::EncodeDone(i, mut msg) => {
                    msg.send_ts_us = self.clients[i].local_time(t);
                    self.log.clients[i]
                        .media_sends
                        .push((t, msg.encoded_len() as u64));
                    self.send(i, &msg, t)?;
                }
                Ev::Heartbeat(i) => {
                    if self.left[i] {
                        continue;
                    }
                    if let Some(hb) = self.clients[i].heartbeat(t) {
                        self.send(i, &hb, t)?;
                    }
                    if let Some(pos) = self.clients[i].position(t) {
                        self.send(i, &pos, t)?;
                    }
                    self.q.push(t + HEARTBEAT_US, Ev::Heartbeat(i));
                }
                Ev::Audio(i) => {
                    if t >= self.media_end {
                        continue;
                    }
                    let bytes = (self.cfg.audio_bps as f64 * AUDIO_PACKET_US as f64 / 8e6) as usize;
                    if let Some(a) = self.clients[i].audio(bytes, t) {
                        self.send(i, &a, t)?;
                    }
                    self.q.push(t + AUDIO_PACKET_US, Ev::Audio(i));
                }
                Ev::OrchestratorTick => {
                    let (_, out) = self.orch.heartbeat_tick(t);
                    self.dispatch(out, t)?;
                    if t < self.leave_at + HEARTBEAT_US {
                        self.q.push(t + HEARTBEAT_US, Ev::OrchestratorTick);
                    }
                }
                Ev::Leave(i) => {
                    self.left[i] = true;
                    if let Some(m) = self.clients[i].leave(t) {
                        self.send(i, &m, t)?;
                    }
                }
            }
            self.log.events.extend(self.orch.take_events());
        }

        let missing: Vec<u32> = self
            .log
            .clients
            .iter()
            .filter(|c| c.session_id.is_none())
            .map(|c| c.member_id)
            .collect();
        if !missing.is_empty() {
            return Err(HarnessError::Scenario(format!(
                "clients {missing:?} were unable to join a session"
            )));
        }
        Ok(())
    }

    fn send(&mut self, i: usize, msg: &WireMessage, t: u64) -> Result<(), HarnessError> {
        let bytes = encode_message(msg).map_err(|e| HarnessError::Scenario(e.to_string()))?;
        let at = self.up[i].transfer(bytes.len(), t);
        self.q.push(at, Ev::AtOrchestrator(i, bytes));
        Ok(())
    }

    fn dispatch(&mut self, out: Vec<Outbound>, t: u64) -> Result<(), HarnessError> {
        let forward_at = t + self.svc.relay_us;
        for o in out {
            let Some(&j) = self.index_of.get(&o.to) else {
                continue;
            };
            let bytes =
                encode_message(&o.msg).map_err(|e| HarnessError::Scenario(e.to_string()))?;
            let at = self.down[j].transfer(bytes.len(), forward_at);
            self.q.push(at, Ev::AtClient(j, bytes));
        }
        Ok(())
    }

    fn at_orchestrator(&mut self, i: usize, bytes: &[u8], t: u64) -> Result<(), HarnessError> {
        let (msg, _) = decode_message(bytes).map_err(|e| {
            HarnessError::Scenario(format!("orchestrator could not parse a frame: {e}"))
        })?;
        let from = member_id(i);
        let out = self.orch.handle(from, &msg, t);
        if msg.msg_type == MsgType::MediaPc {
            self.log.uplink_deliveries[i].push((t, bytes.len() as u64));
            let members = self
                .orch
                .session(msg.session_id)
                .map(|s| s.members.keys().copied().collect())
                .unwrap_or_default();
            let recipients: Vec<u32> = out
                .iter()
                .filter(|o| o.msg.msg_type == MsgType::MediaPc)
                .map(|o| o.to)
                .collect();
            self.log.routes.push(RouteRecord {
                t_us: t,
                session: msg.session_id,
                sender: msg.sender_id,
                seq: msg.seq,
                bytes: bytes.len() as u64,
                members,
                recipients,
            });
        }
        self.dispatch(out, t)
    }

    fn at_client(&mut self, j: usize, bytes: &[u8], t: u64) -> Result<(), HarnessError> {
        let (msg, _) = decode_message(bytes)
            .map_err(|e| HarnessError::Scenario(format!("client could not parse a frame: {e}")))?;
        if msg.msg_type == MsgType::MediaPc {
            self.log.receptions.push(Reception {
                t_us: t,
                receiver: member_id(j),
                session: msg.session_id,
                sender: msg.sender_id,
                seq: msg.seq,
                bytes: bytes.len() as u64,
            });
            let streams = self.clients[j].roster().len();
            let d = self.svc.decode_latency_us(streams);
            let d = self.jittered(d);
            self.q.push(t + d, Ev::DecodeDone(j, Rc::new(msg), t));
            return Ok(());
        }

        let was_in_session = self.clients[j].session_id().is_some();
        let had_created = self.clients[j].created_session();
        self.clients[j].on_message(&msg, t, t);

        if msg.msg_type == MsgType::CreateAck && had_created.is_none() {
            if let Some(session) = self.clients[j].created_session() {
                let group = j / self.cfg.participants;
                for k in group * self.cfg.participants..(group + 1) * self.cfg.participants {
                    let join = self.clients[k].join(session, t);
                    self.send(k, &join, t)?;
                }
            }
        }
        if !was_in_session && self.clients[j].session_id().is_some() {
            self.log.clients[j].session_id = self.clients[j].session_id();
            let period = 1e6 / self.cfg.fps;
            let mut first = (self.media_start + self.phase_us[j]) as f64;
            while first < t as f64 {
                first += period;
            }
            let first = first.round() as u64;
            self.clients[j].start_cadence(first);
            if first < self.media_end {
                self.q.push(first, Ev::Capture(j));
            }
        }
        Ok(())
    }

    fn capture(&mut self, i: usize, t: u64) {
        if t >= self.media_end || self.left[i] {
            return;
        }
        if let Some(msg) = self.clients[i].capture_tick(t) {
            let c = self.jittered(self.svc.capture_us);
            let e = self.jittered(self.svc.encode_us);
            self.clients[i].set_busy_until(t + e);
            self.q.push(t + c + e, Ev::EncodeDone(i, msg));
        }
        if let Some(next) = self.clients[i].next_capture_us() {
            if next < self.media_end {
                self.q.push(next, Ev::Capture(i));
            }
        }
    }

    fn decode_done(&mut self, j: usize, msg: &WireMessage, received: u64, t: u64) {
        let p = &msg.payload;
        let info = if p.len() < FRAME_HEADER_LEN {
            None
        } else {
            let mut h = DefaultHasher::new();
            p[..FRAME_ID_RANGE.start].hash(&mut h);
            p[FRAME_ID_RANGE.end..].hash(&mut h);
            let points = *self
                .decode_memo
                .entry((msg.sender_id, h.finish()))
                .or_insert_with(|| decode_bytes(p).ok().map(|f| f.points.len() as u32));
            points.and_then(|points| {
                peek_ids(p).map(|(source_id, seq, capture_ts_us)| FrameInfo {
                    source_id,
                    seq,
                    capture_ts_us,
                    points,
                })
            })
        };
        self.clients[j].on_decoded(msg.sender_id, info, received, t);
    }

    fn finish(mut self) -> RunLog {
        let mut relay: Vec<RelayRow> = self
            .orch
            .relay_stats()
            .iter()
            .map(|(&(session, sender), &stats)| RelayRow {
                session,
                sender,
                stats,
            })
            .collect();
        relay.sort_by_key(|r| (r.session, r.sender));
        self.log.relay_stats = relay;
        for (i, l) in self.up.iter().enumerate() {
            self.log.links.push(LinkRow {
                member: member_id(i),
                direction: LinkDirection::Uplink,
                stats: *l.stats(),
            });
        }
        for (i, l) in self.down.iter().enumerate() {
            self.log.links.push(LinkRow {
                member: member_id(i),
                direction: LinkDirection::Downlink,
                stats: *l.stats(),
            });
        }
        for (rec, p) in self.log.clients.iter_mut().zip(self.clients) {
            let (_, sink, stats) = p.into_parts();
            rec.sink = sink;
            rec.stats = stats;
        }
        self.log
    }
}
