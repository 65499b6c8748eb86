//! Simulated participant.
//!
//! A [`Participant`] captures, encodes and publishes its own volumetric
//! stream at a fixed cadence, and decodes remote streams into a
//! [`RenderSink`] that records capture and playout timestamps. It does no
//! I/O: the caller supplies the true time and moves messages.
//!
//! "Render" here means decode complete; there is no display model.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capture::{
    capture_rig, CameraModel, CaptureError, PointCloudFrame, SceneConfig, DEFAULT_CAPTURE_RADIUS_M,
};
use crate::codec::{decode_bytes, encode_frame, CodecConfig, CodecError, EncodedFrame};
use crate::wire::{
    decode_create_ack, decode_join_ack, ErrorCode, ErrorPayload, MsgType, Pose, Roster, WireMessage,
};

pub const MAX_CLOCK_OFFSET_US: i64 = 50_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClientError {
    #[error("invalid participant config: {0}")]
    Config(String),
    #[error(transparent)]
    Capture(#[from] CaptureError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantConfig {
    pub member_id: u32,
    pub scene: SceneConfig,
    pub rig: Vec<CameraModel>,
    pub codec: CodecConfig,
    pub fps: f64,
    /// Error of this participant's clock relative to true time.
    pub clock_offset_us: i64,
    pub capture_radius_m: f64,
    /// Depth window kept by background removal, in millimeters.
    pub depth_range_mm: (u16, u16),
    /// When nonzero, the subject's motion repeats every `frame_loop`
    /// frames and each distinct frame is captured and encoded once, then
    /// re-sent with fresh ids and timestamps. Zero renders every frame.
    pub frame_loop: u32,
}

impl ParticipantConfig {
    pub fn new(member_id: u32, scene: SceneConfig) -> Self {
        Self {
            member_id,
            rig: scene.rig(),
            scene,
            codec: CodecConfig::default(),
            fps: 15.0,
            clock_offset_us: 0,
            capture_radius_m: DEFAULT_CAPTURE_RADIUS_M,
            depth_range_mm: (200, 6000),
            frame_loop: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ClientError> {
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(ClientError::Config(format!(
                "fps must be positive, got {}",
                self.fps
            )));
        }
        if self.clock_offset_us.abs() > MAX_CLOCK_OFFSET_US {
            return Err(ClientError::Config(format!(
                "clock offset {} us exceeds ±{MAX_CLOCK_OFFSET_US}",
                self.clock_offset_us
            )));
        }
        if self.rig.is_empty() {
            return Err(ClientError::Config("camera rig is empty".into()));
        }
        for cam in &self.rig {
            cam.validate()?;
        }
        self.codec.validate()?;
        Ok(())
    }

    pub fn frame_period_us(&self) -> f64 {
        1e6 / self.fps
    }
}

/// One decoded remote frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderRecord {
    pub source: u32,
    pub seq: u32,
    /// Sender clock.
    pub capture_ts_us: u64,
    /// Receiver clock, when the frame arrived.
    pub receive_ts_us: u64,
    /// Receiver clock, when decoding finished.
    pub render_ts_us: u64,
    pub points: u32,
}

/// What the render log needs from a decoded frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameInfo {
    pub source_id: u32,
    pub seq: u32,
    pub capture_ts_us: u64,
    pub points: u32,
}

impl From<&PointCloudFrame> for FrameInfo {
    fn from(f: &PointCloudFrame) -> Self {
        Self {
            source_id: f.source_id,
            seq: f.seq,
            capture_ts_us: f.capture_ts_us,
            points: f.points.len() as u32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelfViewRecord {
    pub seq: u32,
    pub capture_ts_us: u64,
    pub points: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceStats {
    pub seat: Option<u8>,
    pub last_seq: Option<u32>,
    pub frames_received: u64,
    /// Sequence numbers skipped over.
    pub gaps: u64,
    pub out_of_order: u64,
    pub decode_errors: u64,
    /// Left the session; counters are frozen.
    pub departed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderSink {
    pub sources: BTreeMap<u32, SourceStats>,
    /// Every rendered remote frame, in render order.
    pub renders: Vec<RenderRecord>,
    pub self_view: Vec<SelfViewRecord>,
}

impl RenderSink {
    pub fn renders_from(&self, source: u32) -> impl Iterator<Item = &RenderRecord> {
        self.renders.iter().filter(move |r| r.source == source)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClientStats {
    pub published: u64,
    pub media_bytes: u64,
    /// Cadence boundaries passed without publishing (encoder busy or late tick).
    pub skipped: u64,
    pub encode_failures: u64,
    pub audio_bytes_received: u64,
    pub errors_received: u64,
    pub peer_timeouts: u64,
}

#[derive(Debug, Clone)]
pub struct Participant {
    cfg: ParticipantConfig,
    session_id: Option<u32>,
    created_session: Option<u32>,
    seat: Option<u8>,
    /// Remote members and their seats.
    roster: BTreeMap<u32, u8>,
    seqs: BTreeMap<MsgType, u32>,
    cadence_start_us: Option<u64>,
    next_tick: u64,
    busy_until_us: u64,
    sink: RenderSink,
    stats: ClientStats,
    remote_poses: BTreeMap<u32, Pose>,
    last_error: Option<ErrorPayload>,
    loop_cache: BTreeMap<u64, EncodedFrame>,
}

impl Participant {
    pub fn new(cfg: ParticipantConfig) -> Result<Self, ClientError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            session_id: None,
            created_session: None,
            seat: None,
            roster: BTreeMap::new(),
            seqs: BTreeMap::new(),
            cadence_start_us: None,
            next_tick: 0,
            busy_until_us: 0,
            sink: RenderSink::default(),
            stats: ClientStats::default(),
            remote_poses: BTreeMap::new(),
            last_error: None,
            loop_cache: BTreeMap::new(),
        })
    }

    pub fn id(&self) -> u32 {
        self.cfg.member_id
    }

    pub fn config(&self) -> &ParticipantConfig {
        &self.cfg
    }

    pub fn session_id(&self) -> Option<u32> {
        self.session_id
    }

    pub fn created_session(&self) -> Option<u32> {
        self.created_session
    }

    pub fn seat(&self) -> Option<u8> {
        self.seat
    }

    pub fn roster(&self) -> &BTreeMap<u32, u8> {
        &self.roster
    }

    pub fn remote_poses(&self) -> &BTreeMap<u32, Pose> {
        &self.remote_poses
    }

    pub fn sink(&self) -> &RenderSink {
        &self.sink
    }

    pub fn stats(&self) -> &ClientStats {
        &self.stats
    }

    pub fn last_error(&self) -> Option<&ErrorPayload> {
        self.last_error.as_ref()
    }

    pub fn into_parts(self) -> (ParticipantConfig, RenderSink, ClientStats) {
        (self.cfg, self.sink, self.stats)
    }

    /// This participant's clock reading at true time `true_us`.
    pub fn local_time(&self, true_us: u64) -> u64 {
        true_us.saturating_add_signed(self.cfg.clock_offset_us)
    }

    fn next_seq(&mut self, t: MsgType) -> u32 {
        let s = self.seqs.entry(t).or_insert(0);
        let v = *s;
        *s = s.wrapping_add(1);
        v
    }

    fn message(&mut self, t: MsgType, session: u32, true_us: u64, payload: Vec<u8>) -> WireMessage {
        let mut m = WireMessage::new(t, session, self.cfg.member_id).with_payload(payload);
        m.seq = self.next_seq(t);
        m.send_ts_us = self.local_time(true_us);
        m
    }

    pub fn hello(&mut self, true_us: u64) -> WireMessage {
        self.message(MsgType::Hello, 0, true_us, Vec::new())
    }

    pub fn create(&mut self, max_members: u8, true_us: u64) -> WireMessage {
        self.message(MsgType::Create, 0, true_us, vec![max_members])
    }

    pub fn join(&mut self, session_id: u32, true_us: u64) -> WireMessage {
        self.message(MsgType::Join, session_id, true_us, Vec::new())
    }

    pub fn leave(&mut self, true_us: u64) -> Option<WireMessage> {
        let s = self.session_id.take()?;
        self.cadence_start_us = None;
        for src in self.sink.sources.values_mut() {
            src.departed = true;
        }
        self.roster.clear();
        Some(self.message(MsgType::Leave, s, true_us, Vec::new()))
    }

    pub fn heartbeat(&mut self, true_us: u64) -> Option<WireMessage> {
        let s = self.session_id?;
        Some(self.message(MsgType::Heartbeat, s, true_us, Vec::new()))
    }

    /// Seat position on a round table of radius 1.2 m, facing its center.
    pub fn seat_pose(&self) -> Pose {
        let seat = self.seat.unwrap_or(0) as f32;
        let angle = std::f32::consts::TAU * seat / crate::orchestrator::MAX_MEMBERS as f32;
        let yaw = -angle - std::f32::consts::FRAC_PI_2;
        Pose {
            position: [1.2 * angle.cos(), 0.0, 1.2 * angle.sin()],
            orientation: [0.0, (yaw / 2.0).sin(), 0.0, (yaw / 2.0).cos()],
        }
    }

    pub fn position(&mut self, true_us: u64) -> Option<WireMessage> {
        let s = self.session_id?;
        let pose = self.seat_pose().encode();
        Some(self.message(MsgType::Position, s, true_us, pose))
    }

    pub fn audio(&mut self, bytes: usize, true_us: u64) -> Option<WireMessage> {
        let s = self.session_id?;
        Some(self.message(MsgType::MediaAudio, s, true_us, vec![0; bytes]))
    }

    /// Starts the capture cadence with its first boundary at `first_us`.
    pub fn start_cadence(&mut self, first_us: u64) {
        self.cadence_start_us = Some(first_us);
        self.next_tick = 0;
    }

    fn boundary(&self, k: u64) -> Option<u64> {
        self.cadence_start_us
            .map(|s| s + (k as f64 * self.cfg.frame_period_us()).round() as u64)
    }

    /// True time of the next capture boundary.
    pub fn next_capture_us(&self) -> Option<u64> {
        self.boundary(self.next_tick)
    }

    /// Marks the encoder busy; boundaries before `true_us` are skipped.
    pub fn set_busy_until(&mut self, true_us: u64) {
        self.busy_until_us = self.busy_until_us.max(true_us);
    }

    /// Captures, reconstructs and encodes the subject at `true_us`.
    pub fn capture_frame(&self, true_us: u64, seq: u32) -> Result<PointCloudFrame, ClientError> {
        let c = &self.cfg;
        let mut frame = capture_rig(
            &c.scene,
            &c.rig,
            true_us,
            c.depth_range_mm,
            c.capture_radius_m,
        )?;
        frame.source_id = c.member_id;
        frame.seq = seq;
        frame.capture_ts_us = self.local_time(true_us);
        Ok(frame)
    }

    fn encode(&mut self, true_us: u64, seq: u32, tick: u64) -> Result<EncodedFrame, ClientError> {
        let l = self.cfg.frame_loop as u64;
        if l == 0 {
            let frame = self.capture_frame(true_us, seq)?;
            return Ok(encode_frame(&frame, &self.cfg.codec)?);
        }
        let key = tick % l;
        let mut enc = match self.loop_cache.get(&key) {
            Some(e) => e.clone(),
            None => {
                let scene_t = self.boundary(key).unwrap_or(true_us);
                let e = encode_frame(&self.capture_frame(scene_t, seq)?, &self.cfg.codec)?;
                self.loop_cache.insert(key, e.clone());
                e
            }
        };
        enc.seq = seq;
        enc.capture_ts_us = self.local_time(true_us);
        Ok(enc)
    }

    /// Publishes a frame if `true_us` has reached the next cadence boundary.
    ///
    /// The returned MEDIA_PC is stamped with the capture time; the same frame
    /// goes to the self-view log without touching the network. Missed
    /// boundaries and boundaries hit while the encoder is busy are skipped,
    /// never queued.
    pub fn capture_tick(&mut self, true_us: u64) -> Option<WireMessage> {
        let session = self.session_id?;
        let next = self.next_capture_us()?;
        if true_us < next {
            return None;
        }
        let mut crossed = 0;
        while self.boundary(self.next_tick).is_some_and(|b| b <= true_us) {
            self.next_tick += 1;
            crossed += 1;
        }
        self.stats.skipped += crossed - 1;
        if true_us < self.busy_until_us {
            self.stats.skipped += 1;
            return None;
        }
        let seq = *self.seqs.get(&MsgType::MediaPc).unwrap_or(&0);
        let tick = self.next_tick - 1;
        let encoded = match self.encode(true_us, seq, tick) {
            Ok(e) => e,
            Err(_) => {
                self.stats.encode_failures += 1;
                return None;
            }
        };
        let msg = self.message(MsgType::MediaPc, session, true_us, encoded.to_bytes());
        debug_assert_eq!(msg.seq, seq);
        self.stats.published += 1;
        self.stats.media_bytes += msg.encoded_len() as u64;
        self.sink.self_view.push(SelfViewRecord {
            seq,
            capture_ts_us: encoded.capture_ts_us,
            points: encoded.point_count,
        });
        Some(msg)
    }

    /// Handles any inbound message. `received_us` and `rendered_us` are true
    /// times; they differ only for media, which is decoded in between.
    pub fn on_message(&mut self, msg: &WireMessage, received_us: u64, rendered_us: u64) {
        match msg.msg_type {
            MsgType::MediaPc => self.on_media(msg, received_us, rendered_us),
            MsgType::MediaAudio => self.stats.audio_bytes_received += msg.payload.len() as u64,
            MsgType::Roster => {
                if let Ok(r) = Roster::decode(&msg.payload) {
                    self.on_roster(&r);
                }
            }
            MsgType::JoinAck => {
                if let Ok((seat, roster)) = decode_join_ack(&msg.payload) {
                    self.session_id = Some(msg.session_id);
                    self.seat = Some(seat);
                    self.on_roster(&roster);
                }
            }
            MsgType::CreateAck => {
                self.created_session = decode_create_ack(&msg.payload).ok();
            }
            MsgType::Position => {
                if let Ok(p) = Pose::decode(&msg.payload) {
                    self.remote_poses.insert(msg.sender_id, p);
                }
            }
            MsgType::Error => {
                self.stats.errors_received += 1;
                if let Ok(e) = ErrorPayload::decode(&msg.payload) {
                    if e.code == ErrorCode::PeerTimeout {
                        self.stats.peer_timeouts += 1;
                    }
                    self.last_error = Some(e);
                }
            }
            _ => {}
        }
    }

    /// Decodes a remote frame and records its capture/render timestamps.
    /// Corrupt frames and out-of-order sequence numbers are counted and
    /// dropped.
    pub fn on_media(&mut self, msg: &WireMessage, received_us: u64, rendered_us: u64) {
        if msg.sender_id == self.cfg.member_id {
            return;
        }
        let info = decode_bytes(&msg.payload).ok().map(|f| FrameInfo::from(&f));
        self.on_decoded(msg.sender_id, info, received_us, rendered_us);
    }

    /// Second half of [`Participant::on_media`], for callers that share one
    /// decode between several receivers. `None` means the payload failed to
    /// decode.
    pub fn on_decoded(
        &mut self,
        source: u32,
        decoded: Option<FrameInfo>,
        received_us: u64,
        rendered_us: u64,
    ) {
        if source == self.cfg.member_id {
            return;
        }
        let receive_ts_us = self.local_time(received_us);
        let render_ts_us = self.local_time(rendered_us.max(received_us));
        let stats = self.sink.sources.entry(source).or_default();
        let frame = match decoded {
            Some(f) if f.source_id == source => f,
            _ => {
                stats.decode_errors += 1;
                return;
            }
        };
        if let Some(last) = stats.last_seq {
            if frame.seq <= last {
                stats.out_of_order += 1;
                return;
            }
            stats.gaps += (frame.seq - last - 1) as u64;
        }
        stats.last_seq = Some(frame.seq);
        stats.frames_received += 1;
        self.sink.renders.push(RenderRecord {
            source,
            seq: frame.seq,
            capture_ts_us: frame.capture_ts_us,
            receive_ts_us,
            render_ts_us,
            points: frame.points,
        });
    }

    /// Replaces the remote seat map. Members no longer listed are marked
    /// departed; their stats are kept.
    pub fn on_roster(&mut self, roster: &Roster) {
        let me = self.cfg.member_id;
        let next: BTreeMap<u32, u8> = roster
            .entries
            .iter()
            .filter(|e| e.member_id != me)
            .map(|e| (e.member_id, e.seat))
            .collect();
        if let Some(mine) = roster.entries.iter().find(|e| e.member_id == me) {
            self.seat = Some(mine.seat);
        }
        for (id, stats) in self.sink.sources.iter_mut() {
            if !next.contains_key(id) {
                stats.departed = true;
            }
        }
        for (&id, &seat) in &next {
            let s = self.sink.sources.entry(id).or_default();
            s.departed = false;
            s.seat = Some(seat);
        }
        self.roster = next;
    }
}
