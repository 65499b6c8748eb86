//! Session and stream manager.
//!
//! The [`Orchestrator`] is transport-agnostic: it consumes decoded
//! [`WireMessage`]s tagged with the connection's member id and returns the
//! messages to deliver, each addressed to one member. The discrete-event
//! harness and the TCP server in [`server`] both drive it this way.
//!
//! Media is forwarded verbatim to every other member of the sender's
//! session; nothing is buffered, paced or transcoded at the relay.

pub mod server;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::wire::{
    decode_create, encode_join_ack, ErrorCode, ErrorPayload, MsgType, Pose, Roster, RosterEntry,
    WireMessage, DEFAULT_PORT,
};

/// Sender id used on messages the orchestrator originates.
pub const ORCHESTRATOR_ID: u32 = 0;

pub const MIN_MEMBERS: usize = 2;
pub const MAX_MEMBERS: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OrchestratorConfig {
    pub listen_port: u16,
    pub max_members: usize,
    pub heartbeat_timeout_ms: u64,
}

impl Default for OrchestratorConfig {
    fn default() -> Self {
        Self {
            listen_port: DEFAULT_PORT,
            max_members: MAX_MEMBERS,
            heartbeat_timeout_ms: 5_000,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrchestratorError {
    #[error("max_members must be in [2, 6], got {0}")]
    Config(usize),
    #[error("no such session {0}")]
    NoSuchSession(u32),
    #[error("session {0} is full")]
    SessionFull(u32),
    #[error("member {member} already joined session {session}")]
    AlreadyJoined { session: u32, member: u32 },
    #[error("member {member} is not in session {session}")]
    NotAMember { session: u32, member: u32 },
    #[error("unexpected {0:?} message")]
    Unexpected(MsgType),
    #[error("malformed payload: {0}")]
    Payload(String),
}

impl OrchestratorError {
    pub fn code(&self) -> ErrorCode {
        match self {
            OrchestratorError::Config(_) => ErrorCode::Config,
            OrchestratorError::NoSuchSession(_) => ErrorCode::NoSuchSession,
            OrchestratorError::SessionFull(_) => ErrorCode::SessionFull,
            OrchestratorError::AlreadyJoined { .. } => ErrorCode::AlreadyJoined,
            OrchestratorError::NotAMember { .. } => ErrorCode::NotAMember,
            OrchestratorError::Unexpected(_) | OrchestratorError::Payload(_) => ErrorCode::Protocol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberState {
    pub member_id: u32,
    pub last_heartbeat_us: u64,
    pub pose: Pose,
    /// Highest MEDIA_PC seq relayed for this member.
    pub media_seq_high: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: u32,
    pub max_members: usize,
    pub created_ts_us: u64,
    pub members: BTreeMap<u32, MemberState>,
    pub seats: BTreeMap<u32, u8>,
}

impl Session {
    pub fn roster(&self) -> Roster {
        Roster {
            entries: self
                .seats
                .iter()
                .map(|(&member_id, &seat)| RosterEntry { member_id, seat })
                .collect(),
        }
    }

    fn lowest_free_seat(&self) -> Option<u8> {
        (0..self.max_members as u8).find(|s| !self.seats.values().any(|v| v == s))
    }
}

/// Relay counters for one sender. `frames_*` and `bytes_*` cover MEDIA_PC;
/// MEDIA_AUDIO is counted separately.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelayStats {
    pub frames_in: u64,
    pub frames_out: u64,
    pub bytes_in: u64,
    pub bytes_out: u64,
    pub drops: u64,
    pub audio_packets_in: u64,
    pub audio_bytes_in: u64,
}

/// A message addressed to one member.
#[derive(Debug, Clone, PartialEq)]
pub struct Outbound {
    pub to: u32,
    pub msg: WireMessage,
}

/// Structured events, one JSON object each when logged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    SessionCreated {
        ts_us: u64,
        session: u32,
        max_members: usize,
    },
    Joined {
        ts_us: u64,
        session: u32,
        member: u32,
        seat: u8,
    },
    Left {
        ts_us: u64,
        session: u32,
        member: u32,
    },
    Expired {
        ts_us: u64,
        session: u32,
        member: u32,
    },
    SessionClosed {
        ts_us: u64,
        session: u32,
    },
    Rejected {
        ts_us: u64,
        member: u32,
        code: ErrorCode,
        reason: String,
    },
}

#[derive(Debug)]
pub struct Orchestrator {
    config: OrchestratorConfig,
    sessions: BTreeMap<u32, Session>,
    next_session: u32,
    stats: BTreeMap<(u32, u32), RelayStats>,
    seqs: BTreeMap<MsgType, u32>,
    events: Vec<Event>,
    now_us: u64,
}

impl Orchestrator {
    pub fn new(config: OrchestratorConfig) -> Self {
        Self {
            config,
            sessions: BTreeMap::new(),
            next_session: 1,
            stats: BTreeMap::new(),
            seqs: BTreeMap::new(),
            events: Vec::new(),
            now_us: 0,
        }
    }

    pub fn config(&self) -> &OrchestratorConfig {
        &self.config
    }

    pub fn session(&self, id: u32) -> Option<&Session> {
        self.sessions.get(&id)
    }

    pub fn sessions(&self) -> impl Iterator<Item = &Session> {
        self.sessions.values()
    }

    /// Relay counters keyed by `(session, sender)`.
    pub fn relay_stats(&self) -> &BTreeMap<(u32, u32), RelayStats> {
        &self.stats
    }

    pub fn record_drop(&mut self, session: u32, sender: u32) {
        self.stats.entry((session, sender)).or_default().drops += 1;
    }

    pub fn take_events(&mut self) -> Vec<Event> {
        std::mem::take(&mut self.events)
    }

    /// Sessions containing `member`.
    pub fn sessions_of(&self, member: u32) -> Vec<u32> {
        self.sessions
            .values()
            .filter(|s| s.members.contains_key(&member))
            .map(|s| s.session_id)
            .collect()
    }

    fn next_seq(&mut self, t: MsgType) -> u32 {
        let s = self.seqs.entry(t).or_insert(0);
        let v = *s;
        *s = s.wrapping_add(1);
        v
    }

    fn reply(&mut self, to: u32, t: MsgType, session: u32, payload: Vec<u8>) -> Outbound {
        let mut msg = WireMessage::new(t, session, ORCHESTRATOR_ID).with_payload(payload);
        msg.seq = self.next_seq(t);
        msg.send_ts_us = self.now_us;
        Outbound { to, msg }
    }

    fn error_reply(&mut self, to: u32, session: u32, err: &OrchestratorError) -> Outbound {
        let payload = ErrorPayload {
            code: err.code(),
            text: err.to_string(),
        }
        .encode();
        self.reply(to, MsgType::Error, session, payload)
    }

    fn roster_broadcast(&mut self, session: u32, except: Option<u32>) -> Vec<Outbound> {
        let Some(s) = self.sessions.get(&session) else {
            return Vec::new();
        };
        let payload = s.roster().encode();
        let targets: Vec<u32> = s
            .members
            .keys()
            .copied()
            .filter(|&m| Some(m) != except)
            .collect();
        targets
            .into_iter()
            .map(|to| self.reply(to, MsgType::Roster, session, payload.clone()))
            .collect()
    }

    pub fn create_session(
        &mut self,
        max_members: usize,
        now_us: u64,
    ) -> Result<u32, OrchestratorError> {
        if !(MIN_MEMBERS..=self.config.max_members.min(MAX_MEMBERS)).contains(&max_members) {
            return Err(OrchestratorError::Config(max_members));
        }
        let id = self.next_session;
        self.next_session += 1;
        self.sessions.insert(
            id,
            Session {
                session_id: id,
                max_members,
                created_ts_us: now_us,
                members: BTreeMap::new(),
                seats: BTreeMap::new(),
            },
        );
        self.events.push(Event::SessionCreated {
            ts_us: now_us,
            session: id,
            max_members,
        });
        Ok(id)
    }

    /// Admits `member`, returning its seat, the full roster, and the ROSTER
    /// broadcast to the other members.
    pub fn join(
        &mut self,
        session_id: u32,
        member: u32,
        now_us: u64,
    ) -> Result<(u8, Roster, Vec<Outbound>), OrchestratorError> {
        self.now_us = self.now_us.max(now_us);
        let s = self
            .sessions
            .get_mut(&session_id)
            .ok_or(OrchestratorError::NoSuchSession(session_id))?;
        if s.members.contains_key(&member) {
            return Err(OrchestratorError::AlreadyJoined {
                session: session_id,
                member,
            });
        }
        let seat = s
            .lowest_free_seat()
            .ok_or(OrchestratorError::SessionFull(session_id))?;
        s.members.insert(
            member,
            MemberState {
                member_id: member,
                last_heartbeat_us: now_us,
                pose: Pose::default(),
                media_seq_high: None,
            },
        );
        s.seats.insert(member, seat);
        let roster = s.roster();
        self.events.push(Event::Joined {
            ts_us: now_us,
            session: session_id,
            member,
            seat,
        });
        let broadcast = self.roster_broadcast(session_id, Some(member));
        Ok((seat, roster, broadcast))
    }

    /// Removes `member`; returns the ROSTER broadcast to those remaining.
    pub fn leave(
        &mut self,
        session_id: u32,
        member: u32,
        now_us: u64,
    ) -> Result<Vec<Outbound>, OrchestratorError> {
        self.now_us = self.now_us.max(now_us);
        self.remove_member(session_id, member)?;
        self.events.push(Event::Left {
            ts_us: now_us,
            session: session_id,
            member,
        });
        Ok(self.after_removal(session_id, now_us))
    }

    fn remove_member(&mut self, session_id: u32, member: u32) -> Result<(), OrchestratorError> {
        let s = self
            .sessions
            .get_mut(&session_id)
            .ok_or(OrchestratorError::NoSuchSession(session_id))?;
        if s.members.remove(&member).is_none() {
            return Err(OrchestratorError::NotAMember {
                session: session_id,
                member,
            });
        }
        s.seats.remove(&member);
        Ok(())
    }

    fn after_removal(&mut self, session_id: u32, now_us: u64) -> Vec<Outbound> {
        if self
            .sessions
            .get(&session_id)
            .is_some_and(|s| s.members.is_empty())
        {
            self.sessions.remove(&session_id);
            self.events.push(Event::SessionClosed {
                ts_us: now_us,
                session: session_id,
            });
            return Vec::new();
        }
        self.roster_broadcast(session_id, None)
    }

    fn check_member(&self, msg: &WireMessage) -> Result<(), OrchestratorError> {
        let s = self
            .sessions
            .get(&msg.session_id)
            .ok_or(OrchestratorError::NoSuchSession(msg.session_id))?;
        if !s.members.contains_key(&msg.sender_id) {
            return Err(OrchestratorError::NotAMember {
                session: msg.session_id,
                member: msg.sender_id,
            });
        }
        Ok(())
    }

    fn fan_out(&self, msg: &WireMessage) -> Vec<Outbound> {
        self.sessions[&msg.session_id]
            .members
            .keys()
            .filter(|&&m| m != msg.sender_id)
            .map(|&to| Outbound {
                to,
                msg: msg.clone(),
            })
            .collect()
    }

    /// Forwards a MEDIA_PC or MEDIA_AUDIO message to every other member.
    pub fn route_media(&mut self, msg: &WireMessage) -> Result<Vec<Outbound>, OrchestratorError> {
        if !msg.msg_type.is_media() {
            return Err(OrchestratorError::Unexpected(msg.msg_type));
        }
        self.check_member(msg)?;
        let out = self.fan_out(msg);
        let size = msg.encoded_len() as u64;
        let st = self
            .stats
            .entry((msg.session_id, msg.sender_id))
            .or_default();
        if msg.msg_type == MsgType::MediaAudio {
            st.audio_packets_in += 1;
            st.audio_bytes_in += size;
        } else {
            st.frames_in += 1;
            st.bytes_in += size;
            st.frames_out += out.len() as u64;
            st.bytes_out += size * out.len() as u64;
            let m = self
                .sessions
                .get_mut(&msg.session_id)
                .and_then(|s| s.members.get_mut(&msg.sender_id))
                .expect("membership checked");
            m.media_seq_high = Some(m.media_seq_high.map_or(msg.seq, |h| h.max(msg.seq)));
        }
        Ok(out)
    }

    /// Stores the sender's pose and forwards it to every other member.
    pub fn route_position(
        &mut self,
        msg: &WireMessage,
    ) -> Result<Vec<Outbound>, OrchestratorError> {
        if msg.msg_type != MsgType::Position {
            return Err(OrchestratorError::Unexpected(msg.msg_type));
        }
        self.check_member(msg)?;
        let pose =
            Pose::decode(&msg.payload).map_err(|e| OrchestratorError::Payload(e.to_string()))?;
        if let Some(m) = self
            .sessions
            .get_mut(&msg.session_id)
            .and_then(|s| s.members.get_mut(&msg.sender_id))
        {
            m.pose = pose;
        }
        Ok(self.fan_out(msg))
    }

    /// Expires members silent for longer than the heartbeat timeout. Each
    /// expiry sends ERROR(PEER_TIMEOUT) and a ROSTER to the survivors.
    pub fn heartbeat_tick(&mut self, now_us: u64) -> (Vec<(u32, u32)>, Vec<Outbound>) {
        self.now_us = self.now_us.max(now_us);
        let timeout = self.config.heartbeat_timeout_ms * 1000;
        let expired: Vec<(u32, u32)> = self
            .sessions
            .values()
            .flat_map(|s| {
                s.members
                    .values()
                    .filter(|m| now_us.saturating_sub(m.last_heartbeat_us) > timeout)
                    .map(|m| (s.session_id, m.member_id))
            })
            .collect();
        let mut out = Vec::new();
        for &(session, member) in &expired {
            self.remove_member(session, member).expect("listed member");
            self.events.push(Event::Expired {
                ts_us: now_us,
                session,
                member,
            });
            let survivors: Vec<u32> = self
                .sessions
                .get(&session)
                .map(|s| s.members.keys().copied().collect())
                .unwrap_or_default();
            let payload = ErrorPayload {
                code: ErrorCode::PeerTimeout,
                text: format!("member {member} timed out"),
            }
            .encode();
            for to in survivors {
                out.push(self.reply(to, MsgType::Error, session, payload.clone()));
            }
            out.extend(self.after_removal(session, now_us));
        }
        (expired, out)
    }

    fn touch(&mut self, msg: &WireMessage, now_us: u64) {
        if let Some(m) = self
            .sessions
            .get_mut(&msg.session_id)
            .and_then(|s| s.members.get_mut(&msg.sender_id))
        {
            m.last_heartbeat_us = m.last_heartbeat_us.max(now_us);
        }
    }

    /// Dispatches one inbound message from the connection identified as
    /// `from`. Failures come back to the sender as ERROR messages.
    pub fn handle(&mut self, from: u32, msg: &WireMessage, now_us: u64) -> Vec<Outbound> {
        self.now_us = self.now_us.max(now_us);
        match self.dispatch(from, msg, now_us) {
            Ok(out) => out,
            Err(err) => {
                self.events.push(Event::Rejected {
                    ts_us: now_us,
                    member: from,
                    code: err.code(),
                    reason: err.to_string(),
                });
                vec![self.error_reply(from, msg.session_id, &err)]
            }
        }
    }

    fn dispatch(
        &mut self,
        from: u32,
        msg: &WireMessage,
        now_us: u64,
    ) -> Result<Vec<Outbound>, OrchestratorError> {
        if msg.sender_id != from && msg.msg_type != MsgType::Hello {
            return Err(OrchestratorError::NotAMember {
                session: msg.session_id,
                member: msg.sender_id,
            });
        }
        self.touch(msg, now_us);
        match msg.msg_type {
            MsgType::Hello => Ok(vec![self.reply(from, MsgType::HelloAck, 0, Vec::new())]),
            MsgType::Create => {
                let max = decode_create(&msg.payload)
                    .map_err(|e| OrchestratorError::Payload(e.to_string()))?;
                let id = self.create_session(max as usize, now_us)?;
                Ok(vec![self.reply(
                    from,
                    MsgType::CreateAck,
                    id,
                    id.to_be_bytes().to_vec(),
                )])
            }
            MsgType::Join => {
                let (seat, roster, mut out) = self.join(msg.session_id, from, now_us)?;
                out.insert(
                    0,
                    self.reply(
                        from,
                        MsgType::JoinAck,
                        msg.session_id,
                        encode_join_ack(seat, &roster),
                    ),
                );
                Ok(out)
            }
            MsgType::Leave => self.leave(msg.session_id, from, now_us),
            MsgType::MediaPc | MsgType::MediaAudio => self.route_media(msg),
            MsgType::Position => self.route_position(msg),
            MsgType::Heartbeat => {
                self.check_member(msg)?;
                Ok(Vec::new())
            }
            other => Err(OrchestratorError::Unexpected(other)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wire::{decode_join_ack, ErrorPayload};

    fn orch() -> Orchestrator {
        Orchestrator::new(OrchestratorConfig::default())
    }

    fn media(session: u32, sender: u32, seq: u32) -> WireMessage {
        let mut m = WireMessage::new(MsgType::MediaPc, session, sender).with_payload(vec![1, 2, 3]);
        m.seq = seq;
        m
    }

    #[test]
    fn create_validates_size_and_issues_fresh_ids() {
        let mut o = orch();
        let a = o.create_session(4, 0).unwrap();
        let b = o.create_session(4, 0).unwrap();
        assert_ne!(a, b);
        assert_eq!(o.create_session(1, 0), Err(OrchestratorError::Config(1)));
        assert_eq!(o.create_session(7, 0), Err(OrchestratorError::Config(7)));
    }

    #[test]
    fn sequential_seating_and_capacity() {
        let mut o = orch();
        let s = o.create_session(4, 0).unwrap();
        for m in 1..=3 {
            o.join(s, m, 0).unwrap();
        }
        let (seat, roster, broadcast) = o.join(s, 4, 0).unwrap();
        assert_eq!(seat, 3);
        assert_eq!(roster.entries.len(), 4);
        assert_eq!(broadcast.len(), 3);
        assert!(broadcast
            .iter()
            .all(|b| b.to != 4 && b.msg.msg_type == MsgType::Roster));
        assert_eq!(o.join(s, 5, 0), Err(OrchestratorError::SessionFull(s)));
        assert_eq!(
            o.join(s, 2, 0),
            Err(OrchestratorError::AlreadyJoined {
                session: s,
                member: 2
            })
        );
        assert_eq!(o.join(99, 1, 0), Err(OrchestratorError::NoSuchSession(99)));
    }

    #[test]
    fn six_member_cap() {
        let mut o = orch();
        let s = o.create_session(6, 0).unwrap();
        for m in 1..=6 {
            o.join(s, m, 0).unwrap();
        }
        assert_eq!(o.join(s, 7, 0), Err(OrchestratorError::SessionFull(s)));
    }

    #[test]
    fn freed_seat_is_reused() {
        let mut o = orch();
        let s = o.create_session(4, 0).unwrap();
        for m in [10, 11, 12] {
            o.join(s, m, 0).unwrap();
        }
        let out = o.leave(s, 11, 0).unwrap();
        assert_eq!(out.len(), 2);
        let (seat, _, _) = o.join(s, 13, 0).unwrap();
        assert_eq!(seat, 1);
        assert_eq!(
            o.leave(s, 11, 0),
            Err(OrchestratorError::NotAMember {
                session: s,
                member: 11
            })
        );
    }

    #[test]
    fn last_leave_closes_session() {
        let mut o = orch();
        let s = o.create_session(2, 0).unwrap();
        o.join(s, 1, 0).unwrap();
        assert!(o.leave(s, 1, 0).unwrap().is_empty());
        assert!(o.session(s).is_none());
        assert_eq!(o.join(s, 1, 0), Err(OrchestratorError::NoSuchSession(s)));
    }

    #[test]
    fn media_fans_out_to_everyone_else() {
        let mut o = orch();
        let s = o.create_session(4, 0).unwrap();
        for m in 1..=4 {
            o.join(s, m, 0).unwrap();
        }
        let out = o.route_media(&media(s, 2, 0)).unwrap();
        let mut to: Vec<u32> = out.iter().map(|x| x.to).collect();
        to.sort();
        assert_eq!(to, vec![1, 3, 4]);
        assert!(out.iter().all(|x| x.msg == media(s, 2, 0)));
        let st = o.relay_stats()[&(s, 2)];
        assert_eq!((st.frames_in, st.frames_out), (1, 3));
        assert_eq!(st.bytes_out, 3 * st.bytes_in);

        let s2 = o.create_session(2, 0).unwrap();
        o.join(s2, 8, 0).unwrap();
        o.join(s2, 9, 0).unwrap();
        let out = o.route_media(&media(s2, 8, 0)).unwrap();
        assert_eq!(out.iter().map(|x| x.to).collect::<Vec<_>>(), vec![9]);
    }

    #[test]
    fn media_order_is_preserved_per_sender() {
        let mut o = orch();
        let s = o.create_session(3, 0).unwrap();
        for m in 1..=3 {
            o.join(s, m, 0).unwrap();
        }
        let mut seen: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for seq in 0..100 {
            for out in o.route_media(&media(s, 1, seq)).unwrap() {
                seen.entry(out.to).or_default().push(out.msg.seq);
            }
        }
        for seqs in seen.values() {
            assert!(seqs.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(seqs.len(), 100);
        }
        assert_eq!(o.session(s).unwrap().members[&1].media_seq_high, Some(99));
    }

    #[test]
    fn non_members_get_errors() {
        let mut o = orch();
        let s = o.create_session(2, 0).unwrap();
        o.join(s, 1, 0).unwrap();
        assert_eq!(
            o.route_media(&media(s, 5, 0)),
            Err(OrchestratorError::NotAMember {
                session: s,
                member: 5
            })
        );
        assert_eq!(
            o.route_media(&media(77, 1, 0)),
            Err(OrchestratorError::NoSuchSession(77))
        );
        let out = o.handle(5, &media(s, 5, 0), 10);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].to, 5);
        let err = ErrorPayload::decode(&out[0].msg.payload).unwrap();
        assert_eq!(err.code, ErrorCode::NotAMember);
    }

    #[test]
    fn positions_are_stored_and_forwarded() {
        let mut o = orch();
        let s = o.create_session(3, 0).unwrap();
        for m in 1..=3 {
            o.join(s, m, 0).unwrap();
        }
        for x in [0.5f32, 1.5] {
            let pose = Pose {
                position: [x, 0.0, 1.0],
                orientation: [0.0, 0.0, 0.0, 1.0],
            };
            let msg = WireMessage::new(MsgType::Position, s, 3).with_payload(pose.encode());
            assert_eq!(o.route_position(&msg).unwrap().len(), 2);
            assert_eq!(o.session(s).unwrap().members[&3].pose, pose);
        }
        let stranger =
            WireMessage::new(MsgType::Position, s, 9).with_payload(Pose::default().encode());
        let out = o.handle(9, &stranger, 0);
        assert_eq!(out[0].msg.msg_type, MsgType::Error);
    }

    #[test]
    fn heartbeat_expiry_and_rejoin() {
        let mut o = orch();
        let s = o.create_session(3, 0).unwrap();
        for m in 1..=3 {
            o.join(s, m, 0).unwrap();
        }
        let hb = |m| WireMessage::new(MsgType::Heartbeat, s, m);
        for t in (1..=5).map(|k| k * 1_000_000) {
            o.handle(1, &hb(1), t);
            o.handle(2, &hb(2), t);
            let (expired, _) = o.heartbeat_tick(t);
            assert!(expired.is_empty(), "t={t}");
        }
        o.handle(1, &hb(1), 5_500_000);
        o.handle(2, &hb(2), 5_500_000);
        // Member 3 has been silent since t=0.
        let (expired, out) = o.heartbeat_tick(5_500_000);
        assert_eq!(expired, vec![(s, 3)]);
        let kinds: Vec<(u32, MsgType)> = out.iter().map(|x| (x.to, x.msg.msg_type)).collect();
        assert_eq!(
            kinds,
            vec![
                (1, MsgType::Error),
                (2, MsgType::Error),
                (1, MsgType::Roster),
                (2, MsgType::Roster)
            ]
        );
        assert_eq!(
            ErrorPayload::decode(&out[0].msg.payload).unwrap().code,
            ErrorCode::PeerTimeout
        );
        let (seat, roster, _) = o.join(s, 3, 6_600_000).unwrap();
        assert_eq!(seat, 2);
        assert_eq!(roster.entries.len(), 3);
    }

    #[test]
    fn handle_drives_the_signaling_flow() {
        let mut o = orch();
        let hello = WireMessage::new(MsgType::Hello, 0, 1);
        assert_eq!(o.handle(1, &hello, 0)[0].msg.msg_type, MsgType::HelloAck);
        let create = WireMessage::new(MsgType::Create, 0, 1).with_payload(vec![4]);
        let ack = &o.handle(1, &create, 0)[0];
        assert_eq!(ack.msg.msg_type, MsgType::CreateAck);
        let s = ack.msg.session_id;
        let join = |m| WireMessage::new(MsgType::Join, s, m);
        let out = o.handle(1, &join(1), 0);
        assert_eq!(out.len(), 1);
        let (seat, roster) = decode_join_ack(&out[0].msg.payload).unwrap();
        assert_eq!((seat, roster.entries.len()), (0, 1));
        let out = o.handle(2, &join(2), 0);
        assert_eq!(out.len(), 2);
        assert_eq!(out[1].to, 1);
        assert_eq!(
            Roster::decode(&out[1].msg.payload).unwrap().entries.len(),
            2
        );
        let bad = WireMessage::new(MsgType::Create, 0, 1).with_payload(vec![9]);
        let err = &o.handle(1, &bad, 0)[0];
        assert_eq!(
            ErrorPayload::decode(&err.msg.payload).unwrap().code,
            ErrorCode::Config
        );
        // Spoofed sender ids are refused.
        let spoof = media(s, 2, 0);
        assert_eq!(o.handle(1, &spoof, 0)[0].msg.msg_type, MsgType::Error);
        let events = o.take_events();
        assert!(events.iter().any(|e| matches!(
            e,
            Event::Joined {
                member: 2,
                seat: 1,
                ..
            }
        )));
    }
}
