//! Framed binary protocol between participants and the orchestrator.
//!
//! Every frame is a fixed 28-byte big-endian header followed by the payload:
//!
//! ```text
//! offset size field
//!      0    2 magic "HM"
//!      2    1 version (1)
//!      3    1 msg_type
//!      4    4 session_id (0 = unassigned)
//!      8    4 sender_id
//!     12    4 seq, per (sender, msg_type)
//!     16    8 send_ts_us, sender clock
//!     24    4 payload_len (<= 16 MiB)
//!     28    n payload
//! ```
//!
//! Frames travel over a reliable in-order byte stream; there is no
//! application-level retransmission.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAGIC: &[u8; 2] = b"HM";
pub const PROTOCOL_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 28;
pub const MAX_PAYLOAD: usize = 16 * 1024 * 1024;
pub const DEFAULT_PORT: u16 = 9470;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum MsgType {
    Hello = 1,
    HelloAck = 2,
    Create = 3,
    CreateAck = 4,
    Join = 5,
    JoinAck = 6,
    Leave = 7,
    MediaPc = 8,
    MediaAudio = 9,
    Position = 10,
    Heartbeat = 11,
    Error = 12,
    Roster = 13,
}

impl MsgType {
    pub const ALL: [MsgType; 13] = [
        MsgType::Hello,
        MsgType::HelloAck,
        MsgType::Create,
        MsgType::CreateAck,
        MsgType::Join,
        MsgType::JoinAck,
        MsgType::Leave,
        MsgType::MediaPc,
        MsgType::MediaAudio,
        MsgType::Position,
        MsgType::Heartbeat,
        MsgType::Error,
        MsgType::Roster,
    ];

    pub fn from_u8(v: u8) -> Option<Self> {
        Self::ALL.get((v as usize).wrapping_sub(1)).copied()
    }

    pub fn is_media(self) -> bool {
        matches!(self, MsgType::MediaPc | MsgType::MediaAudio)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireMessage {
    pub msg_type: MsgType,
    pub session_id: u32,
    pub sender_id: u32,
    pub seq: u32,
    pub send_ts_us: u64,
    pub payload: Vec<u8>,
}

impl WireMessage {
    pub fn new(msg_type: MsgType, session_id: u32, sender_id: u32) -> Self {
        Self {
            msg_type,
            session_id,
            sender_id,
            seq: 0,
            send_ts_us: 0,
            payload: Vec::new(),
        }
    }

    pub fn with_payload(mut self, payload: Vec<u8>) -> Self {
        self.payload = payload;
        self
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.payload.len()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("incomplete frame: {needed} more bytes needed")]
    NeedMoreData { needed: usize },
    #[error("bad frame magic at byte {offset}")]
    Frame { offset: usize },
    #[error("protocol error at byte {offset}: {reason}")]
    Protocol { offset: usize, reason: String },
    #[error("payload of {len} bytes at byte {offset} exceeds the 16 MiB limit")]
    PayloadTooLarge { offset: usize, len: usize },
    #[error("malformed {what} payload")]
    Payload { what: &'static str },
}

pub fn encode_message(m: &WireMessage) -> Result<Vec<u8>, WireError> {
    let mut out = Vec::with_capacity(m.encoded_len());
    encode_into(m, &mut out)?;
    Ok(out)
}

/// Appends one encoded frame to `out`.
pub fn encode_into(m: &WireMessage, out: &mut Vec<u8>) -> Result<(), WireError> {
    if m.payload.len() > MAX_PAYLOAD {
        return Err(WireError::PayloadTooLarge {
            offset: 24,
            len: m.payload.len(),
        });
    }
    out.extend_from_slice(MAGIC);
    out.push(PROTOCOL_VERSION);
    out.push(m.msg_type as u8);
    out.extend_from_slice(&m.session_id.to_be_bytes());
    out.extend_from_slice(&m.sender_id.to_be_bytes());
    out.extend_from_slice(&m.seq.to_be_bytes());
    out.extend_from_slice(&m.send_ts_us.to_be_bytes());
    out.extend_from_slice(&(m.payload.len() as u32).to_be_bytes());
    out.extend_from_slice(&m.payload);
    Ok(())
}

fn be_u32(b: &[u8]) -> u32 {
    u32::from_be_bytes([b[0], b[1], b[2], b[3]])
}

/// Parses one frame from the front of `bytes`, returning it with the number
/// of bytes consumed. Reads nothing past the declared frame length.
pub fn decode_message(bytes: &[u8]) -> Result<(WireMessage, usize), WireError> {
    // Validate what is available before asking for more, so garbage fails
    // fast instead of stalling a stream.
    if !bytes.is_empty() && bytes[0] != MAGIC[0] || bytes.len() >= 2 && bytes[1] != MAGIC[1] {
        return Err(WireError::Frame { offset: 0 });
    }
    if bytes.len() >= 3 && bytes[2] != PROTOCOL_VERSION {
        return Err(WireError::Protocol {
            offset: 2,
            reason: format!("unsupported version {}", bytes[2]),
        });
    }
    if bytes.len() >= 4 && MsgType::from_u8(bytes[3]).is_none() {
        return Err(WireError::Protocol {
            offset: 3,
            reason: format!("unknown message type {}", bytes[3]),
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(WireError::NeedMoreData {
            needed: HEADER_LEN - bytes.len(),
        });
    }
    let len = be_u32(&bytes[24..28]) as usize;
    if len > MAX_PAYLOAD {
        return Err(WireError::PayloadTooLarge { offset: 24, len });
    }
    let total = HEADER_LEN + len;
    if bytes.len() < total {
        return Err(WireError::NeedMoreData {
            needed: total - bytes.len(),
        });
    }
    let msg = WireMessage {
        msg_type: MsgType::from_u8(bytes[3]).expect("checked above"),
        session_id: be_u32(&bytes[4..8]),
        sender_id: be_u32(&bytes[8..12]),
        seq: be_u32(&bytes[12..16]),
        send_ts_us: u64::from_be_bytes(bytes[16..24].try_into().unwrap()),
        payload: bytes[HEADER_LEN..total].to_vec(),
    };
    Ok((msg, total))
}

/// Offset of the next candidate frame start after a framing error at the
/// front of `bytes`, if any.
pub fn resync_offset(bytes: &[u8]) -> Option<usize> {
    (1..bytes.len())
        .find(|&i| bytes[i] == MAGIC[0] && bytes.get(i + 1).is_none_or(|&b| b == MAGIC[1]))
}

/// Per-connection stream decoder.
#[derive(Debug, Default)]
pub struct FrameDecoder {
    buf: Vec<u8>,
    skipped: usize,
}

impl FrameDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    pub fn buffered(&self) -> usize {
        self.buf.len()
    }

    /// Bytes discarded while resynchronizing.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    /// Next complete frame, `Ok(None)` when more data is needed. After an
    /// error the offending bytes stay buffered until [`FrameDecoder::resync`].
    pub fn next_message(&mut self) -> Result<Option<WireMessage>, WireError> {
        match decode_message(&self.buf) {
            Ok((msg, used)) => {
                self.buf.drain(..used);
                Ok(Some(msg))
            }
            Err(WireError::NeedMoreData { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Drops bytes up to the next plausible frame start.
    pub fn resync(&mut self) {
        let cut = resync_offset(&self.buf).unwrap_or(self.buf.len());
        self.skipped += cut;
        self.buf.drain(..cut);
    }
}

// ---------------------------------------------------------------------------
// Typed payloads

/// `ERROR` payload codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[repr(u16)]
pub enum ErrorCode {
    NoSuchSession = 1,
    SessionFull = 2,
    AlreadyJoined = 3,
    NotAMember = 4,
    PeerTimeout = 5,
    Config = 6,
    Protocol = 7,
}

impl ErrorCode {
    pub fn from_u16(v: u16) -> Option<Self> {
        use ErrorCode::*;
        [
            NoSuchSession,
            SessionFull,
            AlreadyJoined,
            NotAMember,
            PeerTimeout,
            Config,
            Protocol,
        ]
        .into_iter()
        .find(|c| *c as u16 == v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorPayload {
    pub code: ErrorCode,
    pub text: String,
}

impl ErrorPayload {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = (self.code as u16).to_be_bytes().to_vec();
        out.extend_from_slice(self.text.as_bytes());
        out
    }

    pub fn decode(b: &[u8]) -> Result<Self, WireError> {
        let bad = WireError::Payload { what: "ERROR" };
        if b.len() < 2 {
            return Err(bad);
        }
        let code = ErrorCode::from_u16(u16::from_be_bytes([b[0], b[1]])).ok_or(bad.clone())?;
        let text = String::from_utf8(b[2..].to_vec()).map_err(|_| bad)?;
        Ok(Self { code, text })
    }
}

/// `POSITION` payload: position (m) and orientation quaternion (x, y, z, w).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub position: [f32; 3],
    pub orientation: [f32; 4],
}

impl Pose {
    pub const LEN: usize = 28;

    pub fn encode(&self) -> Vec<u8> {
        self.position
            .iter()
            .chain(&self.orientation)
            .flat_map(|v| v.to_be_bytes())
            .collect()
    }

    pub fn decode(b: &[u8]) -> Result<Self, WireError> {
        if b.len() != Self::LEN {
            return Err(WireError::Payload { what: "POSITION" });
        }
        let f = |i: usize| f32::from_be_bytes(b[4 * i..4 * i + 4].try_into().unwrap());
        Ok(Self {
            position: [f(0), f(1), f(2)],
            orientation: [f(3), f(4), f(5), f(6)],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RosterEntry {
    pub member_id: u32,
    pub seat: u8,
}

/// `ROSTER` payload: u8 count, then (u32 member_id, u8 seat) per member.
/// `JOIN_ACK` is a u8 seat followed by the same roster encoding.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Roster {
    pub entries: Vec<RosterEntry>,
}

impl Roster {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = vec![self.entries.len() as u8];
        for e in &self.entries {
            out.extend_from_slice(&e.member_id.to_be_bytes());
            out.push(e.seat);
        }
        out
    }

    pub fn decode(b: &[u8]) -> Result<Self, WireError> {
        let bad = WireError::Payload { what: "ROSTER" };
        let (&count, rest) = b.split_first().ok_or(bad.clone())?;
        if rest.len() != 5 * count as usize {
            return Err(bad);
        }
        let entries = rest
            .chunks_exact(5)
            .map(|c| RosterEntry {
                member_id: be_u32(c),
                seat: c[4],
            })
            .collect();
        Ok(Self { entries })
    }
}

pub fn encode_join_ack(seat: u8, roster: &Roster) -> Vec<u8> {
    let mut out = vec![seat];
    out.extend(roster.encode());
    out
}

pub fn decode_join_ack(b: &[u8]) -> Result<(u8, Roster), WireError> {
    let (&seat, rest) = b
        .split_first()
        .ok_or(WireError::Payload { what: "JOIN_ACK" })?;
    Ok((seat, Roster::decode(rest)?))
}

/// `CREATE` payload: u8 max_members.
pub fn decode_create(b: &[u8]) -> Result<u8, WireError> {
    match b {
        [n] => Ok(*n),
        _ => Err(WireError::Payload { what: "CREATE" }),
    }
}

/// `CREATE_ACK` payload: u32 session_id.
pub fn decode_create_ack(b: &[u8]) -> Result<u32, WireError> {
    if b.len() != 4 {
        return Err(WireError::Payload { what: "CREATE_ACK" });
    }
    Ok(be_u32(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(msg_type: MsgType, payload: Vec<u8>) -> WireMessage {
        WireMessage {
            msg_type,
            session_id: 7,
            sender_id: 42,
            seq: 3,
            send_ts_us: 1_700_000_000_000_000,
            payload,
        }
    }

    #[test]
    fn empty_heartbeat_is_header_only() {
        let bytes = encode_message(&sample(MsgType::Heartbeat, vec![])).unwrap();
        assert_eq!(bytes.len(), 2 + 1 + 1 + 4 + 4 + 4 + 8 + 4);
        assert_eq!(bytes.len(), HEADER_LEN);
        assert_eq!(&bytes[..4], &[b'H', b'M', 1, 11]);
    }

    #[test]
    fn payload_size_boundary() {
        let at_limit = sample(MsgType::MediaPc, vec![0; MAX_PAYLOAD]);
        let bytes = encode_message(&at_limit).unwrap();
        assert_eq!(decode_message(&bytes).unwrap().0, at_limit);
        let over = sample(MsgType::MediaPc, vec![0; MAX_PAYLOAD + 1]);
        assert!(matches!(
            encode_message(&over),
            Err(WireError::PayloadTooLarge { .. })
        ));
    }

    #[test]
    fn declared_oversize_is_rejected_before_buffering() {
        let mut bytes = encode_message(&sample(MsgType::MediaPc, vec![])).unwrap();
        bytes[24..28].copy_from_slice(&((MAX_PAYLOAD + 1) as u32).to_be_bytes());
        assert_eq!(
            decode_message(&bytes),
            Err(WireError::PayloadTooLarge {
                offset: 24,
                len: MAX_PAYLOAD + 1
            })
        );
    }

    #[test]
    fn truncated_header_needs_more() {
        let bytes = encode_message(&sample(MsgType::Join, vec![])).unwrap();
        assert_eq!(
            decode_message(&bytes[..10]),
            Err(WireError::NeedMoreData { needed: 18 })
        );
        assert_eq!(
            decode_message(&[]),
            Err(WireError::NeedMoreData { needed: 28 })
        );
    }

    #[test]
    fn truncated_payload_needs_more() {
        let bytes = encode_message(&sample(MsgType::MediaPc, vec![9; 100])).unwrap();
        assert_eq!(
            decode_message(&bytes[..100]),
            Err(WireError::NeedMoreData { needed: 28 })
        );
    }

    #[test]
    fn bad_magic_version_and_type() {
        assert_eq!(decode_message(b"XM"), Err(WireError::Frame { offset: 0 }));
        assert_eq!(decode_message(b"HX"), Err(WireError::Frame { offset: 0 }));
        let mut bytes = encode_message(&sample(MsgType::Leave, vec![])).unwrap();
        bytes[2] = 2;
        assert!(matches!(
            decode_message(&bytes),
            Err(WireError::Protocol { offset: 2, .. })
        ));
        bytes[2] = 1;
        bytes[3] = 14;
        assert!(matches!(
            decode_message(&bytes),
            Err(WireError::Protocol { offset: 3, .. })
        ));
        bytes[3] = 0;
        assert!(matches!(
            decode_message(&bytes),
            Err(WireError::Protocol { offset: 3, .. })
        ));
    }

    #[test]
    fn two_concatenated_frames() {
        let a = sample(MsgType::Position, Pose::default().encode());
        let b = sample(MsgType::MediaAudio, vec![1, 2, 3]);
        let mut bytes = encode_message(&a).unwrap();
        let first_len = bytes.len();
        bytes.extend(encode_message(&b).unwrap());
        let (m1, used1) = decode_message(&bytes).unwrap();
        assert_eq!((m1, used1), (a, first_len));
        assert_eq!(first_len, HEADER_LEN + Pose::LEN);
        let (m2, used2) = decode_message(&bytes[used1..]).unwrap();
        assert_eq!(m2, b);
        assert_eq!(used1 + used2, bytes.len());
    }

    #[test]
    fn stream_decoder_resynchronizes() {
        let msgs: Vec<_> = (0..3)
            .map(|i| {
                let mut m = sample(MsgType::MediaPc, vec![i as u8; 50]);
                m.seq = i;
                m
            })
            .collect();
        let frames: Vec<Vec<u8>> = msgs.iter().map(|m| encode_message(m).unwrap()).collect();
        let mut stream = frames[0].clone();
        let mut corrupt = frames[1].clone();
        corrupt[0] = b'Z';
        stream.extend(&corrupt);
        stream.extend(&frames[2]);

        let mut dec = FrameDecoder::new();
        // Feed in awkward chunk sizes.
        let mut got = Vec::new();
        for chunk in stream.chunks(17) {
            dec.push(chunk);
            loop {
                match dec.next_message() {
                    Ok(Some(m)) => got.push(m),
                    Ok(None) => break,
                    Err(_) => dec.resync(),
                }
            }
        }
        assert_eq!(got.first(), Some(&msgs[0]));
        assert_eq!(got.last(), Some(&msgs[2]));
        assert!(!got.contains(&msgs[1]));
        assert_eq!(dec.buffered(), 0);
    }

    #[test]
    fn payload_codecs() {
        let roster = Roster {
            entries: vec![
                RosterEntry {
                    member_id: 1,
                    seat: 0,
                },
                RosterEntry {
                    member_id: 9,
                    seat: 2,
                },
            ],
        };
        assert_eq!(Roster::decode(&roster.encode()).unwrap(), roster);
        assert_eq!(
            decode_join_ack(&encode_join_ack(2, &roster)).unwrap(),
            (2, roster)
        );
        assert!(Roster::decode(&[2, 0, 0]).is_err());

        let e = ErrorPayload {
            code: ErrorCode::SessionFull,
            text: "session 3 is full".into(),
        };
        assert_eq!(ErrorPayload::decode(&e.encode()).unwrap(), e);
        assert!(ErrorPayload::decode(&[0, 99]).is_err());
        assert!(ErrorPayload::decode(&[0, 1, 0xff]).is_err());

        let pose = Pose {
            position: [0.5, 1.2, -2.0],
            orientation: [
                0.0,
                std::f32::consts::FRAC_1_SQRT_2,
                0.0,
                std::f32::consts::FRAC_1_SQRT_2,
            ],
        };
        assert_eq!(Pose::decode(&pose.encode()).unwrap(), pose);
        assert!(Pose::decode(&[0; 27]).is_err());
    }

    fn any_message() -> impl Strategy<Value = WireMessage> {
        (
            0usize..MsgType::ALL.len(),
            any::<u32>(),
            any::<u32>(),
            any::<u32>(),
            any::<u64>(),
            proptest::collection::vec(any::<u8>(), 0..512),
        )
            .prop_map(
                |(t, session_id, sender_id, seq, send_ts_us, payload)| WireMessage {
                    msg_type: MsgType::ALL[t],
                    session_id,
                    sender_id,
                    seq,
                    send_ts_us,
                    payload,
                },
            )
    }

    proptest! {
        #[test]
        fn roundtrip(m in any_message()) {
            let bytes = encode_message(&m).unwrap();
            let (back, used) = decode_message(&bytes).unwrap();
            prop_assert_eq!(used, bytes.len());
            prop_assert_eq!(back, m);
        }

        #[test]
        fn decode_is_total(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
            if let Ok((_, used)) = decode_message(&bytes) {
                prop_assert!(used <= bytes.len());
            }
        }
    }
}
