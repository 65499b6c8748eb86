//! Intra-only point-cloud codec.
//!
//! Geometry is voxelized inside a bounding cube and coded as breadth-first
//! octree occupancy bytes. Colors follow the leaves in Morton order, packed
//! onto a 2D grid and compressed as an image plane. Every frame is coded
//! independently; encoder and decoder keep no state between frames.

mod color;
mod morton;
mod octree;
mod voxel;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capture::PointCloudFrame;

pub use color::{
    compress_colors, decompress_colors, grid_dims, pack_colors, unpack_colors, ColorGrid,
    ColorMode, QuantParams,
};
pub use morton::{decode as morton_decode, encode as morton_encode};
pub use octree::{decode_codes, decode_geometry, encode_geometry};
pub use voxel::{compute_bbox, voxelize, BoundingCube, VoxelSet, Voxelized, MIN_BBOX_SIDE};

/// Frame bitstream magic.
pub const FRAME_MAGIC: &[u8; 4] = b"PCF1";

/// Bytes before the geometry payload.
pub const FRAME_HEADER_LEN: usize = 4 + 4 + 4 + 8 + 4 + 1 + 1 + 16 + 4;

pub const MAX_OCTREE_DEPTH: u8 = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("frame has no points")]
    EmptyFrame,
    #[error("bitstream error at byte {offset}: {reason}")]
    Bitstream { offset: usize, reason: String },
    #[error("header error: {0}")]
    Header(String),
    #[error("{requested} colors requested from a grid of capacity {capacity}")]
    Size { requested: usize, capacity: usize },
    #[error("invalid codec config: {0}")]
    InvalidConfig(String),
}

impl CodecError {
    pub(crate) fn bitstream(offset: usize, reason: impl Into<String>) -> Self {
        CodecError::Bitstream {
            offset,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BboxPolicy {
    /// One cube for every frame; points outside it are dropped.
    Fixed { center: [f64; 3], side: f64 },
    /// Tight cube recomputed for each frame.
    PerFrame,
}

impl Default for BboxPolicy {
    fn default() -> Self {
        BboxPolicy::Fixed {
            center: [0.0, 1.0, 0.0],
            side: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CodecConfig {
    pub octree_depth: u8,
    pub bbox_policy: BboxPolicy,
    pub color_mode: ColorMode,
    pub quant_params: QuantParams,
}

impl Default for CodecConfig {
    fn default() -> Self {
        Self {
            octree_depth: 9,
            bbox_policy: BboxPolicy::default(),
            color_mode: ColorMode::Quant,
            quant_params: QuantParams::default(),
        }
    }
}

impl CodecConfig {
    pub fn validate(&self) -> Result<(), CodecError> {
        if !(1..=MAX_OCTREE_DEPTH).contains(&self.octree_depth) {
            return Err(CodecError::InvalidConfig(format!(
                "octree_depth {} outside [1, {MAX_OCTREE_DEPTH}]",
                self.octree_depth
            )));
        }
        if let BboxPolicy::Fixed { side, center } = self.bbox_policy {
            if !(side > 0.0 && side.is_finite()) || center.iter().any(|c| !c.is_finite()) {
                return Err(CodecError::InvalidConfig(format!(
                    "fixed bbox needs a positive finite side, got {side}"
                )));
            }
        }
        self.quant_params.validate()
    }
}

/// One coded frame. `to_bytes`/`from_bytes` implement the `PCF1` layout.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedFrame {
    pub source_id: u32,
    pub seq: u32,
    pub capture_ts_us: u64,
    pub point_count: u32,
    pub octree_depth: u8,
    pub bbox_center: [f32; 3],
    pub bbox_side: f32,
    pub color_mode: ColorMode,
    pub geometry: Vec<u8>,
    pub colors: Vec<u8>,
}

impl EncodedFrame {
    pub fn bbox(&self) -> BoundingCube {
        BoundingCube {
            center: self.bbox_center.map(f64::from),
            side: self.bbox_side as f64,
        }
    }

    pub fn encoded_len(&self) -> usize {
        FRAME_HEADER_LEN + self.geometry.len() + 4 + self.colors.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(FRAME_MAGIC);
        out.extend_from_slice(&self.source_id.to_be_bytes());
        out.extend_from_slice(&self.seq.to_be_bytes());
        out.extend_from_slice(&self.capture_ts_us.to_be_bytes());
        out.extend_from_slice(&self.point_count.to_be_bytes());
        out.push(self.octree_depth);
        out.push(self.color_mode.to_u8());
        for c in self.bbox_center {
            out.extend_from_slice(&c.to_be_bytes());
        }
        out.extend_from_slice(&self.bbox_side.to_be_bytes());
        out.extend_from_slice(&(self.geometry.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.geometry);
        out.extend_from_slice(&(self.colors.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.colors);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != FRAME_MAGIC {
            return Err(CodecError::bitstream(0, "bad frame magic"));
        }
        let source_id = r.u32()?;
        let seq = r.u32()?;
        let capture_ts_us = r.u64()?;
        let point_count = r.u32()?;
        let octree_depth = r.u8()?;
        if !(1..=MAX_OCTREE_DEPTH).contains(&octree_depth) {
            return Err(CodecError::Header(format!(
                "octree depth {octree_depth} out of range"
            )));
        }
        let mode_byte = r.u8()?;
        let color_mode = ColorMode::from_u8(mode_byte)
            .ok_or_else(|| CodecError::Header(format!("unknown color mode {mode_byte}")))?;
        let bbox_center = [r.f32()?, r.f32()?, r.f32()?];
        let bbox_side = r.f32()?;
        if !(bbox_side > 0.0 && bbox_side.is_finite()) || bbox_center.iter().any(|c| !c.is_finite())
        {
            return Err(CodecError::Header(format!("invalid bbox side {bbox_side}")));
        }
        let geometry_len = r.u32()? as usize;
        let geometry = r.take(geometry_len)?.to_vec();
        let color_len = r.u32()? as usize;
        let colors = r.take(color_len)?.to_vec();
        if r.pos != bytes.len() {
            return Err(CodecError::bitstream(r.pos, "trailing bytes after frame"));
        }
        Ok(Self {
            source_id,
            seq,
            capture_ts_us,
            point_count,
            octree_depth,
            bbox_center,
            bbox_side,
            color_mode,
            geometry,
            colors,
        })
    }
}

/// Byte range of the per-send fields (source id, seq, capture time) in a
/// `PCF1` frame. Frames that differ only here decode to the same cloud.
pub const FRAME_ID_RANGE: std::ops::Range<usize> = 4..20;

/// Reads `(source_id, seq, capture_ts_us)` without decoding the frame.
pub fn peek_ids(bytes: &[u8]) -> Option<(u32, u32, u64)> {
    if bytes.len() < FRAME_HEADER_LEN || &bytes[..4] != FRAME_MAGIC {
        return None;
    }
    let u32_at = |i: usize| u32::from_be_bytes(bytes[i..i + 4].try_into().unwrap());
    let ts = u64::from_be_bytes(bytes[12..20].try_into().unwrap());
    Some((u32_at(4), u32_at(8), ts))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                CodecError::bitstream(
                    self.bytes.len(),
                    format!("truncated frame: {n} bytes needed at offset {}", self.pos),
                )
            })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32, CodecError> {
        Ok(f32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }
}

/// Side information from one encode.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EncodeStats {
    /// Points outside the bounding cube.
    pub dropped: usize,
    pub input_points: usize,
    pub voxelize_us: u64,
    pub geometry_us: u64,
    pub color_us: u64,
}

impl EncodeStats {
    pub fn total_us(&self) -> u64 {
        self.voxelize_us + self.geometry_us + self.color_us
    }
}

fn elapsed_us(start: Option<Instant>) -> u64 {
    start.map_or(0, |s| s.elapsed().as_micros() as u64)
}

/// Encodes one frame.
pub fn encode_frame(
    frame: &PointCloudFrame,
    cfg: &CodecConfig,
) -> Result<EncodedFrame, CodecError> {
    encode_frame_with_stats(frame, cfg, false).map(|(f, _)| f)
}

/// [`encode_frame`] plus drop counts and, when `timed`, per-stage wall times.
pub fn encode_frame_with_stats(
    frame: &PointCloudFrame,
    cfg: &CodecConfig,
    timed: bool,
) -> Result<(EncodedFrame, EncodeStats), CodecError> {
    cfg.validate()?;
    if frame.points.len() != frame.colors.len() {
        return Err(CodecError::InvalidConfig(format!(
            "{} points but {} colors",
            frame.points.len(),
            frame.colors.len()
        )));
    }
    let clock = || timed.then(Instant::now);
    let depth = cfg.octree_depth;

    let t0 = clock();
    let bbox = match cfg.bbox_policy {
        BboxPolicy::Fixed { center, side } => BoundingCube { center, side },
        BboxPolicy::PerFrame => compute_bbox(frame).unwrap_or(BoundingCube {
            center: [0.0; 3],
            side: MIN_BBOX_SIDE,
        }),
    }
    .to_wire_precision();
    let Voxelized { voxels, dropped } = voxelize(frame, &bbox, depth);
    let voxelize_us = elapsed_us(t0);

    let t1 = clock();
    let geometry = encode_geometry(&voxels);
    let geometry_us = elapsed_us(t1);

    let t2 = clock();
    let grid = pack_colors(&voxels);
    let colors = compress_colors(&grid, cfg.color_mode, &cfg.quant_params);
    let color_us = elapsed_us(t2);

    let encoded = EncodedFrame {
        source_id: frame.source_id,
        seq: frame.seq,
        capture_ts_us: frame.capture_ts_us,
        point_count: voxels.len() as u32,
        octree_depth: depth,
        bbox_center: bbox.center.map(|c| c as f32),
        bbox_side: bbox.side as f32,
        color_mode: cfg.color_mode,
        geometry,
        colors,
    };
    let stats = EncodeStats {
        dropped,
        input_points: frame.points.len(),
        voxelize_us,
        geometry_us,
        color_us,
    };
    Ok((encoded, stats))
}

/// Decodes a frame: points at leaf-cell centers with colors in Morton order.
pub fn decode_frame(enc: &EncodedFrame) -> Result<PointCloudFrame, CodecError> {
    let bbox = enc.bbox();
    let leaves = decode_geometry(&enc.geometry, enc.octree_depth, &bbox)?;
    if leaves.len() != enc.point_count as usize {
        return Err(CodecError::Header(format!(
            "header declares {} points, geometry holds {}",
            enc.point_count,
            leaves.len()
        )));
    }
    let n = leaves.len();
    let (w, h) = grid_dims(n);
    let colors = decompress_colors(&enc.colors, enc.color_mode, w, h, n)?;
    Ok(PointCloudFrame {
        source_id: enc.source_id,
        seq: enc.seq,
        capture_ts_us: enc.capture_ts_us,
        points: leaves
            .into_iter()
            .map(|(_, p)| p.map(|c| c as f32))
            .collect(),
        colors,
    })
}

/// Parses and decodes a `PCF1` byte string.
pub fn decode_bytes(bytes: &[u8]) -> Result<PointCloudFrame, CodecError> {
    decode_frame(&EncodedFrame::from_bytes(bytes)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(points: Vec<[f32; 3]>) -> PointCloudFrame {
        let colors = (0..points.len())
            .map(|i| [(i * 3) as u8, (i * 5) as u8, (i * 7) as u8])
            .collect();
        PointCloudFrame {
            source_id: 3,
            seq: 11,
            capture_ts_us: 123_456_789,
            points,
            colors,
        }
    }

    #[test]
    fn header_length_matches_layout() {
        let enc = encode_frame(&cloud(vec![]), &CodecConfig::default()).unwrap();
        assert_eq!(enc.to_bytes().len(), FRAME_HEADER_LEN + 4);
        assert_eq!(FRAME_HEADER_LEN, 46);
    }

    #[test]
    fn empty_frame_encodes_and_decodes() {
        for policy in [BboxPolicy::default(), BboxPolicy::PerFrame] {
            let cfg = CodecConfig {
                bbox_policy: policy,
                ..Default::default()
            };
            let enc = encode_frame(&cloud(vec![]), &cfg).unwrap();
            assert_eq!(enc.point_count, 0);
            assert!(enc.geometry.is_empty() && enc.colors.is_empty());
            let dec = decode_bytes(&enc.to_bytes()).unwrap();
            assert!(dec.is_empty());
            assert_eq!(dec.seq, 11);
        }
    }

    #[test]
    fn all_points_outside_fixed_box() {
        let (enc, stats) = encode_frame_with_stats(
            &cloud(vec![[10.0, 0.0, 0.0], [0.0, -5.0, 0.0]]),
            &CodecConfig::default(),
            false,
        )
        .unwrap();
        assert_eq!(enc.point_count, 0);
        assert_eq!(stats.dropped, 2);
    }

    #[test]
    fn raw_mode_is_lossless_on_merged_colors() {
        let pts: Vec<[f32; 3]> = (0..200)
            .map(|i| {
                let f = i as f32 / 200.0;
                [f - 0.5, 1.0 + f * 0.3, (f * 7.0).sin() * 0.2]
            })
            .collect();
        let frame = cloud(pts);
        let cfg = CodecConfig {
            color_mode: ColorMode::Raw,
            ..Default::default()
        };
        let enc = encode_frame(&frame, &cfg).unwrap();
        let bbox = enc.bbox();
        let merged = voxelize(&frame, &bbox, cfg.octree_depth).voxels;
        let dec = decode_bytes(&enc.to_bytes()).unwrap();
        let expected: Vec<[u8; 3]> = merged.cells.iter().map(|c| c.1).collect();
        assert_eq!(dec.colors, expected);
        assert_eq!(dec.points.len(), enc.point_count as usize);
    }

    #[test]
    fn header_mismatch_is_detected() {
        let mut enc = encode_frame(&cloud(vec![[0.0, 1.0, 0.0]]), &CodecConfig::default()).unwrap();
        enc.point_count = 2;
        assert!(matches!(decode_frame(&enc), Err(CodecError::Header(_))));
    }

    #[test]
    fn truncated_and_corrupt_bitstreams_fail_cleanly() {
        let enc = encode_frame(
            &cloud(vec![[0.0, 1.0, 0.0], [0.2, 1.1, 0.1]]),
            &CodecConfig::default(),
        )
        .unwrap();
        let bytes = enc.to_bytes();
        for cut in 0..bytes.len() {
            assert!(
                decode_bytes(&bytes[..cut]).is_err(),
                "prefix {cut} accepted"
            );
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_bytes(&bad).is_err());
        let mut bad_depth = bytes;
        bad_depth[24] = 0;
        assert!(matches!(
            decode_bytes(&bad_depth),
            Err(CodecError::Header(_))
        ));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = [
            CodecConfig {
                octree_depth: 0,
                ..Default::default()
            },
            CodecConfig {
                octree_depth: 17,
                ..Default::default()
            },
            CodecConfig {
                bbox_policy: BboxPolicy::Fixed {
                    center: [0.0; 3],
                    side: 0.0,
                },
                ..Default::default()
            },
            CodecConfig {
                quant_params: QuantParams {
                    luma_bits: 1,
                    chroma_bits: 4,
                },
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(matches!(
                encode_frame(&cloud(vec![]), &cfg),
                Err(CodecError::InvalidConfig(_))
            ));
        }
    }
}
