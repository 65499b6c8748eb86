//! Breadth-first occupancy coding of an octree's leaf set.
//!
//! Every occupied internal node contributes one byte, level by level from
//! the root and in ascending Morton order within a level. Bit `k` (LSB
//! first) is set when child `k` is occupied. Leaves emit nothing.

use super::voxel::{BoundingCube, VoxelSet};
use super::CodecError;

pub fn encode_geometry(voxels: &VoxelSet) -> Vec<u8> {
    let depth = voxels.depth as u32;
    let mut out = Vec::new();
    if voxels.is_empty() || depth == 0 {
        return out;
    }
    for level in 0..depth {
        let child_shift = 3 * (depth - level - 1);
        let mut parent: Option<u64> = None;
        let mut last_child: Option<u64> = None;
        let mut byte = 0u8;
        for code in voxels.codes() {
            let child = code >> child_shift;
            if last_child == Some(child) {
                continue;
            }
            last_child = Some(child);
            if parent != Some(child >> 3) {
                if parent.is_some() {
                    out.push(byte);
                }
                parent = Some(child >> 3);
                byte = 0;
            }
            byte |= 1 << (child & 7);
        }
        out.push(byte);
    }
    out
}

/// Reconstructs the leaf Morton codes from an occupancy stream.
pub fn decode_codes(bytes: &[u8], depth: u8) -> Result<Vec<u64>, CodecError> {
    if bytes.is_empty() {
        return Ok(Vec::new());
    }
    if depth == 0 {
        return Err(CodecError::bitstream(
            0,
            "occupancy bytes for a depth-0 tree",
        ));
    }
    let mut nodes = vec![0u64];
    let mut pos = 0usize;
    for _ in 0..depth {
        let remaining = bytes.len() - pos;
        if remaining < nodes.len() {
            return Err(CodecError::bitstream(
                bytes.len(),
                format!(
                    "truncated occupancy stream: {} more node bytes needed",
                    nodes.len() - remaining
                ),
            ));
        }
        let mut next = Vec::with_capacity(nodes.len() * 4);
        for &node in &nodes {
            let b = bytes[pos];
            if b == 0 {
                return Err(CodecError::bitstream(pos, "internal node with no children"));
            }
            for k in 0..8 {
                if (b >> k) & 1 == 1 {
                    next.push(node << 3 | k);
                }
            }
            pos += 1;
        }
        nodes = next;
    }
    if pos != bytes.len() {
        return Err(CodecError::bitstream(
            pos,
            format!("{} trailing bytes after leaf level", bytes.len() - pos),
        ));
    }
    Ok(nodes)
}

/// Decodes leaf cells and places a point at each cell center.
pub fn decode_geometry(
    bytes: &[u8],
    depth: u8,
    bbox: &BoundingCube,
) -> Result<Vec<(u64, [f64; 3])>, CodecError> {
    Ok(decode_codes(bytes, depth)?
        .into_iter()
        .map(|code| (code, bbox.cell_center(code, depth)))
        .collect())
}
