use serde::{Deserialize, Serialize};

use super::morton;
use super::CodecError;
use crate::capture::PointCloudFrame;

/// Minimum cube side returned by [`compute_bbox`], in meters.
pub const MIN_BBOX_SIDE: f64 = 1e-6;

/// Axis-aligned bounding cube.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingCube {
    pub center: [f64; 3],
    pub side: f64,
}

impl BoundingCube {
    pub fn min_corner(&self) -> [f64; 3] {
        self.center.map(|c| c - self.side / 2.0)
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        let lo = self.min_corner();
        (0..3).all(|i| p[i] >= lo[i] && p[i] <= lo[i] + self.side)
    }

    /// Edge length of a leaf cell at `depth`.
    pub fn cell_side(&self, depth: u8) -> f64 {
        self.side / (1u64 << depth) as f64
    }

    /// Rounds center and side to the `f32` values carried in the bitstream,
    /// so encoder and decoder agree on the grid.
    pub fn to_wire_precision(self) -> Self {
        Self {
            center: self.center.map(|c| c as f32 as f64),
            side: self.side as f32 as f64,
        }
    }

    /// Center of the leaf cell with Morton code `code`.
    pub fn cell_center(&self, code: u64, depth: u8) -> [f64; 3] {
        let (x, y, z) = morton::decode(code);
        let lo = self.min_corner();
        let s = self.cell_side(depth);
        [
            lo[0] + (x as f64 + 0.5) * s,
            lo[1] + (y as f64 + 0.5) * s,
            lo[2] + (z as f64 + 0.5) * s,
        ]
    }
}

/// Smallest axis-aligned cube holding every point, side grown by 1% so no
/// point sits on the max faces.
pub fn compute_bbox(frame: &PointCloudFrame) -> Result<BoundingCube, CodecError> {
    if frame.points.is_empty() {
        return Err(CodecError::EmptyFrame);
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in &frame.points {
        for i in 0..3 {
            lo[i] = lo[i].min(p[i] as f64);
            hi[i] = hi[i].max(p[i] as f64);
        }
    }
    let extent = (0..3).map(|i| hi[i] - lo[i]).fold(0.0, f64::max);
    Ok(BoundingCube {
        center: [
            (lo[0] + hi[0]) / 2.0,
            (lo[1] + hi[1]) / 2.0,
            (lo[2] + hi[2]) / 2.0,
        ],
        side: (extent * 1.01).max(MIN_BBOX_SIDE),
    })
}

/// Occupied leaf cells of an octree, ascending by Morton code.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VoxelSet {
    pub depth: u8,
    pub cells: Vec<(u64, [u8; 3])>,
}

impl VoxelSet {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn is_valid(&self) -> bool {
        let limit = 1u64 << (3 * self.depth as u32);
        self.cells.windows(2).all(|w| w[0].0 < w[1].0)
            && self.cells.iter().all(|&(code, _)| code < limit)
    }

    pub fn codes(&self) -> impl Iterator<Item = u64> + '_ {
        self.cells.iter().map(|c| c.0)
    }
}

/// Result of [`voxelize`]: the voxel set and how many points fell outside
/// the cube.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Voxelized {
    pub voxels: VoxelSet,
    pub dropped: usize,
}

/// Quantizes points to leaf cells of a `depth`-level octree over `bbox`.
///
/// Points sharing a cell are merged; the cell color is the per-channel
/// rounded mean. Points outside the closed cube are dropped.
pub fn voxelize(frame: &PointCloudFrame, bbox: &BoundingCube, depth: u8) -> Voxelized {
    let lo = bbox.min_corner();
    let cell = bbox.cell_side(depth);
    let max_index = (1u64 << depth) - 1;

    let mut keyed: Vec<(u64, u32)> = Vec::with_capacity(frame.points.len());
    let mut dropped = 0;
    for (i, p) in frame.points.iter().enumerate() {
        let p = [p[0] as f64, p[1] as f64, p[2] as f64];
        if !bbox.contains(p) {
            dropped += 1;
            continue;
        }
        let idx = |a: usize| (((p[a] - lo[a]) / cell).floor() as u64).min(max_index) as u32;
        keyed.push((morton::encode(idx(0), idx(1), idx(2)), i as u32));
    }
    keyed.sort_unstable();

    let mut cells = Vec::new();
    let mut start = 0;
    while start < keyed.len() {
        let code = keyed[start].0;
        let mut end = start;
        let mut sum = [0u64; 3];
        while end < keyed.len() && keyed[end].0 == code {
            let c = frame.colors[keyed[end].1 as usize];
            for k in 0..3 {
                sum[k] += c[k] as u64;
            }
            end += 1;
        }
        let n = (end - start) as u64;
        cells.push((code, sum.map(|s| ((s + n / 2) / n) as u8)));
        start = end;
    }
    Voxelized {
        voxels: VoxelSet { depth, cells },
        dropped,
    }
}
