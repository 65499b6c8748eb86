//! Browser bindings for the static demo page in `www/`.
//!
//! Three operations: capture the synthetic subject, push one frame through
//! the codec, and run a short virtual-clock call.

use wasm_bindgen::prelude::*;

use holomeet::capture::{capture_rig, DEFAULT_CAPTURE_RADIUS_M};
use holomeet::codec::{decode_frame, encode_frame, voxelize, CodecConfig, QuantParams};
use holomeet::harness::{self, LinkModel, ScenarioConfig, ServiceProfile};
use holomeet::{PointCloudFrame, SceneConfig};

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn flatten(frame: &PointCloudFrame) -> (Vec<f32>, Vec<u8>) {
    (
        frame.points.iter().flatten().copied().collect(),
        frame.colors.iter().flatten().copied().collect(),
    )
}

fn capture_at(t_ms: f64, target_points: u32, cameras: u32) -> Result<PointCloudFrame, JsError> {
    let scene = SceneConfig {
        target_points,
        cameras,
        ..SceneConfig::default()
    };
    let t_us = (t_ms.max(0.0) * 1000.0) as u64;
    capture_rig(
        &scene,
        &scene.rig(),
        t_us,
        (200, 6000),
        DEFAULT_CAPTURE_RADIUS_M,
    )
    .map_err(js_err)
}

/// A point cloud as flat arrays: `x0 y0 z0 x1 ...` and `r0 g0 b0 r1 ...`.
#[wasm_bindgen]
pub struct Cloud {
    positions: Vec<f32>,
    colors: Vec<u8>,
}

#[wasm_bindgen]
impl Cloud {
    #[wasm_bindgen(getter)]
    pub fn len(&self) -> usize {
        self.positions.len() / 3
    }

    #[wasm_bindgen(js_name = isEmpty)]
    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> Vec<f32> {
        self.positions.clone()
    }

    pub fn colors(&self) -> Vec<u8> {
        self.colors.clone()
    }
}

/// Fused multi-camera capture of the subject at `t_ms` into the animation.
#[wasm_bindgen]
pub fn capture(t_ms: f64, target_points: u32, cameras: u32) -> Result<Cloud, JsError> {
    let (positions, colors) = flatten(&capture_at(t_ms, target_points, cameras)?);
    Ok(Cloud { positions, colors })
}

#[wasm_bindgen]
pub struct CodecReport {
    pub input_points: usize,
    pub voxels: u32,
    pub bytes: usize,
    pub geometry_bytes: usize,
    pub color_bytes: usize,
    pub bits_per_voxel: f64,
    pub mbps_at_15fps: f64,
    pub max_color_error: u8,
    decoded: Cloud,
}

#[wasm_bindgen]
impl CodecReport {
    pub fn decoded(&self) -> Cloud {
        Cloud {
            positions: self.decoded.positions.clone(),
            colors: self.decoded.colors.clone(),
        }
    }
}

/// Encodes and decodes one captured frame with the given octree depth and
/// color quantization.
#[wasm_bindgen]
pub fn codec_roundtrip(
    t_ms: f64,
    target_points: u32,
    octree_depth: u8,
    luma_bits: u8,
    chroma_bits: u8,
) -> Result<CodecReport, JsError> {
    let frame = capture_at(t_ms, target_points, 3)?;
    let cfg = CodecConfig {
        octree_depth,
        quant_params: QuantParams {
            luma_bits,
            chroma_bits,
        },
        ..CodecConfig::default()
    };
    let enc = encode_frame(&frame, &cfg).map_err(js_err)?;
    let bytes = enc.to_bytes().len();
    let dec = decode_frame(&enc).map_err(js_err)?;

    let reference = voxelize(&frame, &enc.bbox(), octree_depth).voxels;
    let max_color_error = reference
        .cells
        .iter()
        .zip(&dec.colors)
        .flat_map(|((_, a), b)| (0..3).map(move |k| a[k].abs_diff(b[k])))
        .max()
        .unwrap_or(0);

    let (positions, colors) = flatten(&dec);
    Ok(CodecReport {
        input_points: frame.len(),
        voxels: enc.point_count,
        bytes,
        geometry_bytes: enc.geometry.len(),
        color_bytes: enc.colors.len(),
        bits_per_voxel: bytes as f64 * 8.0 / enc.point_count.max(1) as f64,
        mbps_at_15fps: bytes as f64 * 8.0 * 15.0 / 1e6,
        max_color_error,
        decoded: Cloud { positions, colors },
    })
}

#[wasm_bindgen]
pub struct CallReport {
    pub frames_rendered: u64,
    pub mean_delay_ms: f64,
    pub stdv_delay_ms: f64,
    pub p95_delay_ms: f64,
    pub mean_mbps: f64,
    pub max_skew_ms: f64,
}

/// A virtual-clock call of `participants` over links with `link_delay_ms`
/// one-way latency each hop. `calibrated` swaps in the fitted stage
/// budgets.
#[wasm_bindgen]
pub fn delay_scenario(
    participants: usize,
    duration_s: f64,
    link_delay_ms: f64,
    calibrated: bool,
    seed: u64,
) -> Result<CallReport, JsError> {
    let base = (link_delay_ms.max(0.0) * 1000.0) as u64;
    let cfg = ScenarioConfig {
        participants,
        duration_s,
        seed,
        link: LinkModel {
            base_delay_us: base,
            jitter_us: (base / 4).min(500),
            ..LinkModel::default()
        },
        service: if calibrated {
            ServiceProfile::PaperCalibration
        } else {
            ServiceProfile::default()
        },
        // Smaller subject keeps the page responsive.
        scene: SceneConfig {
            target_points: 15_000,
            ..SceneConfig::default()
        },
        ..ScenarioConfig::default()
    };
    let r = harness::run_scenario(&cfg).map_err(js_err)?;
    let d = r
        .delay_stats()
        .ok_or_else(|| JsError::new("no frames were rendered"))?;
    let mbps: Vec<f64> = r.streams.iter().map(|s| s.mean_bps / 1e6).collect();
    Ok(CallReport {
        frames_rendered: r.pairs.iter().map(|p| p.frames_rendered).sum(),
        mean_delay_ms: d.mean_ms,
        stdv_delay_ms: d.stdv_ms,
        p95_delay_ms: d.p95_ms,
        mean_mbps: mbps.iter().sum::<f64>() / mbps.len().max(1) as f64,
        max_skew_ms: r
            .skew
            .iter()
            .filter_map(|s| s.skew.as_ref())
            .map(|s| s.max_ms)
            .fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codec_report_is_consistent() {
        let r = codec_roundtrip(0.0, 4_000, 8, 6, 4).unwrap_or_else(|_| panic!("roundtrip"));
        assert_eq!(r.decoded.len() as u32, r.voxels);
        // Header, then the color section's length prefix.
        assert_eq!(r.geometry_bytes + r.color_bytes + 46 + 4, r.bytes);
    }

    #[test]
    fn short_call_renders_frames() {
        let r = delay_scenario(3, 2.0, 10.0, false, 1).unwrap_or_else(|_| panic!("scenario"));
        assert!(r.frames_rendered > 100);
        assert!(r.mean_delay_ms > 20.0, "{}", r.mean_delay_ms);
    }
}
