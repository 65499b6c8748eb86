//! Per-stage processing times for the virtual clock.
//!
//! Stages are pipelined latencies: capture/reconstruction, encode, relay
//! forwarding, and decode. Only the encoder is exclusive (a frame arriving
//! while it is busy is skipped). Decode latency grows with the number of
//! remote streams sharing the receiver, `decode_us + decode_contention_us *
//! (streams - 1)`, which is what processor sharing between concurrent
//! decoders gives when `decode_contention_us == decode_us`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::capture::{capture_rig, SceneConfig, DEFAULT_CAPTURE_RADIUS_M};
use crate::codec::{decode_bytes, encode_frame, CodecConfig, CodecError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceModel {
    pub capture_us: u64,
    pub encode_us: u64,
    pub decode_us: u64,
    pub decode_contention_us: u64,
    pub relay_us: u64,
    /// Half-width of a uniform perturbation applied to capture, encode and
    /// decode independently.
    pub jitter_us: u64,
}

impl ServiceModel {
    /// Host-independent defaults, close to what `calibrate` reports on a
    /// desktop for a 50K-point frame.
    pub const REFERENCE: ServiceModel = ServiceModel {
        capture_us: 8_000,
        encode_us: 12_000,
        decode_us: 6_000,
        decode_contention_us: 6_000,
        relay_us: 100,
        jitter_us: 1_000,
    };

    /// Stage budgets fitted so that the default two- and four-user scenarios
    /// land near 180 ms and 250 ms mean delay. Calibrated, not predictive.
    pub const PAPER_CALIBRATION: ServiceModel = ServiceModel {
        capture_us: 60_000,
        encode_us: 45_000,
        decode_us: 67_500,
        decode_contention_us: 35_000,
        relay_us: 100,
        jitter_us: 11_000,
    };

    pub fn decode_latency_us(&self, remote_streams: usize) -> u64 {
        self.decode_us + self.decode_contention_us * remote_streams.saturating_sub(1) as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ServiceProfile {
    Fixed(ServiceModel),
    /// Benchmark the real codec once at startup; the measured values are
    /// echoed in the report so the run can be replayed as `Fixed`.
    Measured,
    PaperCalibration,
}

impl Default for ServiceProfile {
    fn default() -> Self {
        ServiceProfile::Fixed(ServiceModel::REFERENCE)
    }
}

pub const PAPER_CALIBRATION_LABEL: &str =
    "paper-calibration preset: stage budgets fitted to target mean delays of 180.5 ms (2 users) and 251.2 ms (4 users); calibrated, not predictive";

impl ServiceProfile {
    /// Concrete stage times plus an optional label for the report.
    pub fn resolve(
        &self,
        scene: &SceneConfig,
        codec: &CodecConfig,
    ) -> Result<(ServiceModel, Option<String>), CodecError> {
        Ok(match self {
            ServiceProfile::Fixed(m) => (*m, None),
            ServiceProfile::PaperCalibration => (
                ServiceModel::PAPER_CALIBRATION,
                Some(PAPER_CALIBRATION_LABEL.to_string()),
            ),
            ServiceProfile::Measured => {
                let c = calibrate(scene, codec, 5)?;
                (
                    c.as_service_model(),
                    Some(format!(
                        "measured on host: {} points, {} bytes/frame",
                        c.points, c.frame_bytes
                    )),
                )
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub frames: usize,
    pub points: usize,
    pub frame_bytes: usize,
    pub capture_us: u64,
    pub encode_us: u64,
    pub decode_us: u64,
}

impl Calibration {
    pub fn as_service_model(&self) -> ServiceModel {
        ServiceModel {
            capture_us: self.capture_us,
            encode_us: self.encode_us,
            decode_us: self.decode_us,
            decode_contention_us: self.decode_us,
            relay_us: ServiceModel::REFERENCE.relay_us,
            jitter_us: 0,
        }
    }
}

fn median(mut v: Vec<u64>) -> u64 {
    v.sort_unstable();
    v[v.len() / 2]
}

/// Median wall-clock stage times over `frames` synthetic frames.
pub fn calibrate(
    scene: &SceneConfig,
    codec: &CodecConfig,
    frames: usize,
) -> Result<Calibration, CodecError> {
    let frames = frames.max(1);
    let rig = scene.rig();
    let (mut cap, mut enc, mut dec) = (Vec::new(), Vec::new(), Vec::new());
    let (mut points, mut bytes) = (0, 0);
    for k in 0..frames {
        let t_us = k as u64 * 66_667;
        let t0 = Instant::now();
        let cloud = capture_rig(scene, &rig, t_us, (200, 6000), DEFAULT_CAPTURE_RADIUS_M)
            .map_err(|e| CodecError::InvalidConfig(e.to_string()))?;
        let t1 = Instant::now();
        let encoded = encode_frame(&cloud, codec)?;
        let payload = encoded.to_bytes();
        let t2 = Instant::now();
        decode_bytes(&payload)?;
        let t3 = Instant::now();
        cap.push((t1 - t0).as_micros() as u64);
        enc.push((t2 - t1).as_micros() as u64);
        dec.push((t3 - t2).as_micros() as u64);
        points = encoded.point_count as usize;
        bytes = payload.len();
    }
    Ok(Calibration {
        frames,
        points,
        frame_bytes: bytes,
        capture_us: median(cap),
        encode_us: median(enc),
        decode_us: median(dec),
    })
}
