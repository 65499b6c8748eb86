//! Synthetic RGB-D capture and point-cloud reconstruction.
//!
//! A procedural seated humanoid (head sphere, torso ellipsoid, two arm
//! capsules) is ray-cast into a depth + color image pair, which is then
//! back-projected through the pinhole intrinsics, moved into the world frame
//! with the camera extrinsic, and fused across cameras.
//!
//! World frame: meters, `+y` up, the subject seated around the origin.
//! Camera frame: `+x` right, `+y` down, `+z` forward (optical axis).

use nalgebra::{Matrix3, Matrix4, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default radius of the capture volume around the rig origin, in meters.
pub const DEFAULT_CAPTURE_RADIUS_M: f64 = 1.5;

/// Tolerance for the orthonormality and determinant checks on extrinsics.
const RIGID_TOLERANCE: f64 = 1e-6;

/// Reference sensor the default camera is scaled from (a narrow-FOV
/// time-of-flight depth mode).
const REF_WIDTH: f64 = 640.0;
const REF_HEIGHT: f64 = 576.0;
const REF_FOCAL: f64 = 504.0;
const REF_TARGET_POINTS: f64 = 50_000.0;

/// Height of the camera's optical center above the floor, in meters.
const CAMERA_HEIGHT_M: f64 = 1.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CaptureError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("extrinsic is not a rigid transform: {0}")]
    InvalidTransform(String),
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("no frames to fuse")]
    EmptyInput,
    #[error("frames belong to different captures: {0}")]
    FusionMismatch(String),
    #[error("invalid depth range [{min}, {max}] mm")]
    InvalidDepthRange { min: u16, max: u16 },
}

/// Row-major 4x4 homogeneous transform.
pub type Transform = [[f64; 4]; 4];

pub const IDENTITY: Transform = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
];

/// Pinhole intrinsics plus the camera-to-world extrinsic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    /// Camera-to-world rigid transform, row-major, meters.
    pub extrinsic: Transform,
}

impl CameraModel {
    pub fn validate(&self) -> Result<(), CaptureError> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(CaptureError::InvalidCamera(format!(
                "focal lengths must be positive (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64)
            || !(self.cy >= 0.0 && self.cy < self.height as f64)
        {
            return Err(CaptureError::InvalidCamera(format!(
                "principal point ({}, {}) outside {}x{} image",
                self.cx, self.cy, self.width, self.height
            )));
        }
        rigid_parts(&self.extrinsic).map(|_| ())
    }

    /// The intrinsics in homogeneous 4x4 form.
    pub fn intrinsic_matrix(&self) -> Matrix4<f64> {
        Matrix4::new(
            self.fx, 0.0, self.cx, 0.0, //
            0.0, self.fy, self.cy, 0.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        )
    }

    /// Camera center in world coordinates.
    pub fn position(&self) -> [f64; 3] {
        [
            self.extrinsic[0][3],
            self.extrinsic[1][3],
            self.extrinsic[2][3],
        ]
    }

    /// Projects a camera-frame point to continuous pixel coordinates.
    pub fn project(&self, p: [f64; 3]) -> Option<(f64, f64)> {
        if p[2] <= 0.0 {
            return None;
        }
        Some((
            self.fx * p[0] / p[2] + self.cx,
            self.fy * p[1] / p[2] + self.cy,
        ))
    }
}

/// Splits a homogeneous transform into rotation and translation, checking
/// that it is a proper rigid motion.
pub fn rigid_parts(m: &Transform) -> Result<(Matrix3<f64>, Vector3<f64>), CaptureError> {
    if m.iter().flatten().any(|v| !v.is_finite()) {
        return Err(CaptureError::InvalidTransform("non-finite entry".into()));
    }
    let bottom = m[3];
    if bottom != [0.0, 0.0, 0.0, 1.0] {
        return Err(CaptureError::InvalidTransform(format!(
            "bottom row {bottom:?} is not [0, 0, 0, 1]"
        )));
    }
    let r = Matrix3::new(
        m[0][0], m[0][1], m[0][2], //
        m[1][0], m[1][1], m[1][2], //
        m[2][0], m[2][1], m[2][2],
    );
    let gram = r.transpose() * r;
    let off = (gram - Matrix3::identity()).abs().max();
    if off > RIGID_TOLERANCE {
        return Err(CaptureError::InvalidTransform(format!(
            "rotation block is not orthonormal (max |RᵀR - I| = {off:e})"
        )));
    }
    let det = r.determinant();
    if (det - 1.0).abs() > RIGID_TOLERANCE {
        return Err(CaptureError::InvalidTransform(format!(
            "rotation determinant is {det}"
        )));
    }
    Ok((r, Vector3::new(m[0][3], m[1][3], m[2][3])))
}

/// 16-bit depth in millimeters; 0 marks an invalid or background pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u16>,
}

impl DepthImage {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![0; width as usize * height as usize],
        }
    }

    pub fn foreground_count(&self) -> usize {
        self.data.iter().filter(|&&d| d > 0).count()
    }
}

/// Interleaved 8-bit RGB.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

impl ColorImage {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![0; 3 * width as usize * height as usize],
        }
    }
}

/// One captured volume: points in meters with per-point RGB.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PointCloudFrame {
    pub source_id: u32,
    pub seq: u32,
    pub capture_ts_us: u64,
    pub points: Vec<[f32; 3]>,
    pub colors: Vec<[u8; 3]>,
}

impl PointCloudFrame {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_consistent(&self) -> bool {
        self.points.len() == self.colors.len()
            && self.points.iter().flatten().all(|c| c.is_finite())
    }
}

/// Parameters of the synthetic subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub seed: u64,
    /// Desired foreground pixel count for [`SceneConfig::default_camera`].
    pub target_points: u32,
    /// Peak body sway in meters; arm swing scales with it.
    pub motion_amplitude: f64,
    /// Distance from each camera to the subject's vertical axis, in meters.
    pub camera_distance: f64,
    /// Cameras spaced evenly on a ring around the subject.
    pub cameras: u32,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            target_points: 50_000,
            motion_amplitude: 0.05,
            camera_distance: 1.58,
            cameras: 3,
        }
    }
}

impl SceneConfig {
    /// A front-facing camera at `camera_distance`, looking along world `-z`
    /// at the subject. Resolution and focal length scale with
    /// `sqrt(target_points)` from a 640x576 reference sensor, keeping the
    /// field of view fixed so the subject's footprint tracks the target.
    pub fn default_camera(&self) -> CameraModel {
        let scale = (self.target_points.max(1) as f64 / REF_TARGET_POINTS).sqrt();
        let width = (REF_WIDTH * scale).round().max(8.0) as u32;
        let height = (REF_HEIGHT * scale).round().max(8.0) as u32;
        let focal = REF_FOCAL * width as f64 / REF_WIDTH;
        CameraModel {
            fx: focal,
            fy: focal,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            width,
            height,
            extrinsic: [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, -1.0, 0.0, CAMERA_HEIGHT_M],
                [0.0, 0.0, -1.0, self.camera_distance],
                [0.0, 0.0, 0.0, 1.0],
            ],
        }
    }
}

impl SceneConfig {
    /// [`SceneConfig::default_camera`] replicated around the world `y` axis,
    /// `cameras` times at equal yaw steps. The first is the front camera.
    pub fn rig(&self) -> Vec<CameraModel> {
        let base = self.default_camera();
        let n = self.cameras.max(1);
        (0..n)
            .map(|k| {
                let yaw = std::f64::consts::TAU * k as f64 / n as f64;
                let (s, c) = yaw.sin_cos();
                let ry = Matrix4::new(
                    c, 0.0, s, 0.0, //
                    0.0, 1.0, 0.0, 0.0, //
                    -s, 0.0, c, 0.0, //
                    0.0, 0.0, 0.0, 1.0,
                );
                let e = ry * to_matrix(&base.extrinsic);
                let mut extrinsic = IDENTITY;
                for (r, row) in extrinsic.iter_mut().enumerate() {
                    for (col, v) in row.iter_mut().enumerate() {
                        *v = e[(r, col)];
                    }
                }
                extrinsic[3] = [0.0, 0.0, 0.0, 1.0];
                CameraModel {
                    extrinsic,
                    ..base.clone()
                }
            })
            .collect()
    }
}

fn to_matrix(m: &Transform) -> Matrix4<f64> {
    Matrix4::from_fn(|r, c| m[r][c])
}

/// Full reconstruction of one instant: render every camera of the rig,
/// drop depth outside `depth_range_mm`, back-project, move to the world
/// frame and fuse within `capture_radius_m`. Metadata is left zeroed.
pub fn capture_rig(
    scene: &SceneConfig,
    rig: &[CameraModel],
    t_us: u64,
    depth_range_mm: (u16, u16),
    capture_radius_m: f64,
) -> Result<PointCloudFrame, CaptureError> {
    let mut clouds = Vec::with_capacity(rig.len());
    for cam in rig {
        let (depth, color) = synth_capture(scene, t_us, cam);
        let depth = remove_background(&depth, depth_range_mm.0, depth_range_mm.1)?;
        let local = back_project(&depth, &color, cam)?;
        clouds.push(transform_to_world(&local, &cam.extrinsic)?);
    }
    fuse(&clouds, capture_radius_m)
}

/// Back-projects every valid depth pixel through the pinhole model.
///
/// Points are in the camera frame, in row-major pixel order. The returned
/// frame carries zeroed metadata; callers stamp source, seq and timestamp.
pub fn back_project(
    depth: &DepthImage,
    color: &ColorImage,
    cam: &CameraModel,
) -> Result<PointCloudFrame, CaptureError> {
    if depth.width != cam.width || depth.height != cam.height {
        return Err(CaptureError::DimensionMismatch(format!(
            "depth is {}x{}, camera is {}x{}",
            depth.width, depth.height, cam.width, cam.height
        )));
    }
    if color.width != depth.width || color.height != depth.height {
        return Err(CaptureError::DimensionMismatch(format!(
            "color is {}x{}, depth is {}x{}",
            color.width, color.height, depth.width, depth.height
        )));
    }
    let pixels = depth.width as usize * depth.height as usize;
    if depth.data.len() != pixels || color.data.len() != 3 * pixels {
        return Err(CaptureError::DimensionMismatch(
            "buffer length does not match image size".into(),
        ));
    }

    let mut frame = PointCloudFrame::default();
    let w = depth.width as usize;
    for (i, &d) in depth.data.iter().enumerate() {
        if d == 0 {
            continue;
        }
        let (u, v) = ((i % w) as f64, (i / w) as f64);
        let z = d as f64 / 1000.0;
        let x = (u - cam.cx) * z / cam.fx;
        let y = (v - cam.cy) * z / cam.fy;
        frame.points.push([x as f32, y as f32, z as f32]);
        frame.colors.push([
            color.data[3 * i],
            color.data[3 * i + 1],
            color.data[3 * i + 2],
        ]);
    }
    Ok(frame)
}

/// Applies a rigid transform to every point; colors and metadata are kept.
pub fn transform_to_world(
    frame: &PointCloudFrame,
    extrinsic: &Transform,
) -> Result<PointCloudFrame, CaptureError> {
    let (r, t) = rigid_parts(extrinsic)?;
    let points = frame
        .points
        .iter()
        .map(|p| {
            let q = r * Vector3::new(p[0] as f64, p[1] as f64, p[2] as f64) + t;
            [q.x as f32, q.y as f32, q.z as f32]
        })
        .collect();
    Ok(PointCloudFrame {
        points,
        ..frame.clone()
    })
}

/// Merges the per-camera clouds of one subject and discards points whose
/// horizontal distance from the rig origin exceeds `capture_radius_m`.
pub fn fuse(
    frames: &[PointCloudFrame],
    capture_radius_m: f64,
) -> Result<PointCloudFrame, CaptureError> {
    let first = frames.first().ok_or(CaptureError::EmptyInput)?;
    for f in &frames[1..] {
        if f.source_id != first.source_id {
            return Err(CaptureError::FusionMismatch(format!(
                "source {} vs {}",
                f.source_id, first.source_id
            )));
        }
        if f.capture_ts_us != first.capture_ts_us {
            return Err(CaptureError::FusionMismatch(format!(
                "capture time {} vs {}",
                f.capture_ts_us, first.capture_ts_us
            )));
        }
    }

    let r2 = capture_radius_m * capture_radius_m;
    let total = frames.iter().map(PointCloudFrame::len).sum();
    let mut out = PointCloudFrame {
        source_id: first.source_id,
        seq: first.seq,
        capture_ts_us: first.capture_ts_us,
        points: Vec::with_capacity(total),
        colors: Vec::with_capacity(total),
    };
    for f in frames {
        for (p, c) in f.points.iter().zip(&f.colors) {
            let (x, z) = (p[0] as f64, p[2] as f64);
            if x * x + z * z <= r2 {
                out.points.push(*p);
                out.colors.push(*c);
            }
        }
    }
    Ok(out)
}

/// Zeroes depth pixels outside `[z_min_mm, z_max_mm]`.
pub fn remove_background(
    depth: &DepthImage,
    z_min_mm: u16,
    z_max_mm: u16,
) -> Result<DepthImage, CaptureError> {
    if z_min_mm >= z_max_mm {
        return Err(CaptureError::InvalidDepthRange {
            min: z_min_mm,
            max: z_max_mm,
        });
    }
    let data = depth
        .data
        .iter()
        .map(|&d| if d < z_min_mm || d > z_max_mm { 0 } else { d })
        .collect();
    Ok(DepthImage {
        data,
        ..depth.clone()
    })
}

// ---------------------------------------------------------------------------
// Procedural subject

#[derive(Debug, Clone, Copy)]
enum Shape {
    Sphere {
        center: Vector3<f64>,
        radius: f64,
    },
    Ellipsoid {
        center: Vector3<f64>,
        radii: Vector3<f64>,
    },
    Capsule {
        a: Vector3<f64>,
        b: Vector3<f64>,
        radius: f64,
    },
}

#[derive(Debug, Clone, Copy)]
enum Material {
    Skin,
    Shirt,
    /// Sleeve that turns into a hand over the last quarter of the capsule.
    Arm,
    Trousers,
}

#[derive(Debug, Clone, Copy)]
struct Part {
    shape: Shape,
    material: Material,
}

impl Shape {
    fn bounding_sphere(&self) -> (Vector3<f64>, f64) {
        match *self {
            Shape::Sphere { center, radius } => (center, radius),
            Shape::Ellipsoid { center, radii } => (center, radii.max()),
            Shape::Capsule { a, b, radius } => ((a + b) * 0.5, (b - a).norm() * 0.5 + radius),
        }
    }

    /// Nearest positive ray parameter. `dir` need not be unit length.
    fn intersect(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        match *self {
            Shape::Sphere { center, radius } => sphere_hit(origin, dir, &center, radius),
            Shape::Ellipsoid { center, radii } => {
                let o = (origin - center).component_div(&radii);
                let d = dir.component_div(&radii);
                sphere_hit(&o, &d, &Vector3::zeros(), 1.0)
            }
            Shape::Capsule { a, b, radius } => capsule_hit(origin, dir, &a, &b, radius),
        }
    }

    fn normal(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let n = match *self {
            Shape::Sphere { center, .. } => p - center,
            Shape::Ellipsoid { center, radii } => {
                (p - center).component_div(&radii.component_mul(&radii))
            }
            Shape::Capsule { a, b, .. } => p - closest_on_segment(p, &a, &b).0,
        };
        n.normalize()
    }
}

fn sphere_hit(o: &Vector3<f64>, d: &Vector3<f64>, c: &Vector3<f64>, r: f64) -> Option<f64> {
    let oc = o - c;
    let a = d.dot(d);
    let half_b = d.dot(&oc);
    let disc = half_b * half_b - a * (oc.dot(&oc) - r * r);
    if disc < 0.0 {
        return None;
    }
    let t = (-half_b - disc.sqrt()) / a;
    (t > 0.0).then_some(t)
}

fn capsule_hit(
    o: &Vector3<f64>,
    d: &Vector3<f64>,
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    r: f64,
) -> Option<f64> {
    let ba = b - a;
    let oa = o - a;
    let baba = ba.dot(&ba);
    let bard = ba.dot(d);
    let baoa = ba.dot(&oa);
    let rdoa = d.dot(&oa);
    let oaoa = oa.dot(&oa);
    let dd = d.dot(d);

    let qa = baba * dd - bard * bard;
    let qb = baba * rdoa - baoa * bard;
    let qc = baba * oaoa - baoa * baoa - r * r * baba;
    let h = qb * qb - qa * qc;
    if h < 0.0 {
        return None;
    }
    if qa.abs() > 1e-12 {
        let t = (-qb - h.sqrt()) / qa;
        let y = baoa + t * bard;
        if y > 0.0 && y < baba && t > 0.0 {
            return Some(t);
        }
    }
    // Hemispherical caps.
    let cap_a = sphere_hit(o, d, a, r);
    let cap_b = sphere_hit(o, d, b, r);
    match (cap_a, cap_b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    }
}

/// Closest point on segment `a..b` to `p`, and its parameter in `[0, 1]`.
fn closest_on_segment(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> (Vector3<f64>, f64) {
    let ba = b - a;
    let s = ((p - a).dot(&ba) / ba.dot(&ba)).clamp(0.0, 1.0);
    (a + ba * s, s)
}

/// Per-seed appearance and motion phases.
struct Subject {
    skin: [f64; 3],
    shirt: [f64; 3],
    trousers: [f64; 3],
    phases: [f64; 4],
}

const SHIRTS: [[f64; 3]; 5] = [
    [52.0, 84.0, 150.0],
    [150.0, 46.0, 52.0],
    [60.0, 120.0, 70.0],
    [90.0, 90.0, 96.0],
    [200.0, 160.0, 60.0],
];
const TROUSERS: [[f64; 3]; 3] = [[40.0, 44.0, 60.0], [70.0, 60.0, 50.0], [30.0, 30.0, 32.0]];
const SKINS: [[f64; 3]; 4] = [
    [224.0, 172.0, 140.0],
    [198.0, 140.0, 100.0],
    [150.0, 100.0, 70.0],
    [100.0, 66.0, 46.0],
];

impl Subject {
    fn from_seed(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shirt = SHIRTS[rng.gen_range(0..SHIRTS.len())];
        let skin = SKINS[rng.gen_range(0..SKINS.len())];
        let trousers = TROUSERS[rng.gen_range(0..TROUSERS.len())];
        let mut phases = [0.0; 4];
        for p in &mut phases {
            *p = rng.gen_range(0.0..std::f64::consts::TAU);
        }
        Self {
            skin,
            shirt,
            trousers,
            phases,
        }
    }

    fn parts(&self, amplitude: f64, t_s: f64) -> [Part; 6] {
        use std::f64::consts::TAU;
        let sway = amplitude * (TAU * 0.25 * t_s + self.phases[0]).sin();
        let nod = 0.5 * amplitude * (TAU * 0.5 * t_s + self.phases[1]).sin();
        // Arm swing angle: 0.4 rad at the default 5 cm amplitude.
        let swing = |phase: f64| (amplitude / 0.05) * 0.4 * (TAU * 0.6 * t_s + phase).sin();

        let torso = Vector3::new(sway, 1.12, 0.0);
        let head = Vector3::new(sway * 1.3, 1.58, nod);
        let arm_len = 0.58;
        let arm = |side: f64, phase: f64| {
            let shoulder = Vector3::new(sway + side * 0.27, 1.36, 0.0);
            let forward = 0.5 + swing(phase);
            let outward: f64 = 0.22;
            let dir = Vector3::new(
                side * outward.sin(),
                -forward.cos() * outward.cos(),
                forward.sin() * outward.cos(),
            );
            Part {
                shape: Shape::Capsule {
                    a: shoulder,
                    b: shoulder + dir * arm_len,
                    radius: 0.062,
                },
                material: Material::Arm,
            }
        };
        // Seated: thighs run forward from the hips.
        let thigh = |side: f64| Part {
            shape: Shape::Capsule {
                a: Vector3::new(side * 0.11, 0.80, 0.0),
                b: Vector3::new(side * 0.12, 0.78, 0.42),
                radius: 0.08,
            },
            material: Material::Trousers,
        };
        [
            Part {
                shape: Shape::Sphere {
                    center: head,
                    radius: 0.115,
                },
                material: Material::Skin,
            },
            Part {
                shape: Shape::Ellipsoid {
                    center: torso,
                    radii: Vector3::new(0.23, 0.34, 0.15),
                },
                material: Material::Shirt,
            },
            arm(-1.0, self.phases[2]),
            arm(1.0, self.phases[3]),
            thigh(-1.0),
            thigh(1.0),
        ]
    }

    fn shade(&self, part: &Part, p: &Vector3<f64>) -> [u8; 3] {
        let albedo = match part.material {
            Material::Skin => self.skin,
            Material::Shirt => self.shirt,
            Material::Trousers => self.trousers,
            Material::Arm => match part.shape {
                Shape::Capsule { a, b, .. } if closest_on_segment(p, &a, &b).1 > 0.78 => self.skin,
                _ => self.shirt,
            },
        };
        let n = part.shape.normal(p);
        let light = Vector3::new(-0.35, 0.55, 1.0).normalize();
        let lambert = n.dot(&light).max(0.0);
        let k = (0.45 + 0.55 * lambert) * (1.0 + FABRIC_GRAIN * grain(part, p));
        albedo.map(|c| (c * k).round().clamp(0.0, 255.0) as u8)
    }
}

/// Relative amplitude of the surface grain.
const FABRIC_GRAIN: f64 = 0.025;
const GRAIN_CELL_M: f64 = 0.01;

/// Value noise in [-1, 1] on a 1 cm lattice attached to the part, so the
/// pattern moves with the body instead of swimming over it.
fn grain(part: &Part, p: &Vector3<f64>) -> f64 {
    let (anchor, _) = part.shape.bounding_sphere();
    let q = (p - anchor) / GRAIN_CELL_M;
    let mut h = 0x9e37_79b9_7f4a_7c15u64;
    for c in [q.x, q.y, q.z] {
        h = splitmix(h ^ (c.floor() as i64 as u64));
    }
    (h >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Renders the synthetic subject at time `t_us` as seen by `cam`.
///
/// Deterministic in `(scene, t_us, cam)`. Depth is the camera-frame `z` of
/// the nearest surface in millimeters; pixels that miss the subject are 0.
pub fn synth_capture(
    scene: &SceneConfig,
    t_us: u64,
    cam: &CameraModel,
) -> (DepthImage, ColorImage) {
    let mut depth = DepthImage::new(cam.width, cam.height);
    let mut color = ColorImage::new(cam.width, cam.height);

    let subject = Subject::from_seed(scene.seed);
    let parts = subject.parts(scene.motion_amplitude, t_us as f64 * 1e-6);

    let m = &cam.extrinsic;
    let rot = Matrix3::new(
        m[0][0], m[0][1], m[0][2], //
        m[1][0], m[1][1], m[1][2], //
        m[2][0], m[2][1], m[2][2],
    );
    let origin = Vector3::new(m[0][3], m[1][3], m[2][3]);
    let to_cam = rot.transpose();

    let (w, h) = (cam.width as i64, cam.height as i64);
    let mut nearest = vec![f64::INFINITY; (w * h) as usize];
    let mut hit_part = vec![u8::MAX; (w * h) as usize];

    for (index, part) in parts.iter().enumerate() {
        let (center, radius) = part.shape.bounding_sphere();
        let c = to_cam * (center - origin);
        if c.z - radius <= 1e-3 {
            continue;
        }
        // Conservative screen-space rectangle of the bounding sphere.
        let near = c.z - radius;
        let far = c.z + radius;
        let lo_x = ((c.x - radius) / near).min((c.x - radius) / far);
        let hi_x = ((c.x + radius) / near).max((c.x + radius) / far);
        let lo_y = ((c.y - radius) / near).min((c.y - radius) / far);
        let hi_y = ((c.y + radius) / near).max((c.y + radius) / far);
        let u0 = ((cam.cx + cam.fx * lo_x).floor() as i64).clamp(0, w);
        let u1 = ((cam.cx + cam.fx * hi_x).ceil() as i64 + 1).clamp(0, w);
        let v0 = ((cam.cy + cam.fy * lo_y).floor() as i64).clamp(0, h);
        let v1 = ((cam.cy + cam.fy * hi_y).ceil() as i64 + 1).clamp(0, h);

        for v in v0..v1 {
            let yn = (v as f64 - cam.cy) / cam.fy;
            for u in u0..u1 {
                let xn = (u as f64 - cam.cx) / cam.fx;
                // With a unit optical-axis component, the ray parameter is
                // the camera-frame depth.
                let dir = rot * Vector3::new(xn, yn, 1.0);
                if let Some(t) = part.shape.intersect(&origin, &dir) {
                    let i = (v * w + u) as usize;
                    if t < nearest[i] {
                        nearest[i] = t;
                        hit_part[i] = index as u8;
                    }
                }
            }
        }
    }

    let wu = w as usize;
    for (i, &t) in nearest.iter().enumerate() {
        if !t.is_finite() {
            continue;
        }
        let mm = (t * 1000.0).round();
        if !(1.0..=65535.0).contains(&mm) {
            continue;
        }
        depth.data[i] = mm as u16;
        let (u, v) = ((i % wu) as f64, (i / wu) as f64);
        let dir = rot * Vector3::new((u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0);
        let p = origin + dir * t;
        let rgb = subject.shade(&parts[hit_part[i] as usize], &p);
        color.data[3 * i..3 * i + 3].copy_from_slice(&rgb);
    }
    (depth, color)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam500() -> CameraModel {
        CameraModel {
            fx: 500.0,
            fy: 500.0,
            cx: 320.0,
            cy: 320.0,
            width: 1000,
            height: 640,
            extrinsic: IDENTITY,
        }
    }

    fn single_pixel(cam: &CameraModel, u: u32, v: u32, d: u16) -> (DepthImage, ColorImage) {
        let mut depth = DepthImage::new(cam.width, cam.height);
        let color = ColorImage::new(cam.width, cam.height);
        depth.data[(v * cam.width + u) as usize] = d;
        (depth, color)
    }

    #[test]
    fn principal_ray_back_projects_onto_axis() {
        let cam = cam500();
        let (d, c) = single_pixel(&cam, 320, 320, 1000);
        let f = back_project(&d, &c, &cam).unwrap();
        assert_eq!(f.points, vec![[0.0, 0.0, 1.0]]);
    }

    #[test]
    fn off_axis_pixel_back_projects() {
        let cam = cam500();
        let (d, c) = single_pixel(&cam, 820, 320, 2000);
        let f = back_project(&d, &c, &cam).unwrap();
        assert_eq!(f.points, vec![[2.0, 0.0, 2.0]]);
    }

    #[test]
    fn empty_depth_gives_no_points() {
        let cam = cam500();
        let f = back_project(
            &DepthImage::new(cam.width, cam.height),
            &ColorImage::new(cam.width, cam.height),
            &cam,
        )
        .unwrap();
        assert!(f.is_empty());
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let cam = cam500();
        let err = back_project(&DepthImage::new(10, 10), &ColorImage::new(10, 10), &cam);
        assert!(matches!(err, Err(CaptureError::DimensionMismatch(_))));
        let err = back_project(
            &DepthImage::new(cam.width, cam.height),
            &ColorImage::new(cam.width, 1),
            &cam,
        );
        assert!(matches!(err, Err(CaptureError::DimensionMismatch(_))));
    }

    fn frame_of(points: Vec<[f32; 3]>) -> PointCloudFrame {
        let colors = vec![[1, 2, 3]; points.len()];
        PointCloudFrame {
            source_id: 4,
            seq: 9,
            capture_ts_us: 77,
            points,
            colors,
        }
    }

    #[test]
    fn identity_transform_keeps_frame() {
        let f = frame_of(vec![[0.1, 0.2, 0.3], [-1.0, 2.0, 5.0]]);
        assert_eq!(transform_to_world(&f, &IDENTITY).unwrap(), f);
    }

    #[test]
    fn translation_moves_points() {
        let mut m = IDENTITY;
        m[0][3] = 1.0;
        let f = transform_to_world(&frame_of(vec![[0.0, 0.0, 1.0]]), &m).unwrap();
        assert_eq!(f.points, vec![[1.0, 0.0, 1.0]]);
        assert_eq!((f.source_id, f.seq, f.capture_ts_us), (4, 9, 77));
    }

    #[test]
    fn quarter_turn_about_y() {
        // R_y(90°) = [[c,0,s],[0,1,0],[-s,0,c]] with c=0, s=1.
        let m = [
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ];
        let f = transform_to_world(&frame_of(vec![[0.0, 0.0, 1.0]]), &m).unwrap();
        let p = f.points[0];
        assert!((p[0] - 1.0).abs() < 1e-6 && p[1].abs() < 1e-6 && p[2].abs() < 1e-6);
    }

    #[test]
    fn non_rigid_transforms_are_rejected() {
        let mut scaled = IDENTITY;
        scaled[0][0] = 2.0;
        assert!(matches!(
            transform_to_world(&frame_of(vec![]), &scaled),
            Err(CaptureError::InvalidTransform(_))
        ));
        let mut mirror = IDENTITY;
        mirror[2][2] = -1.0;
        assert!(matches!(
            rigid_parts(&mirror),
            Err(CaptureError::InvalidTransform(_))
        ));
        let mut projective = IDENTITY;
        projective[3][0] = 0.5;
        assert!(rigid_parts(&projective).is_err());
    }

    #[test]
    fn fuse_single_frame_passthrough() {
        let f = frame_of(vec![[0.1, 1.0, 0.2], [1.0, 0.0, -1.0]]);
        assert_eq!(fuse(std::slice::from_ref(&f), 1.5).unwrap(), f);
    }

    #[test]
    fn fuse_concatenates_and_filters_radius() {
        let a = frame_of(vec![[0.1, 1.0, 0.2], [2.0, 0.0, 0.0]]);
        let b = frame_of(vec![[0.0, 5.0, 1.4], [0.0, 0.0, -0.5], [1.2, 0.0, 1.2]]);
        let out = fuse(&[a, b], 1.5).unwrap();
        // (2,_,0) is 2.0 m out; (1.2,_,1.2) is ~1.70 m out.
        assert_eq!(
            out.points,
            vec![[0.1, 1.0, 0.2], [0.0, 5.0, 1.4], [0.0, 0.0, -0.5]]
        );
        assert_eq!(out.colors.len(), 3);
    }

    #[test]
    fn fuse_rejects_empty_and_mismatched_inputs() {
        assert_eq!(fuse(&[], 1.5), Err(CaptureError::EmptyInput));
        let a = frame_of(vec![]);
        let mut b = frame_of(vec![]);
        b.source_id = 5;
        assert!(matches!(
            fuse(&[a.clone(), b], 1.5),
            Err(CaptureError::FusionMismatch(_))
        ));
        let mut c = a.clone();
        c.capture_ts_us += 1;
        assert!(matches!(
            fuse(&[a, c], 1.5),
            Err(CaptureError::FusionMismatch(_))
        ));
    }

    #[test]
    fn background_removal_cases() {
        let img = DepthImage {
            width: 4,
            height: 1,
            data: vec![5000, 6000, 7000, 65535],
        };
        let culled = remove_background(&img, 100, 1000).unwrap();
        assert!(culled.data.iter().all(|&d| d == 0));
        assert_eq!(remove_background(&img, 1, 65535).unwrap(), img);

        let mixed = DepthImage {
            width: 3,
            height: 2,
            data: vec![0, 400, 500, 1500, 2500, 3000],
        };
        let (lo, hi) = (500, 2500);
        let expected_zeroed = mixed
            .data
            .iter()
            .filter(|&&d| d != 0 && (d < lo || d > hi))
            .count();
        let out = remove_background(&mixed, lo, hi).unwrap();
        let zeroed = mixed
            .data
            .iter()
            .zip(&out.data)
            .filter(|(a, b)| **a != 0 && **b == 0)
            .count();
        assert_eq!(zeroed, expected_zeroed);
        assert_eq!(zeroed, 2);
        assert!(remove_background(&mixed, 10, 10).is_err());
    }

    #[test]
    fn default_camera_is_valid() {
        let scene = SceneConfig::default();
        let cam = scene.default_camera();
        cam.validate().unwrap();
        assert_eq!((cam.width, cam.height), (640, 576));
        let k = cam.intrinsic_matrix();
        assert_eq!(k[(0, 0)], cam.fx);
        assert_eq!(k[(1, 2)], cam.cy);
    }

    #[test]
    fn invalid_cameras_are_rejected() {
        let mut cam = cam500();
        cam.fx = 0.0;
        assert!(cam.validate().is_err());
        let mut cam = cam500();
        cam.cx = 1000.0;
        assert!(cam.validate().is_err());
    }

    #[test]
    fn synth_capture_is_deterministic() {
        let scene = SceneConfig::default();
        let cam = scene.default_camera();
        let a = synth_capture(&scene, 123_456, &cam);
        let b = synth_capture(&scene, 123_456, &cam);
        assert_eq!(a, b);
    }

    #[test]
    fn synth_capture_hits_target_footprint() {
        let scene = SceneConfig::default();
        let cam = scene.default_camera();
        for t in [0, 1_000_000, 2_345_678] {
            let (depth, _) = synth_capture(&scene, t, &cam);
            let n = depth.foreground_count();
            assert!((37_500..=62_500).contains(&n), "foreground {n} at t={t}");
        }
    }

    #[test]
    fn synth_capture_moves_over_time() {
        let scene = SceneConfig::default();
        let cam = scene.default_camera();
        let a = synth_capture(&scene, 1_000_000, &cam);
        let b = synth_capture(&scene, 1_066_667, &cam);
        assert_ne!(a.0, b.0);
    }

    #[test]
    fn static_scene_is_time_invariant() {
        let scene = SceneConfig {
            motion_amplitude: 0.0,
            ..SceneConfig::default()
        };
        let cam = scene.default_camera();
        assert_eq!(
            synth_capture(&scene, 0, &cam),
            synth_capture(&scene, 5_000_000, &cam)
        );
    }
}
