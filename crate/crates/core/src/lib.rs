//! Simulated multi-party volumetric conferencing.
//!
//! The pipeline runs synthetic RGB-D capture of a humanoid proxy, encodes
//! each point-cloud frame with an octree occupancy codec, relays the frames
//! through a session orchestrator to every other participant over emulated
//! links, and measures per-stream throughput and capture-to-decode delay.
//!
//! Modules, bottom-up:
//!
//! * [`capture`]: depth/color synthesis, back-projection, world transform, fusion.
//! * [`codec`]: voxelization, occupancy coding, Morton-packed color planes, frame bitstream.
//! * [`wire`]: framed binary protocol for signaling and media.
//! * [`orchestrator`]: sessions, seating, relay fan-out, liveness.
//! * [`client`]: a participant's capture/publish loop and render sink.
//! * [`harness`]: link emulation, discrete-event scenarios, metrics and reports.

#![deny(rust_2018_idioms)]

pub mod capture;
pub mod client;
pub mod codec;
pub mod harness;
pub mod orchestrator;
pub mod wire;

pub use capture::{CameraModel, ColorImage, DepthImage, PointCloudFrame, SceneConfig};
pub use codec::{CodecConfig, EncodedFrame};
pub use harness::{MetricsReport, ScenarioConfig};
pub use wire::{MsgType, WireMessage};
