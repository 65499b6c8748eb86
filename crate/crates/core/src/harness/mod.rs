//! Scenario runner, network emulation and metrics.
//!
//! [`run_scenario`] wires an orchestrator and N participants together,
//! either under a deterministic virtual clock (a single-threaded
//! discrete-event loop) or in real time over TCP, and reduces the run to a
//! [`MetricsReport`].

use std::io;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capture::SceneConfig;
use crate::client::{ClientStats, RenderSink, MAX_CLOCK_OFFSET_US};
use crate::codec::CodecConfig;
use crate::orchestrator::{Event, RelayStats, MAX_MEMBERS, MIN_MEMBERS};

pub mod link;
pub mod metrics;
pub mod realtime;
pub mod report;
pub mod service;
pub mod sim;

pub use link::{link_transfer, Link, LinkModel, LinkStats};
pub use metrics::{
    delay_stats, skew_stats, throughput_series, DelayStats, MetricsReport, SkewStats,
    ThroughputSeries,
};
pub use report::{read_report, summary_table, write_events, write_report};
pub use service::{calibrate, Calibration, ServiceModel, ServiceProfile};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid scenario config: {0}")]
    Config(String),
    #[error("scenario failed: {0}")]
    Scenario(String),
    #[error("no data: {0}")]
    NoData(&'static str),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ClockMode {
    #[default]
    Virtual,
    Realtime,
}

/// Per-client link replacement. `client` is the zero-based index across all
/// sessions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkOverride {
    pub client: usize,
    #[serde(default)]
    pub uplink: Option<LinkModel>,
    #[serde(default)]
    pub downlink: Option<LinkModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Members per session.
    pub participants: usize,
    /// Independent sessions sharing one orchestrator.
    pub sessions: usize,
    pub duration_s: f64,
    pub seed: u64,
    pub fps: f64,
    pub codec: CodecConfig,
    pub scene: SceneConfig,
    /// Applied to every client's uplink and downlink unless overridden.
    pub link: LinkModel,
    pub link_overrides: Vec<LinkOverride>,
    pub service: ServiceProfile,
    pub clock_mode: ClockMode,
    /// `host:port` of an external orchestrator (REALTIME only). An
    /// in-process one is started when absent.
    pub orchestrator: Option<String>,
    /// Explicit clock offsets, one per client; otherwise drawn uniformly in
    /// `±clock_offset_range_us` from the seed.
    pub clock_offsets_us: Option<Vec<i64>>,
    pub clock_offset_range_us: i64,
    pub window_s: f64,
    /// Optional constant-rate MEDIA_AUDIO filler per client, bits/s.
    pub audio_bps: u64,
    pub heartbeat_timeout_ms: u64,
    /// Animation loop length in frames; see
    /// [`crate::client::ParticipantConfig::frame_loop`]. Zero captures and
    /// encodes every frame afresh.
    pub frame_loop: u32,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            participants: 2,
            sessions: 1,
            duration_s: 60.0,
            seed: 0,
            fps: 15.0,
            codec: CodecConfig::default(),
            scene: SceneConfig::default(),
            link: LinkModel::default(),
            link_overrides: Vec::new(),
            service: ServiceProfile::default(),
            clock_mode: ClockMode::Virtual,
            orchestrator: None,
            clock_offsets_us: None,
            clock_offset_range_us: 3_000,
            window_s: 1.0,
            audio_bps: 0,
            heartbeat_timeout_ms: 5_000,
            frame_loop: 45,
        }
    }
}

impl ScenarioConfig {
    pub fn total_clients(&self) -> usize {
        self.participants * self.sessions
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if !(MIN_MEMBERS..=MAX_MEMBERS).contains(&self.participants) {
            return bad(format!(
                "participants must be in [{MIN_MEMBERS}, {MAX_MEMBERS}], got {}",
                self.participants
            ));
        }
        if self.sessions == 0 || self.sessions > 64 {
            return bad(format!(
                "sessions must be in [1, 64], got {}",
                self.sessions
            ));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return bad(format!(
                "duration_s must be positive, got {}",
                self.duration_s
            ));
        }
        if !(self.fps > 0.0 && self.fps <= 120.0) {
            return bad(format!("fps must be in (0, 120], got {}", self.fps));
        }
        if !(self.window_s > 0.0 && self.window_s.is_finite()) {
            return bad(format!("window_s must be positive, got {}", self.window_s));
        }
        if !(0..=MAX_CLOCK_OFFSET_US).contains(&self.clock_offset_range_us) {
            return bad(format!(
                "clock_offset_range_us must be in [0, {MAX_CLOCK_OFFSET_US}]"
            ));
        }
        if let Some(o) = &self.clock_offsets_us {
            if o.len() != self.total_clients() {
                return bad(format!(
                    "clock_offsets_us has {} entries for {} clients",
                    o.len(),
                    self.total_clients()
                ));
            }
            if o.iter().any(|v| v.abs() > MAX_CLOCK_OFFSET_US) {
                return bad(format!(
                    "clock offsets must be within ±{MAX_CLOCK_OFFSET_US} us"
                ));
            }
        }
        self.link.validate().map_err(HarnessError::Config)?;
        for o in &self.link_overrides {
            if o.client >= self.total_clients() {
                return bad(format!("link override for unknown client {}", o.client));
            }
            for m in [o.uplink, o.downlink].into_iter().flatten() {
                m.validate().map_err(HarnessError::Config)?;
            }
        }
        self.codec
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        if self.heartbeat_timeout_ms == 0 {
            return bad("heartbeat_timeout_ms must be positive".into());
        }
        if self.clock_mode == ClockMode::Virtual && self.orchestrator.is_some() {
            return bad("an orchestrator endpoint needs clock_mode REALTIME".into());
        }
        Ok(())
    }

    pub fn uplink(&self, client: usize) -> LinkModel {
        self.link_overrides
            .iter()
            .rev()
            .find(|o| o.client == client)
            .and_then(|o| o.uplink)
            .unwrap_or(self.link)
    }

    pub fn downlink(&self, client: usize) -> LinkModel {
        self.link_overrides
            .iter()
            .rev()
            .find(|o| o.client == client)
            .and_then(|o| o.downlink)
            .unwrap_or(self.link)
    }

    pub(crate) fn clock_offsets(&self, rng: &mut ChaCha8Rng) -> Vec<i64> {
        match &self.clock_offsets_us {
            Some(v) => v.clone(),
            None => {
                let r = self.clock_offset_range_us;
                (0..self.total_clients())
                    .map(|_| if r > 0 { rng.gen_range(-r..=r) } else { 0 })
                    .collect()
            }
        }
    }

    /// Scene for client `i`: same subject model, distinct seed.
    pub(crate) fn client_scene(&self, i: usize) -> SceneConfig {
        SceneConfig {
            seed: self.scene.seed.wrapping_add(i as u64),
            ..self.scene.clone()
        }
    }
}

/// Member id of client index `i`. Zero is reserved for the orchestrator.
pub fn member_id(i: usize) -> u32 {
    i as u32 + 1
}

/// Everything a run leaves behind, before reduction to metrics.
#[derive(Debug, Clone, Default)]
pub struct RunLog {
    pub clients: Vec<ClientRecord>,
    /// MEDIA_PC arrivals at the orchestrator per client: `(t_us, wire bytes)`.
    pub uplink_deliveries: Vec<Vec<(u64, u64)>>,
    pub routes: Vec<RouteRecord>,
    pub receptions: Vec<Reception>,
    pub relay_stats: Vec<RelayRow>,
    pub events: Vec<Event>,
    pub links: Vec<LinkRow>,
    pub media_start_us: u64,
    pub media_end_us: u64,
}

#[derive(Debug, Clone, Default)]
pub struct ClientRecord {
    pub member_id: u32,
    pub group: usize,
    pub session_id: Option<u32>,
    pub clock_offset_us: i64,
    pub sink: RenderSink,
    pub stats: ClientStats,
    /// MEDIA_PC handed to the uplink: `(t_us, wire bytes)`.
    pub media_sends: Vec<(u64, u64)>,
}

/// One MEDIA_PC routing decision at the orchestrator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteRecord {
    pub t_us: u64,
    pub session: u32,
    pub sender: u32,
    pub seq: u32,
    pub bytes: u64,
    /// Session membership at routing time.
    pub members: Vec<u32>,
    pub recipients: Vec<u32>,
}

/// One MEDIA_PC arriving at a client.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reception {
    pub t_us: u64,
    pub receiver: u32,
    pub session: u32,
    pub sender: u32,
    pub seq: u32,
    pub bytes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelayRow {
    pub session: u32,
    pub sender: u32,
    #[serde(flatten)]
    pub stats: RelayStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkRow {
    pub member: u32,
    pub direction: LinkDirection,
    #[serde(flatten)]
    pub stats: LinkStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkDirection {
    Uplink,
    Downlink,
}

/// Runs the scenario in the configured clock mode.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<MetricsReport, HarnessError> {
    let (log, service, note) = run_scenario_log(cfg)?;
    Ok(metrics::build_report(cfg, &service, note, &log))
}

/// Like [`run_scenario`] but also returns the raw log.
pub fn run_scenario_log(
    cfg: &ScenarioConfig,
) -> Result<(RunLog, ServiceModel, Option<String>), HarnessError> {
    cfg.validate()?;
    let (service, note) = cfg
        .service
        .resolve(&cfg.scene, &cfg.codec)
        .map_err(|e| HarnessError::Scenario(format!("service calibration failed: {e}")))?;
    let log = match cfg.clock_mode {
        ClockMode::Virtual => sim::run_virtual(cfg, &service)?,
        ClockMode::Realtime => realtime::run_realtime(cfg)?,
    };
    Ok((log, service, note))
}
