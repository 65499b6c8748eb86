//! Throughput, delay and skew reduction.
//!
//! Delay is capture-to-decode-complete. Each sample is reported twice: raw,
//! as the receiver would compute it from the two unsynchronized clocks, and
//! corrected, with the simulator's known clock offsets removed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{HarnessError, LinkRow, RelayRow, RunLog, ScenarioConfig, ServiceModel};
use crate::client::RenderSink;

pub const DELAY_DEFINITION: &str = "capture-to-decode-complete (no display stage)";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ThroughputSeries {
    pub window_s: f64,
    /// Bits delivered in each window `[k w, (k+1) w)` from the origin.
    pub bits: Vec<u64>,
    pub bps: Vec<f64>,
}

impl ThroughputSeries {
    pub fn total_bits(&self) -> u64 {
        self.bits.iter().sum()
    }
}

/// Bins `(t_us, bytes)` deliveries into windows of `window_s` starting at
/// `origin_us`. Deliveries before the origin land in the first window.
pub fn throughput_series(log: &[(u64, u64)], window_s: f64, origin_us: u64) -> ThroughputSeries {
    let w_us = window_s * 1e6;
    let mut bits: Vec<u64> = Vec::new();
    for &(t, bytes) in log {
        let k = (t.saturating_sub(origin_us) as f64 / w_us).floor() as usize;
        if bits.len() <= k {
            bits.resize(k + 1, 0);
        }
        bits[k] += bytes * 8;
    }
    let bps = bits.iter().map(|&b| b as f64 / window_s).collect();
    ThroughputSeries {
        window_s,
        bits,
        bps,
    }
}

/// Population mean and standard deviation.
pub fn mean_stdv(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

/// Quantile by linear interpolation between closest ranks.
pub fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayStats {
    pub mean_ms: f64,
    pub stdv_ms: f64,
    pub p95_ms: f64,
}

impl DelayStats {
    pub fn from_ms(samples: &[f64]) -> Result<Self, HarnessError> {
        let (mean_ms, stdv_ms) =
            mean_stdv(samples).ok_or(HarnessError::NoData("no delay samples"))?;
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self {
            mean_ms,
            stdv_ms,
            p95_ms: quantile(&sorted, 0.95).expect("non-empty"),
        })
    }
}

/// Raw and offset-corrected statistics over `(capture_ts, render_ts)` pairs
/// stamped by the sender and receiver clocks respectively.
pub fn delay_stats(
    pairs: &[(u64, u64)],
    sender_offset_us: i64,
    receiver_offset_us: i64,
) -> Result<(DelayStats, DelayStats), HarnessError> {
    let raw: Vec<f64> = pairs
        .iter()
        .map(|&(c, r)| (r as i64 - c as i64) as f64 / 1000.0)
        .collect();
    let corrected: Vec<f64> = pairs
        .iter()
        .map(|&(c, r)| {
            ((r as i64 - receiver_offset_us) - (c as i64 - sender_offset_us)) as f64 / 1000.0
        })
        .collect();
    Ok((DelayStats::from_ms(&raw)?, DelayStats::from_ms(&corrected)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewStats {
    pub max_ms: f64,
    pub mean_ms: f64,
    pub samples: usize,
}

/// Spread of the latest rendered capture timestamps across sources,
/// sampled at every render once at least two sources have rendered.
pub fn skew_stats(sink: &RenderSink) -> Result<SkewStats, HarnessError> {
    if sink.sources.len() < 2 {
        return Err(HarnessError::NoData("fewer than two remote sources"));
    }
    let mut latest: BTreeMap<u32, u64> = BTreeMap::new();
    let mut skews = Vec::new();
    for r in &sink.renders {
        latest.insert(r.source, r.capture_ts_us);
        if latest.len() >= 2 {
            let max = *latest.values().max().unwrap();
            let min = *latest.values().min().unwrap();
            skews.push((max - min) as f64 / 1000.0);
        }
    }
    let (mean_ms, _) = mean_stdv(&skews).ok_or(HarnessError::NoData("no overlapping renders"))?;
    Ok(SkewStats {
        max_ms: skews.iter().copied().fold(0.0, f64::max),
        mean_ms,
        samples: skews.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamReport {
    pub source: u32,
    pub session: Option<u32>,
    pub clock_offset_us: i64,
    pub frames_published: u64,
    pub frames_skipped: u64,
    pub encode_failures: u64,
    pub mean_points: f64,
    pub bytes_sent: u64,
    pub bytes_at_orchestrator: u64,
    pub throughput: ThroughputSeries,
    /// Over the windows fully inside the capture interval.
    pub mean_bps: f64,
    pub stdv_bps: f64,
    pub cov: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub sender: u32,
    pub receiver: u32,
    pub frames_rendered: u64,
    pub gaps: u64,
    pub out_of_order: u64,
    pub decode_errors: u64,
    pub raw: Option<DelayStats>,
    pub corrected: Option<DelayStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewReport {
    pub receiver: u32,
    pub skew: Option<SkewStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelaySample {
    pub sender: u32,
    pub receiver: u32,
    pub seq: u32,
    pub capture_ts_us: u64,
    pub render_ts_us: u64,
    pub raw_ms: f64,
    pub corrected_ms: f64,
}

/// Cross-checks between client, link and relay counters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconciliation {
    pub rows: Vec<ReconcileRow>,
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconcileRow {
    pub member: u32,
    pub bytes_sent: u64,
    pub bytes_at_orchestrator: u64,
    pub relay_bytes_in: u64,
    pub relay_bytes_out: u64,
    /// Session size minus one, at the end of capture.
    pub fanout: u64,
    /// `relay_bytes_out` predicted from routing decisions when they were
    /// logged (virtual clock), else from `fanout`.
    pub expected_bytes_out: u64,
    /// Frames routed to fewer than `fanout` members, e.g. because a
    /// receiver had already left when a queued frame arrived.
    pub frames_short: u64,
    pub window_bits_match: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub seed: u64,
    pub clock_mode: super::ClockMode,
    pub delay_definition: String,
    pub service_note: Option<String>,
    pub service: ServiceModel,
    pub config: ScenarioConfig,
    pub media_start_us: u64,
    pub media_end_us: u64,
    pub streams: Vec<StreamReport>,
    pub pairs: Vec<PairReport>,
    pub skew: Vec<SkewReport>,
    pub relay: Vec<RelayRow>,
    pub links: Vec<LinkRow>,
    pub reconciliation: Reconciliation,
    pub samples: Vec<DelaySample>,
}

impl MetricsReport {
    pub fn pair(&self, sender: u32, receiver: u32) -> Option<&PairReport> {
        self.pairs
            .iter()
            .find(|p| p.sender == sender && p.receiver == receiver)
    }

    /// Mean corrected delay over all samples.
    pub fn mean_delay_ms(&self) -> Option<f64> {
        let v: Vec<f64> = self.samples.iter().map(|s| s.corrected_ms).collect();
        mean_stdv(&v).map(|(m, _)| m)
    }

    pub fn delay_stats(&self) -> Option<DelayStats> {
        let v: Vec<f64> = self.samples.iter().map(|s| s.corrected_ms).collect();
        DelayStats::from_ms(&v).ok()
    }
}

/// Reduces a run log to a report.
pub fn build_report(
    cfg: &ScenarioConfig,
    service: &ServiceModel,
    service_note: Option<String>,
    log: &RunLog,
) -> MetricsReport {
    let origin = log.media_start_us;
    let full_windows = ((log.media_end_us - origin) as f64 / (cfg.window_s * 1e6)).floor() as usize;

    let mut streams = Vec::new();
    let mut rows = Vec::new();
    for (i, c) in log.clients.iter().enumerate() {
        let deliveries = log
            .uplink_deliveries
            .get(i)
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        let throughput = throughput_series(deliveries, cfg.window_s, origin);
        let at_orch: u64 = deliveries.iter().map(|d| d.1).sum();
        let steady: Vec<f64> = throughput.bps.iter().take(full_windows).copied().collect();
        let (mean_bps, stdv_bps) = mean_stdv(&steady).unwrap_or((0.0, 0.0));
        let points: Vec<f64> = c.sink.self_view.iter().map(|s| s.points as f64).collect();
        let bytes_sent: u64 = c.media_sends.iter().map(|s| s.1).sum();
        let relay = log
            .relay_stats
            .iter()
            .filter(|r| r.sender == c.member_id)
            .fold((0, 0), |acc, r| {
                (acc.0 + r.stats.bytes_in, acc.1 + r.stats.bytes_out)
            });
        let fanout = log
            .clients
            .iter()
            .filter(|o| o.group == c.group && o.member_id != c.member_id)
            .count() as u64;
        let routes = log.routes.iter().filter(|r| r.sender == c.member_id);
        let (expected_bytes_out, frames_short) = if log.routes.is_empty() {
            (relay.0 * fanout, 0)
        } else {
            routes.fold((0, 0), |acc, r| {
                let n = r.recipients.len() as u64;
                (acc.0 + r.bytes * n, acc.1 + u64::from(n < fanout))
            })
        };
        rows.push(ReconcileRow {
            member: c.member_id,
            bytes_sent,
            bytes_at_orchestrator: at_orch,
            relay_bytes_in: relay.0,
            relay_bytes_out: relay.1,
            fanout,
            expected_bytes_out,
            frames_short,
            window_bits_match: throughput.total_bits() == at_orch * 8,
        });
        streams.push(StreamReport {
            source: c.member_id,
            session: c.session_id,
            clock_offset_us: c.clock_offset_us,
            frames_published: c.stats.published,
            frames_skipped: c.stats.skipped,
            encode_failures: c.stats.encode_failures,
            mean_points: mean_stdv(&points).map(|m| m.0).unwrap_or(0.0),
            bytes_sent,
            bytes_at_orchestrator: at_orch,
            throughput,
            mean_bps,
            stdv_bps,
            cov: if mean_bps > 0.0 {
                stdv_bps / mean_bps
            } else {
                0.0
            },
        });
    }

    let mut pairs = Vec::new();
    let mut samples = Vec::new();
    let mut skew = Vec::new();
    for rx in &log.clients {
        let r_off = rx.clock_offset_us;
        for tx in log
            .clients
            .iter()
            .filter(|t| t.group == rx.group && t.member_id != rx.member_id)
        {
            let s_off = tx.clock_offset_us;
            let src = rx
                .sink
                .sources
                .get(&tx.member_id)
                .cloned()
                .unwrap_or_default();
            let renders: Vec<(u64, u64)> = rx
                .sink
                .renders_from(tx.member_id)
                .map(|r| (r.capture_ts_us, r.render_ts_us))
                .collect();
            let stats = delay_stats(&renders, s_off, r_off).ok();
            for r in rx.sink.renders_from(tx.member_id) {
                let raw = r.render_ts_us as i64 - r.capture_ts_us as i64;
                samples.push(DelaySample {
                    sender: tx.member_id,
                    receiver: rx.member_id,
                    seq: r.seq,
                    capture_ts_us: r.capture_ts_us,
                    render_ts_us: r.render_ts_us,
                    raw_ms: raw as f64 / 1000.0,
                    corrected_ms: (raw - r_off + s_off) as f64 / 1000.0,
                });
            }
            pairs.push(PairReport {
                sender: tx.member_id,
                receiver: rx.member_id,
                frames_rendered: src.frames_received,
                gaps: src.gaps,
                out_of_order: src.out_of_order,
                decode_errors: src.decode_errors,
                raw: stats.map(|s| s.0),
                corrected: stats.map(|s| s.1),
            });
        }
        skew.push(SkewReport {
            receiver: rx.member_id,
            skew: skew_stats(&rx.sink).ok(),
        });
    }

    let consistent = rows.iter().all(|r| {
        r.window_bits_match
            && r.bytes_sent >= r.bytes_at_orchestrator
            && r.relay_bytes_in == r.bytes_at_orchestrator
            && r.relay_bytes_out == r.expected_bytes_out
    });

    MetricsReport {
        seed: cfg.seed,
        clock_mode: cfg.clock_mode,
        delay_definition: DELAY_DEFINITION.to_string(),
        service_note,
        service: *service,
        config: cfg.clone(),
        media_start_us: log.media_start_us,
        media_end_us: log.media_end_us,
        streams,
        pairs,
        skew,
        relay: log.relay_stats.clone(),
        links: log.links.clone(),
        reconciliation: Reconciliation { rows, consistent },
        samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::client::RenderRecord;

    #[test]
    fn constant_stream_is_flat() {
        // 100 bytes every 100 ms for 5 s.
        let log: Vec<(u64, u64)> = (0..50).map(|k| (k * 100_000, 100)).collect();
        let s = throughput_series(&log, 1.0, 0);
        assert_eq!(s.bps, vec![8_000.0; 5]);
        assert_eq!(s.total_bits(), 50 * 800);
    }

    #[test]
    fn empty_log_empty_series() {
        let s = throughput_series(&[], 1.0, 0);
        assert!(s.bits.is_empty() && s.bps.is_empty());
    }

    #[test]
    fn windows_are_half_open() {
        let s = throughput_series(&[(999_999, 1), (1_000_000, 2), (3_500_000, 3)], 1.0, 0);
        assert_eq!(s.bits, vec![8, 16, 0, 24]);
        let s = throughput_series(&[(10, 1), (20, 1)], 0.5, 1_000_000);
        assert_eq!(s.bits, vec![16]);
    }

    #[test]
    fn constant_delay() {
        let pairs: Vec<(u64, u64)> = (0..20)
            .map(|k| (k * 66_667, k * 66_667 + 150_000))
            .collect();
        let (raw, cor) = delay_stats(&pairs, 0, 0).unwrap();
        assert_eq!(raw.mean_ms, 150.0);
        assert_eq!(raw.stdv_ms, 0.0);
        assert_eq!(raw, cor);
    }

    #[test]
    fn sender_offset_shifts_raw_only() {
        // True delay 150 ms; sender clock reads 3 ms fast.
        let pairs: Vec<(u64, u64)> = (0..20)
            .map(|k| (k * 66_667 + 3_000, k * 66_667 + 150_000))
            .collect();
        let (raw, cor) = delay_stats(&pairs, 3_000, 0).unwrap();
        assert!((raw.mean_ms - 147.0).abs() < 1e-9);
        assert!((cor.mean_ms - 150.0).abs() < 1e-9);
    }

    #[test]
    fn p95_of_hundred_uniform() {
        let pairs: Vec<(u64, u64)> = (100..200u64).map(|ms| (0, ms * 1000)).collect();
        let (raw, _) = delay_stats(&pairs, 0, 0).unwrap();
        assert!((raw.p95_ms - 194.05).abs() < 1e-9, "{}", raw.p95_ms);
        assert!((raw.mean_ms - 149.5).abs() < 1e-9);
    }

    #[test]
    fn empty_delay_is_no_data() {
        assert!(matches!(
            delay_stats(&[], 0, 0),
            Err(HarnessError::NoData(_))
        ));
    }

    #[test]
    fn population_stdv() {
        let (m, s) = mean_stdv(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]).unwrap();
        assert_eq!((m, s), (5.0, 2.0));
    }

    fn render(source: u32, capture_ms: u64) -> RenderRecord {
        RenderRecord {
            source,
            seq: 0,
            capture_ts_us: capture_ms * 1000,
            receive_ts_us: 0,
            render_ts_us: 0,
            points: 1,
        }
    }

    #[test]
    fn skew_needs_two_sources() {
        let mut sink = RenderSink::default();
        sink.sources.insert(1, Default::default());
        sink.renders.push(render(1, 0));
        assert!(matches!(skew_stats(&sink), Err(HarnessError::NoData(_))));
    }

    #[test]
    fn skew_tracks_latest_per_source() {
        let mut sink = RenderSink::default();
        sink.sources.insert(1, Default::default());
        sink.sources.insert(2, Default::default());
        sink.renders = vec![
            render(1, 100),
            render(2, 130),
            render(1, 166),
            render(2, 196),
        ];
        let s = skew_stats(&sink).unwrap();
        assert_eq!(s.samples, 3);
        assert!((s.max_ms - 36.0).abs() < 1e-9);
        assert!((s.mean_ms - (30.0 + 36.0 + 30.0) / 3.0).abs() < 1e-9);
    }
}
