//! Report files.
//!
//! * `summary.json`: the full [`MetricsReport`].
//! * `throughput.csv`: `time_s,stream,bps`, one row per stream and window,
//!   `time_s` being the window start relative to media start. Sorted by
//!   stream then time.
//! * `delays.csv`: `sender,receiver,seq,delay_ms_raw,delay_ms_corrected`, one
//!   row per rendered frame. Sorted by sender, receiver, seq.
//! * `events.jsonl` (from [`write_events`]): orchestrator events and media
//!   routing decisions, one JSON object per line.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::{HarnessError, MetricsReport, RouteRecord, RunLog};
use crate::orchestrator::Event;

pub const SUMMARY_FILE: &str = "summary.json";
pub const THROUGHPUT_FILE: &str = "throughput.csv";
pub const DELAYS_FILE: &str = "delays.csv";
pub const EVENTS_FILE: &str = "events.jsonl";

pub fn throughput_csv(report: &MetricsReport) -> String {
    let mut out = String::from("time_s,stream,bps\n");
    let mut streams: Vec<_> = report.streams.iter().collect();
    streams.sort_by_key(|s| s.source);
    for s in streams {
        for (k, bps) in s.throughput.bps.iter().enumerate() {
            let t = k as f64 * s.throughput.window_s;
            let _ = writeln!(out, "{t},{},{bps}", s.source);
        }
    }
    out
}

pub fn delays_csv(report: &MetricsReport) -> String {
    let mut out = String::from("sender,receiver,seq,delay_ms_raw,delay_ms_corrected\n");
    let mut rows: Vec<_> = report.samples.iter().collect();
    rows.sort_by_key(|s| (s.sender, s.receiver, s.seq));
    for s in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            s.sender, s.receiver, s.seq, s.raw_ms, s.corrected_ms
        );
    }
    out
}

pub fn write_report(report: &MetricsReport, dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    fs::write(dir.join(SUMMARY_FILE), json)?;
    fs::write(dir.join(THROUGHPUT_FILE), throughput_csv(report))?;
    fs::write(dir.join(DELAYS_FILE), delays_csv(report))?;
    Ok(())
}

pub fn read_report(dir: &Path) -> Result<MetricsReport, HarnessError> {
    let text = fs::read_to_string(dir.join(SUMMARY_FILE))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Serialize)]
#[serde(untagged)]
enum LogLine<'a> {
    Event(&'a Event),
    Route {
        event: &'static str,
        #[serde(flatten)]
        route: &'a RouteRecord,
    },
}

pub fn write_events(log: &RunLog, dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    let mut out = String::new();
    for e in &log.events {
        out.push_str(&serde_json::to_string(&LogLine::Event(e))?);
        out.push('\n');
    }
    for r in &log.routes {
        out.push_str(&serde_json::to_string(&LogLine::Route {
            event: "routed",
            route: r,
        })?);
        out.push('\n');
    }
    fs::write(dir.join(EVENTS_FILE), out)?;
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.1}")).unwrap_or_else(|| "-".into())
}

/// Human-readable summary for `report --in`.
pub fn summary_table(r: &MetricsReport) -> String {
    let mut out = String::new();
    let c = &r.config;
    let _ = writeln!(
        out,
        "{} x {} participants, {} s, seed {}, {:?} clock",
        c.sessions, c.participants, c.duration_s, r.seed, r.clock_mode
    );
    let _ = writeln!(out, "delay: {}", r.delay_definition);
    if let Some(note) = &r.service_note {
        let _ = writeln!(out, "service: {note}");
    }
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:>6} {:>7} {:>7} {:>9} {:>10} {:>10} {:>6}",
        "stream", "frames", "skipped", "points", "mean Mbps", "stdv Mbps", "CoV"
    );
    for s in &r.streams {
        let _ = writeln!(
            out,
            "{:>6} {:>7} {:>7} {:>9.0} {:>10.2} {:>10.2} {:>6.3}",
            s.source,
            s.frames_published,
            s.frames_skipped,
            s.mean_points,
            s.mean_bps / 1e6,
            s.stdv_bps / 1e6,
            s.cov
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:>6} {:>8} {:>7} {:>9} {:>9} {:>9} {:>9} {:>6}",
        "sender", "receiver", "frames", "raw ms", "mean ms", "stdv ms", "p95 ms", "drops"
    );
    for p in &r.pairs {
        let _ = writeln!(
            out,
            "{:>6} {:>8} {:>7} {:>9} {:>9} {:>9} {:>9} {:>6}",
            p.sender,
            p.receiver,
            p.frames_rendered,
            fmt_opt(p.raw.map(|d| d.mean_ms)),
            fmt_opt(p.corrected.map(|d| d.mean_ms)),
            fmt_opt(p.corrected.map(|d| d.stdv_ms)),
            fmt_opt(p.corrected.map(|d| d.p95_ms)),
            p.decode_errors + p.out_of_order + p.gaps
        );
    }
    if let Some(d) = r.delay_stats() {
        let _ = writeln!(
            out,
            "overall: mean {:.1} ms, stdv {:.1} ms, p95 {:.1} ms",
            d.mean_ms, d.stdv_ms, d.p95_ms
        );
    }
    let _ = writeln!(out);
    for s in &r.skew {
        let _ = writeln!(
            out,
            "skew at {}: max {} ms, mean {} ms",
            s.receiver,
            fmt_opt(s.skew.map(|k| k.max_ms)),
            fmt_opt(s.skew.map(|k| k.mean_ms))
        );
    }
    let _ = writeln!(
        out,
        "reconciliation: {}",
        if r.reconciliation.consistent {
            "consistent"
        } else {
            "MISMATCH"
        }
    );
    out
}
