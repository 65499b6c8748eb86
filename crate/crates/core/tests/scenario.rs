//! Virtual-clock scenarios checked against hand-derived expectations.

use proptest::prelude::*;

use holomeet::harness::{self, Link, LinkModel, LinkOverride, ScenarioConfig};
use holomeet::SceneConfig;

fn short(participants: usize) -> ScenarioConfig {
    ScenarioConfig {
        participants,
        duration_s: 6.0,
        scene: SceneConfig {
            target_points: 6_000,
            ..SceneConfig::default()
        },
        ..ScenarioConfig::default()
    }
}

#[test]
fn four_participants_give_twelve_delay_rows() {
    let r = harness::run_scenario(&short(4)).unwrap();
    assert_eq!(r.pairs.len(), 12);
    let mut seen: Vec<_> = r.pairs.iter().map(|p| (p.sender, p.receiver)).collect();
    seen.sort_unstable();
    seen.dedup();
    assert_eq!(seen.len(), 12);
    assert!(r
        .pairs
        .iter()
        .all(|p| p.sender != p.receiver && p.gaps == 0));
}

#[test]
fn seven_participants_is_a_config_error() {
    let err = harness::run_scenario(&short(7)).unwrap_err();
    assert!(matches!(err, harness::HarnessError::Config(_)), "{err}");
}

#[test]
fn identical_pipelines_skew_within_one_frame() {
    let r = harness::run_scenario(&short(3)).unwrap();
    for s in &r.skew {
        let sk = s.skew.as_ref().unwrap();
        assert!(
            sk.max_ms <= 1000.0 / 15.0 + 1.0,
            "receiver {}: {sk:?}",
            s.receiver
        );
    }
}

#[test]
fn slow_uplink_shows_up_as_skew() {
    let slow = LinkModel {
        base_delay_us: 102_000,
        ..LinkModel::default()
    };
    let cfg = ScenarioConfig {
        link_overrides: vec![LinkOverride {
            client: 0,
            uplink: Some(slow),
            downlink: None,
        }],
        ..short(3)
    };
    let r = harness::run_scenario(&cfg).unwrap();
    // Members 2 and 3 see member 1 about 100 ms late relative to each other.
    for rx in [2, 3] {
        let sk = r
            .skew
            .iter()
            .find(|s| s.receiver == rx)
            .unwrap()
            .skew
            .as_ref()
            .unwrap();
        assert!(
            (sk.mean_ms - 100.0).abs() <= 1000.0 / 15.0,
            "receiver {rx}: {sk:?}"
        );
    }
    let d1 = r.pair(1, 2).unwrap().corrected.as_ref().unwrap().mean_ms;
    let d3 = r.pair(3, 2).unwrap().corrected.as_ref().unwrap().mean_ms;
    assert!((d1 - d3 - 100.0).abs() < 5.0, "{d1} vs {d3}");
}

#[test]
fn narrow_uplink_queues_without_dropping() {
    // About 2 Mbps of media into a 1.5 Mbps pipe.
    let narrow = LinkModel {
        bandwidth_bps: 1.5e6,
        ..LinkModel::default()
    };
    let cfg = ScenarioConfig {
        link_overrides: vec![LinkOverride {
            client: 0,
            uplink: Some(narrow),
            downlink: None,
        }],
        ..short(2)
    };
    let r = harness::run_scenario(&cfg).unwrap();
    let stream = &r.streams[0];
    let offered = stream.bytes_sent as f64 * 8.0 / cfg.duration_s;
    assert!(offered > 1.6e6, "offered load {offered}");
    let fast = r.pair(2, 1).unwrap().corrected.as_ref().unwrap().mean_ms;
    let slow = r.pair(1, 2).unwrap();
    assert!(slow.corrected.as_ref().unwrap().mean_ms > fast + 200.0);
    assert_eq!(slow.gaps, 0);
    let up = r
        .links
        .iter()
        .find(|l| l.member == 1 && matches!(l.direction, harness::LinkDirection::Uplink))
        .unwrap();
    assert!(up.stats.overloaded > 0, "{up:?}");
    assert!(r.reconciliation.consistent, "{:#?}", r.reconciliation.rows);
    // The backlog outlasts the drain: the tail reaches the relay after the
    // receiver has left and is forwarded to nobody.
    let row = &r.reconciliation.rows[0];
    assert!(row.frames_short > 0 && row.relay_bytes_out < row.relay_bytes_in);
}

#[test]
fn audio_filler_does_not_disturb_media_accounting() {
    let cfg = ScenarioConfig {
        audio_bps: 64_000,
        ..short(2)
    };
    let r = harness::run_scenario(&cfg).unwrap();
    assert!(r.reconciliation.consistent);
    assert!(r.pairs.iter().all(|p| p.frames_rendered > 60));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Bits delivered in any 1 s window stay within 1% of the cap when no
    /// single message exceeds 1% of a second's capacity.
    #[test]
    fn link_respects_bandwidth_cap(
        sends in prop::collection::vec((0u64..3_000_000, 1usize..25_000), 1..400),
        jitter in 0u64..2_000,
        seed in any::<u64>(),
    ) {
        let bw = 20e6;
        let model = LinkModel { base_delay_us: 2_000 + jitter, jitter_us: jitter, bandwidth_bps: bw };
        let mut sends = sends;
        sends.sort_unstable();
        let mut link = Link::new(model, seed);
        let mut deliveries: Vec<(u64, u64)> = sends
            .iter()
            .map(|&(t, bytes)| (link.transfer(bytes, t), bytes as u64 * 8))
            .collect();
        deliveries.sort_unstable();
        for w in 0..deliveries.len() {
            let start = deliveries[w].0;
            let bits: u64 = deliveries[w..]
                .iter()
                .take_while(|d| d.0 < start + 1_000_000)
                .map(|d| d.1)
                .sum();
            prop_assert!(bits as f64 <= bw * 1.01, "{} bits in the window from {}", bits, start);
        }
    }
}
