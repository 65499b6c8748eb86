use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn holomeet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_holomeet"))
        .args(args)
        .output()
        .expect("spawn holomeet")
}

fn write_config(dir: &Path, json: &str) -> String {
    let p = dir.join("scenario.json");
    fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_writes_reports_and_report_reads_them() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"participants": 3, "duration_s": 3, "scene": {"target_points": 4000}}"#,
    );
    let out = dir.path().join("out");
    let run = holomeet(&[
        "run",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "9",
    ]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let table = String::from_utf8(run.stdout).unwrap();
    assert!(table.contains("1 x 3 participants, 3 s, seed 9"), "{table}");
    assert!(table.contains("reconciliation: consistent"), "{table}");

    let tp = fs::read_to_string(out.join("throughput.csv")).unwrap();
    assert_eq!(tp.lines().next(), Some("time_s,stream,bps"));
    let delays = fs::read_to_string(out.join("delays.csv")).unwrap();
    assert_eq!(
        delays.lines().next(),
        Some("sender,receiver,seq,delay_ms_raw,delay_ms_corrected")
    );
    // 3 senders x 2 receivers x about 45 frames.
    assert!(delays.lines().count() > 200, "{}", delays.lines().count());

    let events = fs::read_to_string(out.join("events.jsonl")).unwrap();
    for line in events.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v.get("event").is_some(), "{line}");
    }
    assert!(events.contains(r#""event":"routed""#));

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 9);

    let rep = holomeet(&["report", "--in", out.to_str().unwrap()]);
    assert!(rep.status.success());
    assert_eq!(String::from_utf8(rep.stdout).unwrap(), table);
}

#[test]
fn bad_inputs_fail_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    let cfg = write_config(dir.path(), r#"{"participants": 9}"#);
    let r = holomeet(&["run", "--config", &cfg, "--out", out]);
    assert!(!r.status.success());
    let err = String::from_utf8(r.stderr).unwrap();
    assert!(err.starts_with("error: invalid scenario config"), "{err}");

    let cfg = write_config(dir.path(), r#"{"partcipants": 2}"#);
    let r = holomeet(&["run", "--config", &cfg, "--out", out]);
    assert!(!r.status.success());
    assert!(String::from_utf8(r.stderr)
        .unwrap()
        .contains("unknown field"));

    let r = holomeet(&["run", "--config", "/nonexistent.json", "--out", out]);
    assert!(!r.status.success());

    let r = holomeet(&[
        "report",
        "--in",
        dir.path().join("missing").to_str().unwrap(),
    ]);
    assert!(!r.status.success());

    let r = holomeet(&["frobnicate"]);
    assert!(!r.status.success());
}

#[test]
fn calibrate_prints_stage_times() {
    let r = holomeet(&[
        "calibrate",
        "--frames",
        "2",
        "--target-points",
        "3000",
        "--cameras",
        "1",
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = String::from_utf8(r.stdout).unwrap();
    for key in ["points/frame", "encode_us", "decode_us", "bitrate@15fps"] {
        assert!(text.contains(key), "{text}");
    }
    let json = text.lines().last().unwrap();
    let m: serde_json::Value = serde_json::from_str(json).unwrap();
    assert!(m["encode_us"].as_u64().is_some());
}
