use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use holomeet::capture::SceneConfig;
use holomeet::codec::CodecConfig;
use holomeet::harness::{
    self, calibrate, read_report, summary_table, write_events, write_report, ClockMode,
    HarnessError, ScenarioConfig,
};
use holomeet::orchestrator::{server, OrchestratorConfig};

#[derive(Parser)]
#[command(
    name = "holomeet",
    version,
    about = "Volumetric conferencing simulator"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario and write summary.json, throughput.csv, delays.csv and events.jsonl.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Wall-clock run over TCP instead of the virtual clock.
        #[arg(long)]
        realtime: bool,
    },
    /// Print the summary table of a finished run.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Benchmark capture, encode and decode on the synthetic subject.
    Calibrate {
        #[arg(long, default_value_t = 10)]
        frames: usize,
        /// Per-camera foreground pixel target.
        #[arg(long, default_value_t = 50_000)]
        target_points: u32,
        #[arg(long, default_value_t = 3)]
        cameras: u32,
    },
    /// Run a standalone orchestrator; events go to stdout as JSON lines.
    Serve {
        /// Orchestrator JSON config (listen_port, max_members, heartbeat_timeout_ms).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "0.0.0.0")]
        bind: String,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("{0}")]
    Other(String),
}

fn load_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Other(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Other(format!("bad config {}: {e}", path.display())))
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = io::stdout().lock().write_all(text.as_bytes());
}

fn run(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Run {
            config,
            out,
            seed,
            realtime,
        } => {
            let mut cfg: ScenarioConfig = load_json(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if realtime {
                cfg.clock_mode = ClockMode::Realtime;
            }
            let (log, service, note) = harness::run_scenario_log(&cfg)?;
            let report = harness::metrics::build_report(&cfg, &service, note, &log);
            write_report(&report, &out)?;
            write_events(&log, &out)?;
            emit(&summary_table(&report));
        }
        Cmd::Report { input } => {
            let report = read_report(&input)?;
            emit(&summary_table(&report));
        }
        Cmd::Calibrate {
            frames,
            target_points,
            cameras,
        } => {
            let scene = SceneConfig {
                target_points,
                cameras,
                ..SceneConfig::default()
            };
            let codec = CodecConfig::default();
            let c = calibrate(&scene, &codec, frames)
                .map_err(|e| CliError::Other(format!("calibration failed: {e}")))?;
            let mbps = c.frame_bytes as f64 * 8.0 * 15.0 / 1e6;
            emit(&format!(
                "frames        {}\npoints/frame  {}\nbytes/frame   {}\nbits/point    {:.2}\n\
                 capture_us    {}\nencode_us     {}\ndecode_us     {}\nbitrate@15fps {mbps:.2} Mbps\n{}\n",
                c.frames,
                c.points,
                c.frame_bytes,
                c.frame_bytes as f64 * 8.0 / c.points.max(1) as f64,
                c.capture_us,
                c.encode_us,
                c.decode_us,
                serde_json::to_string(&c.as_service_model()).unwrap_or_default()
            ));
        }
        Cmd::Serve { config, bind } => {
            let oc: OrchestratorConfig = match config {
                Some(p) => load_json(&p)?,
                None => OrchestratorConfig::default(),
            };
            if !(2..=6).contains(&oc.max_members) {
                return Err(CliError::Other(format!(
                    "max_members must be in [2, 6], got {}",
                    oc.max_members
                )));
            }
            let addr: SocketAddr = format!("{bind}:{}", oc.listen_port)
                .parse()
                .map_err(|e| CliError::Other(format!("bad bind address: {e}")))?;
            let handle = server::spawn(addr, oc, Box::new(io::stdout()))
                .map_err(|e| CliError::Other(format!("cannot listen on {addr}: {e}")))?;
            eprintln!("orchestrator listening on {}", handle.local_addr());
            loop {
                std::thread::park();
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = io::stdout().flush();
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
