//! Batch CLI for rolling-shutter ENF analysis.
//!
//! Exit codes: 0 success, 2 input/validation failure, 3 a time verification
//! ended with no decision, 64 bad usage.

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::{DateTime, Utc};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::Serialize;

use rsenf::{
    estimate_idle, idle_sweep_table, interpolate_idle, synth_enf, synth_luminance,
    verify_timestamp, vertical_phase, CaptureProfile, Decision, GridProfile, MetricId,
    SynthesisConfig,
};

const EXIT_OK: u8 = 0;
const EXIT_VALIDATION: u8 = 2;
const EXIT_NO_DECISION: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "rsenf",
    about = "Rolling-shutter ENF analysis: shifted-component tables, synthetic footage, idle-period estimation and time-of-recording verification",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the two-strongest-component table over an idle-period grid as CSV.
    Model {
        /// Nominal mains frequency in Hz (50 or 60).
        #[arg(long, default_value_t = 50.0)]
        grid_hz: f64,
        /// Video frame rate in fps.
        #[arg(long)]
        fps: f64,
        /// Idle grid step in percent.
        #[arg(long, default_value_t = 5.0)]
        idle_step: f64,
        /// Row capacity used to realise each idle fraction.
        #[arg(long, default_value_t = 1000)]
        resolution: usize,
        /// Append h1_mag,h2_mag attenuation columns for plotting.
        #[arg(long)]
        with_magnitudes: bool,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthesize an ENF walk and the shuttered luminance series it drives.
    Simulate {
        /// Video duration in seconds.
        #[arg(long)]
        duration: f64,
        #[arg(long, default_value_t = 30.0)]
        fps: f64,
        /// Row capacity per frame period (rows kept = capacity x (1 - idle)).
        #[arg(long, default_value_t = 100)]
        rows: usize,
        /// Idle fraction in [0, 0.95].
        #[arg(long, default_value_t = 0.0)]
        idle: f64,
        /// Additive white noise level against the modulation term; omit for
        /// a clean signal.
        #[arg(long)]
        snr_db: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50.0)]
        grid_hz: f64,
        /// Recording start time (RFC 3339).
        #[arg(long, default_value = "2021-01-01T00:00:00Z")]
        start: String,
        #[arg(long)]
        out_rlum: PathBuf,
        #[arg(long)]
        out_enf: PathBuf,
        /// Also write the per-row means matrix for vertical-phase analysis.
        #[arg(long)]
        out_row_means: Option<PathBuf>,
    },
    /// Estimate a recording's idle period from its RLUM series.
    EstimateIdle {
        #[arg(long)]
        rlum: PathBuf,
        /// Nominal mains frequency; defaults to the RLUM header's grid_hz.
        #[arg(long)]
        grid_hz: Option<f64>,
        #[arg(long)]
        out_json: Option<PathBuf>,
    },
    /// Run the vertical-phase baseline on a row-means matrix.
    VerticalPhase {
        #[arg(long)]
        row_means: PathBuf,
        #[arg(long, default_value_t = 50.0)]
        grid_hz: f64,
        #[arg(long)]
        fps: f64,
        #[arg(long)]
        out_json: Option<PathBuf>,
    },
    /// Extract an ENF trace from one shifted component.
    ExtractEnf {
        #[arg(long)]
        rlum: PathBuf,
        #[arg(long)]
        component_hz: f64,
        /// Idle fraction assumed when re-expanding frames before extraction.
        #[arg(long, default_value_t = 0.0)]
        idle_assume: f64,
        #[arg(long)]
        grid_hz: Option<f64>,
        #[arg(long)]
        out_csv: PathBuf,
    },
    /// Verify a claimed recording time against a ground-truth ENF log.
    VerifyTime {
        #[arg(long)]
        rlum: PathBuf,
        #[arg(long)]
        enf_log: PathBuf,
        /// Claimed recording start (RFC 3339).
        #[arg(long)]
        claimed_start: String,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        metric: u8,
        #[arg(long, default_value_t = 0.94)]
        threshold: f64,
        #[arg(long)]
        out_json: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct SimulationSidecar {
    true_idle_pct: f64,
    seed: u64,
    frame_rate_fps: f64,
    row_capacity: usize,
    rows_per_frame: usize,
    frame_count: usize,
    grid_hz: f64,
    snr_db: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}

fn run(command: Command) -> Result<u8, String> {
    match command {
        Command::Model {
            grid_hz,
            fps,
            idle_step,
            resolution,
            with_magnitudes,
            out,
        } => {
            if !idle_step.is_finite() || idle_step <= 0.0 {
                return Err("idle step must be positive".into());
            }
            let grid = GridProfile::new(grid_hz).map_err(|e| e.to_string())?;
            let mut idle_grid = Vec::new();
            let mut pct = 0.0;
            while pct <= 95.0 + 1e-9 {
                idle_grid.push(pct / 100.0);
                pct += idle_step;
            }
            let table =
                idle_sweep_table(&grid, fps, &idle_grid, resolution).map_err(|e| e.to_string())?;
            let csv = if with_magnitudes {
                table.to_csv_with_magnitudes()
            } else {
                table.to_csv()
            };
            match out {
                Some(path) => write_text(&path, &csv)?,
                None => print!("{csv}"),
            }
            Ok(EXIT_OK)
        }

        Command::Simulate {
            duration,
            fps,
            rows,
            idle,
            snr_db,
            seed,
            grid_hz,
            start,
            out_rlum,
            out_enf,
            out_row_means,
        } => {
            let grid = GridProfile::new(grid_hz).map_err(|e| e.to_string())?;
            let capture = CaptureProfile::from_idle(fps, rows, idle).map_err(|e| e.to_string())?;
            let start = parse_time(&start)?;
            let config = SynthesisConfig {
                noise_snr_db: snr_db,
                seed,
                ..Default::default()
            };
            let frame_count = (duration * fps).round() as usize;
            let enf_duration = (frame_count as f64 / fps).ceil() + 2.0;
            let enf = synth_enf(enf_duration, &grid, &config, start).map_err(|e| e.to_string())?;
            let series =
                synth_luminance(&enf, &capture, frame_count, &config).map_err(|e| e.to_string())?;

            let true_idle_pct = capture.idle_ratio() * 100.0;
            rsenf::io::write_rlum(&out_rlum, &series, Some(true_idle_pct))
                .map_err(|e| e.to_string())?;
            rsenf::io::write_enf_log(&out_enf, &enf).map_err(|e| e.to_string())?;

            let sidecar = SimulationSidecar {
                true_idle_pct,
                seed,
                frame_rate_fps: fps,
                row_capacity: capture.row_capacity,
                rows_per_frame: capture.rows_per_frame,
                frame_count,
                grid_hz,
                snr_db,
            };
            let sidecar_path = sidecar_path(&out_rlum);
            write_text(&sidecar_path, &to_pretty_json(&sidecar))?;
            if let Some(path) = out_row_means {
                let rows = rsenf::RowMeansMatrix::from_luminance(&series);
                rsenf::io::write_row_means(&path, &rows).map_err(|e| e.to_string())?;
            }
            Ok(EXIT_OK)
        }

        Command::EstimateIdle {
            rlum,
            grid_hz,
            out_json,
        } => {
            let (series, header) = rsenf::io::read_rlum(&rlum).map_err(|e| e.to_string())?;
            let grid = resolve_grid(grid_hz, header.grid_hz)?;
            let idle_grid: Vec<f64> = (0..20).map(|i| i as f64 * 5.0 / 100.0).collect();
            let table = idle_sweep_table(&grid, series.capture.frame_rate_fps, &idle_grid, 1000)
                .map_err(|e| e.to_string())?;
            let estimate = estimate_idle(&series, &grid, &table).map_err(|e| e.to_string())?;
            emit_json(out_json.as_deref(), &estimate)?;
            Ok(EXIT_OK)
        }

        Command::VerticalPhase {
            row_means,
            grid_hz,
            fps,
            out_json,
        } => {
            let rows = rsenf::io::read_row_means(&row_means, fps).map_err(|e| e.to_string())?;
            let grid = GridProfile::new(grid_hz).map_err(|e| e.to_string())?;
            let result = vertical_phase(&rows, &grid).map_err(|e| e.to_string())?;
            emit_json(out_json.as_deref(), &result)?;
            Ok(EXIT_OK)
        }

        Command::ExtractEnf {
            rlum,
            component_hz,
            idle_assume,
            grid_hz,
            out_csv,
        } => {
            let (series, header) = rsenf::io::read_rlum(&rlum).map_err(|e| e.to_string())?;
            let grid = resolve_grid(grid_hz, header.grid_hz)?;
            let prepared = interpolate_idle(&series, idle_assume).map_err(|e| e.to_string())?;
            let trace = rsenf::extract_enf(&prepared, &grid, component_hz, 20.0, 19.0)
                .map_err(|e| e.to_string())?;
            rsenf::io::write_enf_log(&out_csv, &trace).map_err(|e| e.to_string())?;
            Ok(EXIT_OK)
        }

        Command::VerifyTime {
            rlum,
            enf_log,
            claimed_start,
            metric,
            threshold,
            out_json,
        } => {
            let (series, _header) = rsenf::io::read_rlum(&rlum).map_err(|e| e.to_string())?;
            let reference = rsenf::io::read_enf_log(&enf_log).map_err(|e| e.to_string())?;
            let claimed = parse_time(&claimed_start)?;
            let metric = MetricId::from_number(metric).map_err(|e| e.to_string())?;
            let report = verify_timestamp(&series, &reference, claimed, metric, threshold, 1.0)
                .map_err(|e| e.to_string())?;
            emit_json(out_json.as_deref(), &report)?;
            Ok(match report.decision {
                Decision::NoDecision => EXIT_NO_DECISION,
                _ => EXIT_OK,
            })
        }
    }
}

fn resolve_grid(flag: Option<f64>, header: Option<f64>) -> Result<GridProfile, String> {
    let hz = flag
        .or(header)
        .ok_or("no --grid-hz given and the RLUM header carries no grid_hz")?;
    GridProfile::new(hz).map_err(|e| e.to_string())
}

fn parse_time(s: &str) -> Result<DateTime<Utc>, String> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| format!("bad timestamp {s:?}: {e}"))
}

fn sidecar_path(rlum: &std::path::Path) -> PathBuf {
    let mut os = rlum.as_os_str().to_owned();
    os.push(".meta.json");
    PathBuf::from(os)
}

fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn emit_json<T: Serialize>(path: Option<&std::path::Path>, value: &T) -> Result<(), String> {
    let json = to_pretty_json(value);
    match path {
        Some(p) => write_text(p, &json),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

fn write_text(path: &std::path::Path, contents: &str) -> Result<(), String> {
    std::fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}
