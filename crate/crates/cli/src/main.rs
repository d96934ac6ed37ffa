//! `emisim` — batch front-end for the LiDAR interference simulator.
//!
//! Subcommands: `scan`, `sweep`, `attack inject`, `corrupt`, `metrics`.
//! Every run writes a `manifest.json` alongside its outputs. Outputs are
//! byte-identical across reruns with the same inputs and seed (manifests
//! excepted, for their timestamps).
//!
//! Exit codes: 0 success; 1 I/O or internal failure; 2 invalid
//! configuration or malformed input; 3 partial success (some attack targets
//! rejected or missed).

mod manifest;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use emisim_core::attack::{carrier_search, read_targets_json, AttackPlan};
use emisim_core::corrupt::{corrupt_directory, read_cloud_bin, write_cloud_bin};
use emisim_core::fdd::write_trace_csv;
use emisim_core::metrics::{
    classify_effect, ray_error_stats, sweep_report, write_stats_csv, write_sweep_csv,
};
use emisim_core::scan::scan_frame;
use emisim_core::{
    CouplingChannel, EmiSource, Error, FddMachine, LidarConfig, LidarState, Scene,
};

use manifest::RunManifest;

#[derive(Parser)]
#[command(name = "emisim", version, about = "Spinning ToF LiDAR under intentional EMI")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one frame and write the point cloud plus telemetry traces.
    Scan {
        /// Scene file (key = value grammar).
        #[arg(long)]
        scene: PathBuf,
        /// Sensor configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Interference source file; omit for a clean scan.
        #[arg(long)]
        emi: Option<PathBuf>,
        /// Coupling channel file; omit for a victim with no coupling.
        #[arg(long)]
        channel: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep the carrier over a band and label the effect per frequency.
    Sweep {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        channel: PathBuf,
        /// Inclusive band spec `lo:hi:step` in Hz, e.g. `500e6:3500e6:1e6`.
        #[arg(long)]
        band: String,
        /// Base source whose carrier the sweep overrides.
        #[arg(long)]
        emi: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Attack-side tooling.
    Attack {
        #[command(subcommand)]
        action: AttackAction,
    },
    /// Corrupt every `.bin` cloud under a directory tree.
    Corrupt {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Radial noise half-width, meters.
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare two binary clouds and write displacement statistics.
    Metrics {
        #[arg(long)]
        benign: PathBuf,
        #[arg(long)]
        attacked: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum AttackAction {
    /// Design an injection plan, simulate it, and report per-target hits.
    Inject {
        /// JSON array of `{channel, azimuth_deg, range_m, amplitude?}`.
        #[arg(long)]
        targets: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        channel: PathBuf,
        /// Scene the victim observes during the attack (default: empty).
        #[arg(long)]
        scene: Option<PathBuf>,
        /// Carrier frequency in Hz; omit to search.
        #[arg(long)]
        carrier: Option<f64>,
        /// Carrier search band `lo:hi:step` (used when --carrier is absent).
        #[arg(long)]
        search_band: Option<String>,
        /// AM depth in (0, 1].
        #[arg(long, default_value_t = 1.0)]
        depth: f64,
        /// Attacker system latency, seconds.
        #[arg(long, default_value_t = 0.0)]
        latency: f64,
        /// Sync jitter sigma, seconds.
        #[arg(long, default_value_t = 1e-9)]
        jitter: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

/// Map error kinds onto the documented exit codes.
fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_)
        | Error::Parse { .. }
        | Error::Domain(_)
        | Error::UnknownSurface(_)
        | Error::RayConflict { .. }
        | Error::Format { .. } => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> emisim_core::Result<ExitCode> {
    match cli.command {
        Command::Scan {
            scene,
            config,
            emi,
            channel,
            seed,
            out,
        } => cmd_scan(&scene, &config, emi.as_deref(), channel.as_deref(), seed, &out),
        Command::Sweep {
            scene,
            config,
            channel,
            band,
            emi,
            seed,
            out,
        } => cmd_sweep(&scene, &config, &channel, &band, emi.as_deref(), seed, &out),
        Command::Attack {
            action:
                AttackAction::Inject {
                    targets,
                    config,
                    channel,
                    scene,
                    carrier,
                    search_band,
                    depth,
                    latency,
                    jitter,
                    seed,
                    out,
                },
        } => cmd_attack_inject(InjectArgs {
            targets,
            config,
            channel,
            scene,
            carrier,
            search_band,
            depth,
            latency,
            jitter,
            seed,
            out,
        }),
        Command::Corrupt {
            input,
            output,
            epsilon,
            seed,
        } => cmd_corrupt(&input, &output, epsilon, seed),
        Command::Metrics {
            benign,
            attacked,
            out,
        } => cmd_metrics(&benign, &attacked, &out),
    }
}

fn load_channel(path: Option<&Path>) -> emisim_core::Result<CouplingChannel> {
    match path {
        Some(p) => CouplingChannel::from_file(p),
        None => Ok(CouplingChannel::default()),
    }
}

fn running_machine(config: &LidarConfig) -> FddMachine {
    FddMachine::running(config.fault_thresholds(), config.fault_debounce, config.rpm)
}

fn write_monitoring_csv(
    readouts: &[emisim_core::MonitoringReadout],
    rails: usize,
    path: &Path,
) -> emisim_core::Result<()> {
    let mut out = Vec::new();
    write!(out, "timestamp_s,temperature_c,rpm")?;
    for i in 0..rails {
        write!(out, ",rail_{i}_v")?;
    }
    writeln!(out)?;
    for r in readouts {
        write!(out, "{},{},{}", r.timestamp, r.temperature, r.rpm)?;
        for v in &r.voltage_rails {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    fs::write(path, out)?;
    Ok(())
}

fn cmd_scan(
    scene_path: &Path,
    config_path: &Path,
    emi_path: Option<&Path>,
    channel_path: Option<&Path>,
    seed: u64,
    out: &Path,
) -> emisim_core::Result<ExitCode> {
    let scene = Scene::from_file(scene_path)?;
    let config = LidarConfig::from_file(config_path)?;
    let emi = emi_path.map(EmiSource::from_file).transpose()?;
    let channel = load_channel(channel_path)?;
    fs::create_dir_all(out)?;

    let result = scan_frame(&scene, &config, emi.as_ref(), &channel, &running_machine(&config), seed)?;
    write_cloud_bin(&result.cloud, &out.join("cloud.bin"))?;
    write_monitoring_csv(&result.readouts, config.nominal_rails.len(), &out.join("monitoring.csv"))?;
    let mut trace = Vec::new();
    write_trace_csv(&result.trace, &mut trace)?;
    fs::write(out.join("state_trace.csv"), trace)?;

    let mut manifest = RunManifest::start("scan", seed);
    manifest
        .input("scene", scene_path.display())
        .input("config", config_path.display());
    if let Some(p) = emi_path {
        manifest.input("emi", p.display());
    }
    if let Some(p) = channel_path {
        manifest.input("channel", p.display());
    }
    manifest
        .output("cloud.bin")
        .output("monitoring.csv")
        .output("state_trace.csv");
    manifest.write(out)?;
    println!(
        "scan: {} points ({} valid), final state {}",
        result.cloud.points.len(),
        result.cloud.valid_count(),
        result.final_state().name()
    );
    Ok(ExitCode::SUCCESS)
}

/// Parse an inclusive `lo:hi:step` band spec into its frequencies.
fn parse_band(spec: &str) -> emisim_core::Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let fail = |m: &str| Error::Domain(format!("band spec `{spec}`: {m}"));
    if parts.len() != 3 {
        return Err(fail("expected lo:hi:step"));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| fail("not a number"));
    let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
    if !(lo > 0.0 && hi >= lo && step > 0.0) {
        return Err(fail("need 0 < lo <= hi and step > 0"));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| lo + i as f64 * step).collect())
}

fn cmd_sweep(
    scene_path: &Path,
    config_path: &Path,
    channel_path: &Path,
    band: &str,
    emi_path: Option<&Path>,
    seed: u64,
    out: &Path,
) -> emisim_core::Result<ExitCode> {
    let scene = Scene::from_file(scene_path)?;
    let config = LidarConfig::from_file(config_path)?;
    let channel = CouplingChannel::from_file(channel_path)?;
    let base = match emi_path {
        Some(p) => EmiSource::from_file(p)?,
        None => EmiSource::default(),
    };
    let freqs = parse_band(band)?;
    fs::create_dir_all(out)?;

    let machine = running_machine(&config);
    let benign = scan_frame(&scene, &config, None, &channel, &machine, seed)?;

    let results: Vec<(f64, emisim_core::PointCloud, LidarState)> = freqs
        .par_iter()
        .map(|&freq| {
            let source = EmiSource {
                carrier_freq: freq,
                ..base.clone()
            };
            let run = scan_frame(&scene, &config, Some(&source), &channel, &machine, seed)?;
            let state = run.final_state();
            Ok((freq, run.cloud, state))
        })
        .collect::<emisim_core::Result<_>>()?;

    let rows = sweep_report(&results, &benign.cloud)?;
    let mut csv = Vec::new();
    write_sweep_csv(&rows, &mut csv)?;
    fs::write(out.join("sweep.csv"), csv)?;

    let mut manifest = RunManifest::start("sweep", seed);
    manifest
        .input("scene", scene_path.display())
        .input("config", config_path.display())
        .input("channel", channel_path.display())
        .input("band", band);
    manifest.output("sweep.csv");
    manifest.write(out)?;
    println!("sweep: {} frequencies", rows.len());
    Ok(ExitCode::SUCCESS)
}

struct InjectArgs {
    targets: PathBuf,
    config: PathBuf,
    channel: PathBuf,
    scene: Option<PathBuf>,
    carrier: Option<f64>,
    search_band: Option<String>,
    depth: f64,
    latency: f64,
    jitter: f64,
    seed: u64,
    out: PathBuf,
}

fn cmd_attack_inject(args: InjectArgs) -> emisim_core::Result<ExitCode> {
    let targets = read_targets_json(&args.targets)?;
    let config = LidarConfig::from_file(&args.config)?;
    let channel = CouplingChannel::from_file(&args.channel)?;
    let scene = match &args.scene {
        Some(p) => Scene::from_file(p)?,
        None => Scene::default(),
    };
    fs::create_dir_all(&args.out)?;

    let carrier = match (args.carrier, &args.search_band) {
        (Some(c), _) => c,
        (None, Some(band)) => {
            let freqs = parse_band(band)?;
            let step = if freqs.len() > 1 { freqs[1] - freqs[0] } else { 1e6 };
            let (best, _curve) = carrier_search(
                &channel,
                (freqs[0], *freqs.last().unwrap()),
                step,
                &config,
                &scene,
                args.seed,
            )?;
            best
        }
        (None, None) => {
            return Err(Error::Domain(
                "provide --carrier or --search-band".into(),
            ))
        }
    };

    let (mut plan, rejected) =
        AttackPlan::design(&targets, &config, carrier, args.depth, args.latency)?;
    plan.sync_jitter_sigma = args.jitter;

    // Simulate the synchronized attack over one frame. An empty plan emits
    // nothing; there is no carrier to key.
    let source = (!plan.baseband.is_empty()).then(|| plan.aligned_source(0.0, args.seed));
    let machine = running_machine(&config);
    let result = scan_frame(&scene, &config, source.as_ref(), &channel, &machine, args.seed)?;
    let outcomes = plan.evaluate(&result.cloud, &config);
    let hits = outcomes.iter().filter(|o| o.hit).count();

    write_cloud_bin(&result.cloud, &args.out.join("cloud.bin"))?;
    fs::write(
        args.out.join("plan.json"),
        serde_json::to_string_pretty(&plan).expect("plan serializes"),
    )?;
    let mut baseband = Vec::new();
    plan.baseband.write_csv(&mut baseband)?;
    fs::write(args.out.join("baseband.csv"), baseband)?;

    let mut report = Vec::new();
    writeln!(
        report,
        "channel,azimuth_deg,range_m,ray_cycle,ray_channel,achieved_range_m,hit"
    )?;
    for o in &outcomes {
        writeln!(
            report,
            "{},{},{},{},{},{},{}",
            o.resolved.target.channel,
            o.resolved.target.azimuth_deg,
            o.resolved.target.range_m,
            o.resolved.ray.0,
            o.resolved.ray.1,
            o.achieved_range
                .map(|r| r.to_string())
                .unwrap_or_else(|| "miss".to_string()),
            o.hit
        )?;
    }
    for idx in &rejected {
        let t = &targets[*idx];
        writeln!(
            report,
            "{},{},{},rejected,rejected,unreachable-azimuth,false",
            t.channel, t.azimuth_deg, t.range_m
        )?;
    }
    fs::write(args.out.join("report.csv"), report)?;

    let mut manifest = RunManifest::start("attack inject", args.seed);
    manifest
        .input("targets", args.targets.display())
        .input("config", args.config.display())
        .input("channel", args.channel.display())
        .input("carrier_hz", carrier);
    if let Some(p) = &args.scene {
        manifest.input("scene", p.display());
    }
    manifest
        .output("plan.json")
        .output("baseband.csv")
        .output("cloud.bin")
        .output("report.csv");
    manifest.write(&args.out)?;

    println!(
        "attack inject: carrier {carrier} Hz, {hits}/{} targets hit, {} rejected",
        outcomes.len(),
        rejected.len()
    );
    let partial = hits < outcomes.len() || !rejected.is_empty();
    Ok(if partial && !targets.is_empty() {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_corrupt(input: &Path, output: &Path, epsilon: f64, seed: u64) -> emisim_core::Result<ExitCode> {
    fs::create_dir_all(output)?;
    let files = corrupt_directory(input, output, epsilon, seed)?;
    let mut manifest = RunManifest::start("corrupt", seed);
    manifest
        .input("input", input.display())
        .input("epsilon_m", epsilon);
    for f in &files {
        manifest.output(&f.display().to_string());
    }
    manifest.write(output)?;
    println!("corrupt: {} files, epsilon {epsilon} m", files.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_metrics(benign: &Path, attacked: &Path, out: &Path) -> emisim_core::Result<ExitCode> {
    let a = read_cloud_bin(benign)?;
    let b = read_cloud_bin(attacked)?;
    let stats = ray_error_stats(&a, &b)?;
    let label = classify_effect(&stats, LidarState::Normal);
    fs::create_dir_all(out)?;
    let mut csv = Vec::new();
    write_stats_csv(&stats, label, &mut csv)?;
    fs::write(out.join("stats.csv"), csv)?;

    let mut manifest = RunManifest::start("metrics", 0);
    manifest
        .input("benign", benign.display())
        .input("attacked", attacked.display());
    manifest.output("stats.csv");
    manifest.write(out)?;
    println!(
        "metrics: mean |dr| {:.4} m, dropped {:.3}, injected {}, label {}",
        stats.mean_abs_error,
        stats.dropped_fraction,
        stats.injected_count,
        label.name()
    );
    Ok(ExitCode::SUCCESS)
}
