//! Frame-level scan driver.
//!
//! Orchestrates one revolution: per cycle it samples monitoring telemetry,
//! steps the supervision machine, and — while the machine allows — runs the
//! per-firing receive chain (echo + coupled interference, saturation, ADC,
//! peak detection, ranging).
//!
//! The receive chain is evaluated directly at the ADC sample instants. The
//! analog stages are elementwise (superposition, clipping), so point-sampling
//! commutes with them and the result is identical to densely synthesizing
//! the window and digitizing it; a test asserts that equivalence. Receiver
//! noise is modeled at the ADC input.

use rayon::prelude::*;
use serde::Serialize;

use crate::cloud::{Point, PointCloud};
use crate::config::LidarConfig;
use crate::emi::{CouplingChannel, EmiSource, Surface};
use crate::error::Result;
use crate::fdd::{classify_faults, step, FddMachine, LidarState, TraceRecord};
use crate::monitor::{perturb_monitoring, MonitoringReadout};
use crate::rng::{gaussian, hash_label, task_rng};
use crate::scene::{cast_ray, ray_direction, Scene};
use crate::schedule::{cycles_in, firing_azimuth, firing_time};
use crate::signal::{detect_peak, echo_intensity, pulse_sigma, range_from_tof, EchoDetection, SPEED_OF_LIGHT};
use crate::waveform::Waveform;

/// Task-salt for receiver noise streams.
const SALT_NOISE: u64 = 0x6e6f_6973;

/// Everything one simulated frame produces.
#[derive(Debug, Clone, Serialize)]
pub struct ScanOutput {
    pub cloud: PointCloud,
    /// One telemetry sample per processed cycle.
    pub readouts: Vec<MonitoringReadout>,
    /// Supervision state after each processed cycle.
    pub states: Vec<LidarState>,
    /// Per-cycle fault trace (state plus active faults).
    pub trace: Vec<TraceRecord>,
    /// The machine as it stood when the frame ended.
    pub final_machine: FddMachine,
}

impl ScanOutput {
    /// State at the end of the frame.
    pub fn final_state(&self) -> LidarState {
        self.final_machine.state
    }
}

/// How a cycle's firings are treated, given the supervision state.
#[derive(Debug, Clone, Copy, PartialEq)]
enum CycleMode {
    /// Emit points normally.
    Valid,
    /// Emit points flagged invalid (active point-invalidating L1 fault).
    Invalid,
    /// Emit nothing (initialization or shutdown).
    Skip,
}

/// Stable identifier for a configuration, for cloud compatibility checks.
pub fn config_id(config: &LidarConfig) -> u64 {
    hash_label(&serde_json::to_string(config).expect("config serializes"))
}

/// Simulate one frame (one revolution).
///
/// Per cycle: ground-truth telemetry is corrupted through the coupling
/// channel, faults are classified and debounced, and the machine steps.
/// Points are emitted while the machine is Normal, flagged invalid while
/// Warning with an active point-invalidating L1 fault, and the frame stops
/// immediately when PowerOff is entered. Fully deterministic given `seed`.
pub fn scan_frame(
    scene: &Scene,
    config: &LidarConfig,
    emi: Option<&EmiSource>,
    channel: &CouplingChannel,
    fdd: &FddMachine,
    seed: u64,
) -> Result<ScanOutput> {
    config.validate()?;
    scene.validate()?;
    channel.validate()?;
    if let Some(src) = emi {
        src.validate()?;
    }

    let cycles = cycles_in(config, config.revolution_period());

    // Interference levels at each surface are static over a frame.
    let receiver_amp = match emi {
        Some(src) => channel.coupled_amplitude(src, Surface::ReceiverTrace)?,
        None => 0.0,
    };
    let encoder_attacked = match emi {
        Some(src) => {
            channel.coupled_amplitude(src, Surface::EncoderLine)? >= channel.perturb.encoder
        }
        None => false,
    };
    // A carrier that rails the front end hides every echo under the clip.
    let railed = emi.is_some() && receiver_amp >= config.receiver_saturation;

    // Supervision pass: sequential, the machine state threads through cycles.
    let mut machine = fdd.clone();
    let mut readouts = Vec::new();
    let mut states = Vec::new();
    let mut trace = Vec::new();
    let mut modes = Vec::new();
    // The encoder measurement chain has dynamics: under attack each cycle
    // decays the previous *reading*; once the attack stops the encoder sees
    // the true motor speed again.
    let mut rpm_reading = config.rpm;
    for cycle in 0..cycles {
        let timestamp = cycle as f64 * config.cycle_period;
        let truth = MonitoringReadout {
            temperature: config.nominal_temperature,
            voltage_rails: config.nominal_rails.clone(),
            rpm: if encoder_attacked { rpm_reading } else { config.rpm },
            timestamp,
        };
        let readout = perturb_monitoring(&truth, emi, channel, &channel.perturb, seed)?;
        rpm_reading = readout.rpm;

        let (classified, faults) = classify_faults(&readout, &machine);
        machine = step(&classified, &faults);

        readouts.push(readout);
        states.push(machine.state);
        trace.push(TraceRecord {
            timestamp,
            state: machine.state,
            faults: faults.clone(),
        });

        match machine.state {
            LidarState::PowerOff => {
                modes.push(CycleMode::Skip);
                break; // shutdown truncates the frame
            }
            LidarState::Normal => modes.push(CycleMode::Valid),
            LidarState::Warning => {
                let invalidating = faults.iter().any(|f| f.code.invalidates_points());
                modes.push(if invalidating {
                    CycleMode::Invalid
                } else {
                    CycleMode::Valid
                });
            }
            LidarState::Initialization => modes.push(CycleMode::Skip),
        }
    }

    // Ranging pass: cycles are independent once their mode is fixed.
    let per_cycle: Vec<Vec<Point>> = (0..modes.len())
        .into_par_iter()
        .map(|cycle| {
            let mode = modes[cycle];
            if mode == CycleMode::Skip || railed {
                return Vec::new();
            }
            let mut points = Vec::new();
            for ch in 0..config.num_channels {
                if let Some(point) =
                    fire_one(scene, config, emi, receiver_amp, cycle as u32, ch, mode, seed)
                {
                    points.push(point);
                }
            }
            points
        })
        .collect();

    let mut cloud = PointCloud::new(0, config_id(config));
    cloud.points = per_cycle.into_iter().flatten().collect();

    Ok(ScanOutput {
        cloud,
        readouts,
        states,
        trace,
        final_machine: machine,
    })
}

/// Run the receive chain for a single firing.
#[allow(clippy::too_many_arguments)]
fn fire_one(
    scene: &Scene,
    config: &LidarConfig,
    emi: Option<&EmiSource>,
    receiver_amp: f64,
    cycle: u32,
    channel: u16,
    mode: CycleMode,
    seed: u64,
) -> Option<Point> {
    let emit_time = firing_time(config, cycle, channel);
    let azimuth = firing_azimuth(config, cycle, channel);
    let elevation = config.vertical_angles[channel as usize];
    let direction = ray_direction(azimuth, elevation);
    let hit = cast_ray(scene, [0.0; 3], direction, config.max_range);

    let detection = sample_window(config, emi, receiver_amp, emit_time, hit, seed, cycle, channel)?;
    let r = range_from_tof(emit_time, detection.tau1).ok()?;
    if r > config.max_range {
        return None; // range gate: delays past max_range are not a return
    }
    Some(Point::from_spherical(
        r,
        Point::theta_from_elevation(elevation),
        azimuth,
        detection.peak_amplitude.clamp(0.0, 1.0),
        mode == CycleMode::Valid,
        (cycle, channel),
    ))
}

/// Evaluate one receive window at the ADC instants and detect the peak.
///
/// Echo and interference superpose linearly, receiver noise adds at the ADC
/// input, and the clip applies elementwise, so sampling the analog chain at
/// the ADC instants equals digitizing the densely synthesized window.
#[allow(clippy::too_many_arguments)]
fn sample_window(
    config: &LidarConfig,
    emi: Option<&EmiSource>,
    receiver_amp: f64,
    emit_time: f64,
    hit: Option<(f64, f64)>,
    seed: u64,
    cycle: u32,
    channel: u16,
) -> Option<EchoDetection> {
    let n = (config.firing_interval * config.adc_sample_rate).round() as usize;
    let mut samples = vec![0.0f64; n];

    if let Some((range, reflectivity)) = hit {
        let peak_time = emit_time + 2.0 * range / SPEED_OF_LIGHT;
        let amplitude = echo_intensity(range, reflectivity);
        let sigma = pulse_sigma(config.pulse_width);
        let lo = ((peak_time - 6.0 * sigma - emit_time) * config.adc_sample_rate).floor() as i64;
        let hi = ((peak_time + 6.0 * sigma - emit_time) * config.adc_sample_rate).ceil() as i64;
        for k in lo.max(0)..=hi.min(n as i64 - 1) {
            let t = emit_time + k as f64 / config.adc_sample_rate;
            samples[k as usize] +=
                amplitude * crate::signal::pulse_value(t, peak_time, config.pulse_width);
        }
    }

    if let Some(src) = emi {
        if receiver_amp > 0.0 {
            for (k, s) in samples.iter_mut().enumerate() {
                let t = emit_time + k as f64 / config.adc_sample_rate;
                *s += receiver_amp * src.emitted_value(t);
            }
        }
    }

    if config.noise_sigma > 0.0 {
        let mut rng = task_rng(seed, &[SALT_NOISE, cycle as u64, channel as u64]);
        for s in samples.iter_mut() {
            *s += config.noise_sigma * gaussian(&mut rng);
        }
    }

    for s in samples.iter_mut() {
        *s = s.clamp(-config.receiver_saturation, config.receiver_saturation);
    }

    let window = Waveform::new(config.adc_sample_rate, emit_time, samples);
    detect_peak(&window, config.detection_threshold, config.pulse_width)
}
