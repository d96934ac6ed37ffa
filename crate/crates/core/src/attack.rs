//! Attack-side planning: turning an intended spoof cloud into an emission.
//!
//! The pipeline: search the coupling band for the carrier that injects the
//! most points, convert spoof targets into a pulse-train baseband (one pulse
//! per intended point, peak time encoding its range), amplitude-modulate the
//! train onto the carrier, and synchronize emission against a detected
//! firing edge so each pulse lands in its intended receive window.

use std::collections::HashSet;
use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::config::LidarConfig;
use crate::emi::{CouplingChannel, EmiSource, Modulation, Pulse, PulseTrain};
use crate::error::{Error, Result};
use crate::fdd::FddMachine;
use crate::rng::task_rng;
use crate::scan::scan_frame;
use crate::schedule::{cycles_in, firing_azimuth, firing_time};
use crate::scene::Scene;
use crate::signal::SPEED_OF_LIGHT;

/// One intended fake point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpoofTarget {
    /// Victim channel the point should appear on.
    pub channel: u16,
    /// Intended azimuth, degrees.
    pub azimuth_deg: f64,
    /// Intended range, meters.
    pub range_m: f64,
    /// Relative pulse amplitude; defaults to full scale.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
}

/// A target resolved onto a concrete firing slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedTarget {
    pub target: SpoofTarget,
    /// Ray the pulse is designed to land on.
    pub ray: (u32, u16),
}

/// A complete, emittable attack description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackPlan {
    /// Carrier frequency, Hz.
    pub carrier_freq: f64,
    /// Pulse-train baseband; times are relative to the sync reference.
    pub baseband: PulseTrain,
    /// Delay from the sync reference to the first emitted pulse, seconds.
    pub emission_delay: f64,
    /// What the attacker's photodetector locks onto.
    pub sync_reference: String,
    /// Attacker hardware latency already folded into the baseband, seconds.
    pub system_latency: f64,
    /// AM depth.
    pub depth: f64,
    /// Per-frame sync jitter sigma, seconds.
    pub sync_jitter_sigma: f64,
    /// Carrier phase at the sync reference, radians.
    pub initial_phase: f64,
    /// Targets resolved onto rays, in input order (rejected ones omitted).
    pub resolved: Vec<ResolvedTarget>,
}

/// Load spoof targets from a JSON array of
/// `{channel, azimuth_deg, range_m, amplitude?}` objects.
pub fn read_targets_json(path: &Path) -> Result<Vec<SpoofTarget>> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        file: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn validate_target(t: &SpoofTarget, config: &LidarConfig) -> Result<()> {
    if t.channel >= config.num_channels {
        return Err(Error::Domain(format!(
            "target channel {} out of range for {} channels",
            t.channel, config.num_channels
        )));
    }
    if !t.range_m.is_finite() || t.range_m <= 0.0 || t.range_m > config.max_range {
        return Err(Error::Domain(format!(
            "target range {} outside (0, {}]",
            t.range_m, config.max_range
        )));
    }
    Ok(())
}

/// Cycle whose firing azimuth (for `channel`) is nearest `azimuth`, if the
/// nearest one is within half a cycle's azimuth advance.
fn nearest_cycle(config: &LidarConfig, channel: u16, azimuth: f64) -> Option<u32> {
    let cycles = cycles_in(config, config.revolution_period());
    let rate = config.degrees_per_second();
    let az = azimuth.rem_euclid(360.0);
    let channel_offset = channel as f64 * config.firing_interval;
    let half_advance = config.azimuth_per_cycle() / 2.0 + 1e-9;

    let mut best: Option<(f64, u32)> = None;
    for wrap in [-1.0, 0.0, 1.0] {
        let k_real = (az / rate + wrap * config.revolution_period() - channel_offset)
            / config.cycle_period;
        for cand in [k_real.floor(), k_real.ceil()] {
            if cand < 0.0 || cand >= cycles as f64 {
                continue;
            }
            let k = cand as u32;
            let fa = firing_azimuth(config, k, channel);
            let d = (fa - az).rem_euclid(360.0);
            let d = d.min(360.0 - d);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, k));
            }
        }
    }
    best.and_then(|(d, k)| (d <= half_advance).then_some(k))
}

/// Convert spoof targets into a baseband pulse train.
///
/// Each target maps to the firing slot whose azimuth is nearest its intended
/// azimuth; the pulse peaks at that slot's firing time plus the round-trip
/// delay for the intended range. Targets whose azimuth no slot covers are
/// rejected (their input indices are returned); two targets on one ray are a
/// conflict error.
pub fn points_to_baseband(
    targets: &[SpoofTarget],
    config: &LidarConfig,
    frame_origin: f64,
) -> Result<(PulseTrain, Vec<ResolvedTarget>, Vec<usize>)> {
    config.validate()?;
    let mut pulses = Vec::with_capacity(targets.len());
    let mut resolved = Vec::with_capacity(targets.len());
    let mut rejected = Vec::new();
    let mut taken: HashSet<(u32, u16)> = HashSet::new();
    for (i, t) in targets.iter().enumerate() {
        validate_target(t, config)?;
        let Some(cycle) = nearest_cycle(config, t.channel, t.azimuth_deg) else {
            rejected.push(i);
            continue;
        };
        let ray = (cycle, t.channel);
        if !taken.insert(ray) {
            return Err(Error::RayConflict {
                cycle,
                channel: t.channel,
            });
        }
        pulses.push(Pulse {
            peak_time: frame_origin
                + firing_time(config, cycle, t.channel)
                + 2.0 * t.range_m / SPEED_OF_LIGHT,
            amplitude: t.amplitude.unwrap_or(1.0),
        });
        resolved.push(ResolvedTarget { target: *t, ray });
    }
    Ok((PulseTrain::new(pulses, config.pulse_width), resolved, rejected))
}

/// A spoof target on every firing slot of one revolution, at a fixed range.
pub fn all_slot_targets(config: &LidarConfig, range: f64) -> Vec<SpoofTarget> {
    let cycles = cycles_in(config, config.revolution_period());
    let mut targets = Vec::with_capacity(cycles as usize * config.num_channels as usize);
    for cycle in 0..cycles {
        for channel in 0..config.num_channels {
            targets.push(SpoofTarget {
                channel,
                azimuth_deg: firing_azimuth(config, cycle, channel),
                range_m: range,
                amplitude: None,
            });
        }
    }
    targets
}

/// Amplitude-modulate a baseband onto a carrier.
///
/// The emitted signal is `(bias + depth*baseband(t)) * sin(2*pi*f*t + phi)`
/// with the bias fixed at the depth, which keeps the envelope nonnegative
/// for basebands in [-1, 1]. The carrier must clear twice the baseband
/// bandwidth (taken as the reciprocal pulse width). The initial phase is set
/// to quadrature; callers may re-seed it.
pub fn modulate_am(baseband: PulseTrain, carrier_freq: f64, depth: f64) -> Result<EmiSource> {
    if !depth.is_finite() || depth <= 0.0 || depth > 1.0 {
        return Err(Error::Domain(format!("AM depth {depth} outside (0, 1]")));
    }
    let bandwidth = 1.0 / baseband.pulse_width;
    if carrier_freq <= 2.0 * bandwidth {
        return Err(Error::Domain(format!(
            "carrier {carrier_freq} Hz must exceed twice the baseband bandwidth {bandwidth} Hz"
        )));
    }
    Ok(EmiSource {
        carrier_freq,
        modulation: Modulation::Am {
            baseband,
            depth,
            origin: 0.0,
        },
        initial_phase: FRAC_PI_2,
        ..EmiSource::default()
    })
}

/// Receive-delay-fire synchronization for one target.
///
/// After detecting the first firing of a cycle, wait
/// `channel*firing_interval + 2*range/c - latency` and emit; the pulse peak
/// then lands at the intended receive time. Negative delays fold forward by
/// whole cycle periods (landing on the same channel slot one cycle later).
pub fn synchronize(
    detected_firing: f64,
    target: &SpoofTarget,
    config: &LidarConfig,
    system_latency: f64,
) -> Result<f64> {
    if !system_latency.is_finite() || system_latency < 0.0 {
        return Err(Error::Domain("system latency must be nonnegative".into()));
    }
    validate_target(target, config)?;
    let _ = detected_firing; // the delay is relative to the detected edge
    let mut delay = target.channel as f64 * config.firing_interval
        + 2.0 * target.range_m / SPEED_OF_LIGHT
        - system_latency;
    let mut folds = 0u32;
    let max_folds = cycles_in(config, config.revolution_period());
    while delay < 0.0 {
        delay += config.cycle_period;
        folds += 1;
        if folds > max_folds {
            return Err(Error::Infeasible(format!(
                "latency {system_latency} s cannot be folded into one revolution"
            )));
        }
    }
    Ok(delay)
}

impl AttackPlan {
    /// Design a full plan from targets.
    ///
    /// Baseband pulses carry the emission-side latency compensation: each
    /// pulse is emitted `latency` early so it lands on time; pulses that
    /// would precede the sync reference fold one cycle forward.
    pub fn design(
        targets: &[SpoofTarget],
        config: &LidarConfig,
        carrier_freq: f64,
        depth: f64,
        system_latency: f64,
    ) -> Result<(Self, Vec<usize>)> {
        if !system_latency.is_finite() || system_latency < 0.0 {
            return Err(Error::Domain("system latency must be nonnegative".into()));
        }
        let (intended, resolved, rejected) = points_to_baseband(targets, config, 0.0)?;
        let pulses: Vec<Pulse> = intended
            .pulses()
            .iter()
            .map(|p| {
                let mut t = p.peak_time - system_latency;
                while t < 0.0 {
                    t += config.cycle_period;
                }
                Pulse {
                    peak_time: t,
                    amplitude: p.amplitude,
                }
            })
            .collect();
        let baseband = PulseTrain::new(pulses, config.pulse_width);
        let emission_delay = baseband
            .pulses()
            .first()
            .map(|p| p.peak_time)
            .unwrap_or(0.0);
        let source = modulate_am(baseband, carrier_freq, depth)?;
        let Modulation::Am { baseband, .. } = source.modulation else {
            unreachable!()
        };
        Ok((
            Self {
                carrier_freq,
                baseband,
                emission_delay,
                sync_reference: "first firing of the frame, photodetector edge".to_string(),
                system_latency,
                depth,
                sync_jitter_sigma: 1e-9,
                initial_phase: FRAC_PI_2,
                resolved,
            },
            rejected,
        ))
    }

    fn source_with_origin(&self, origin: f64) -> EmiSource {
        EmiSource {
            carrier_freq: self.carrier_freq,
            modulation: Modulation::Am {
                baseband: self.baseband.clone(),
                depth: self.depth,
                origin,
            },
            initial_phase: self.initial_phase,
            ..EmiSource::default()
        }
    }

    /// Emission synchronized to a detected frame start (plus sync jitter).
    pub fn aligned_source(&self, frame_start: f64, seed: u64) -> EmiSource {
        let jitter = if self.sync_jitter_sigma > 0.0 {
            let mut rng = task_rng(seed, &[0x73796e63]);
            self.sync_jitter_sigma * crate::rng::gaussian(&mut rng)
        } else {
            0.0
        };
        self.source_with_origin(frame_start + self.system_latency + jitter)
    }

    /// Unsynchronized replay: a random emission offset within one cycle.
    pub fn unsynchronized_source(
        &self,
        frame_start: f64,
        cycle_period: f64,
        seed: u64,
    ) -> EmiSource {
        use rand::Rng;
        let mut rng = task_rng(seed, &[0x72616e64]);
        let offset: f64 = rng.gen_range(0.0..cycle_period);
        self.source_with_origin(frame_start + self.system_latency + offset)
    }

    /// Per-target outcomes of a simulated frame under this plan.
    pub fn evaluate(&self, cloud: &PointCloud, config: &LidarConfig) -> Vec<TargetOutcome> {
        let by_ray: std::collections::HashMap<(u32, u16), f64> = cloud
            .valid_points()
            .map(|p| (p.ray_id, p.r))
            .collect();
        self.resolved
            .iter()
            .map(|rt| {
                let achieved = by_ray.get(&rt.ray).copied();
                let hit = achieved
                    .is_some_and(|r| (r - rt.target.range_m).abs() <= config.range_accuracy);
                TargetOutcome {
                    resolved: *rt,
                    achieved_range: achieved,
                    hit,
                }
            })
            .collect()
    }
}

/// Outcome of one intended spoof point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetOutcome {
    pub resolved: ResolvedTarget,
    /// Range measured on the designed ray, if any point appeared there.
    pub achieved_range: Option<f64>,
    /// Whether it matched the intended range within the sensor accuracy.
    pub hit: bool,
}

/// Sweep carrier frequencies and count injected points per frequency.
///
/// Each frequency simulates one frame under an all-slot injection baseband
/// and counts valid points on rays absent from the benign frame. Returns
/// the best frequency (ties break toward the lower one) and the full curve.
pub fn carrier_search(
    channel: &CouplingChannel,
    band: (f64, f64),
    step: f64,
    victim: &LidarConfig,
    scene: &Scene,
    seed: u64,
) -> Result<(f64, Vec<(f64, usize)>)> {
    let (lo, hi) = band;
    if !lo.is_finite() || !hi.is_finite() || lo <= 0.0 || hi < lo {
        return Err(Error::Domain(format!("empty or invalid band {lo}..{hi}")));
    }
    if !step.is_finite() || step <= 0.0 {
        return Err(Error::Domain("band step must be positive".into()));
    }
    victim.validate()?;

    let spoof_range = 0.5 * victim.max_range;
    let targets = all_slot_targets(victim, spoof_range);
    let (plan, _) = AttackPlan::design(&targets, victim, lo, 1.0, 0.0)?;
    let machine = FddMachine::running(victim.fault_thresholds(), victim.fault_debounce, victim.rpm);

    let benign = scan_frame(scene, victim, None, channel, &machine, seed)?;
    let benign_rays: HashSet<(u32, u16)> =
        benign.cloud.valid_points().map(|p| p.ray_id).collect();

    let count = ((hi - lo) / step).floor() as usize + 1;
    let freqs: Vec<f64> = (0..count).map(|i| lo + i as f64 * step).collect();

    let curve: Vec<(f64, usize)> = freqs
        .par_iter()
        .map(|&freq| {
            let mut plan_at = plan.clone();
            plan_at.carrier_freq = freq;
            plan_at.sync_jitter_sigma = 0.0;
            let source = plan_at.aligned_source(0.0, seed);
            let out = scan_frame(scene, victim, Some(&source), channel, &machine, seed)?;
            let injected = out
                .cloud
                .valid_points()
                .filter(|p| !benign_rays.contains(&p.ray_id))
                .count();
            Ok((freq, injected))
        })
        .collect::<Result<_>>()?;

    let best = curve
        .iter()
        .fold(None::<(f64, usize)>, |acc, &(f, n)| match acc {
            None => Some((f, n)),
            Some((bf, bn)) => {
                if n > bn || (n == bn && f < bf) {
                    Some((f, n))
                } else {
                    Some((bf, bn))
                }
            }
        })
        .map(|(f, _)| f)
        .unwrap();
    Ok((best, curve))
}
