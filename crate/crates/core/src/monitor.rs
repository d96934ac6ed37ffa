//! Monitoring-sensor telemetry and its corruption under interference.
//!
//! Corruption is threshold-gated, not gradual: below a surface's onset
//! threshold the ground truth passes through exactly; at or above it the
//! reading is replaced by the corruption distribution. This binary behavior
//! is what distinguishes sensor-fault attacks (sudden recovery when the
//! amplitude drops below threshold) from receiver-path attacks (gradual
//! recovery).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::emi::{CouplingChannel, EmiSource, Surface};
use crate::error::Result;
use crate::rng::task_rng;

/// Temperature interval reported under corruption, °C.
pub const CORRUPT_TEMP_RANGE: (f64, f64) = (-200.0, 150.0);
/// RPM floor the encoder reading decays toward under attack.
pub const RPM_FLOOR: f64 = 19.0;
/// Half-life of the encoder-reading decay, cycles.
pub const RPM_DECAY_HALF_LIFE_CYCLES: f64 = 5.0;

/// One telemetry sample from the sensor's self-monitoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitoringReadout {
    /// Internal temperature, °C.
    pub temperature: f64,
    /// Supply-rail voltages, volts.
    pub voltage_rails: Vec<f64>,
    /// Encoder-reported rotation speed, RPM.
    pub rpm: f64,
    /// Sample time, seconds from frame start.
    pub timestamp: f64,
}

/// Coupled-amplitude levels at which each monitoring line starts corrupting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbThresholds {
    pub temperature: f64,
    pub voltage: f64,
    pub encoder: f64,
}

impl Default for PerturbThresholds {
    fn default() -> Self {
        Self {
            temperature: 0.01,
            voltage: 0.01,
            encoder: 0.01,
        }
    }
}

/// Per-cycle decay factor for the encoder reading (half-life of
/// [`RPM_DECAY_HALF_LIFE_CYCLES`] cycles).
pub fn rpm_decay_factor() -> f64 {
    0.5f64.powf(1.0 / RPM_DECAY_HALF_LIFE_CYCLES)
}

/// Corrupt a telemetry sample according to the coupled interference.
///
/// * temperature line at/above threshold: uniform draw over [-200, 150] °C;
/// * voltage line at/above threshold: each rail drawn uniform within ±50 %
///   of nominal;
/// * encoder line at/above threshold: the reading decays one step toward
///   [`RPM_FLOOR`]. The decay is stateful across a frame, so callers feed the
///   previous reading back in as `truth.rpm`; readings within 0.5 RPM of the
///   floor snap to it.
///
/// Below threshold (or with no source) the truth passes through unchanged.
/// Pure given `(truth, emi, channel, thresholds, seed)`.
pub fn perturb_monitoring(
    truth: &MonitoringReadout,
    emi: Option<&EmiSource>,
    channel: &CouplingChannel,
    thresholds: &PerturbThresholds,
    seed: u64,
) -> Result<MonitoringReadout> {
    let Some(emi) = emi else {
        return Ok(truth.clone());
    };
    let mut out = truth.clone();
    let mut rng = task_rng(seed, &[truth.timestamp.to_bits()]);

    let temp_amp = channel.coupled_amplitude(emi, Surface::TemperatureLine)?;
    if temp_amp >= thresholds.temperature {
        out.temperature = rng.gen_range(CORRUPT_TEMP_RANGE.0..=CORRUPT_TEMP_RANGE.1);
    }

    let volt_amp = channel.coupled_amplitude(emi, Surface::VoltageLine)?;
    if volt_amp >= thresholds.voltage {
        for rail in out.voltage_rails.iter_mut() {
            let nominal = *rail;
            *rail = rng.gen_range(0.5 * nominal..=1.5 * nominal);
        }
    }

    let enc_amp = channel.coupled_amplitude(emi, Surface::EncoderLine)?;
    if enc_amp >= thresholds.encoder {
        let decayed = RPM_FLOOR + (truth.rpm - RPM_FLOOR) * rpm_decay_factor();
        out.rpm = if (decayed - RPM_FLOOR).abs() < 0.5 {
            RPM_FLOOR
        } else {
            decayed
        };
    }

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emi::Resonance;

    fn truth() -> MonitoringReadout {
        MonitoringReadout {
            temperature: 40.0,
            voltage_rails: vec![5.0, 3.3],
            rpm: 600.0,
            timestamp: 0.0,
        }
    }

    fn channel_coupling(surface: Surface) -> (CouplingChannel, EmiSource) {
        let mut ch = CouplingChannel::default();
        ch.surfaces.get_mut(&surface).unwrap().push(Resonance {
            center: 1.2e9,
            width: 50e6,
            peak_gain_db: -40.0,
        });
        let emi = EmiSource {
            carrier_freq: 1.2e9,
            ..EmiSource::default()
        };
        (ch, emi)
    }

    #[test]
    fn no_source_passes_truth_through() {
        let ch = CouplingChannel::default();
        let out =
            perturb_monitoring(&truth(), None, &ch, &PerturbThresholds::default(), 1).unwrap();
        assert_eq!(out, truth());
    }

    #[test]
    fn below_threshold_is_exactly_truth() {
        let (ch, mut emi) = channel_coupling(Surface::TemperatureLine);
        emi.generator_power_dbm = -120.0;
        let out = perturb_monitoring(&truth(), Some(&emi), &ch, &PerturbThresholds::default(), 1)
            .unwrap();
        assert_eq!(out, truth());
    }

    #[test]
    fn corrupted_temperature_spans_the_documented_interval() {
        let (ch, emi) = channel_coupling(Surface::TemperatureLine);
        let thresholds = PerturbThresholds::default();
        let mut lo = f64::MAX;
        let mut hi = f64::MIN;
        for seed in 0..400 {
            let out =
                perturb_monitoring(&truth(), Some(&emi), &ch, &thresholds, seed).unwrap();
            assert!(out.temperature >= -200.0 && out.temperature <= 150.0);
            lo = lo.min(out.temperature);
            hi = hi.max(out.temperature);
            // Only the targeted line is corrupted.
            assert_eq!(out.voltage_rails, truth().voltage_rails);
            assert_eq!(out.rpm, 600.0);
        }
        assert!(lo < -150.0, "draws reach the cold end, saw {lo}");
        assert!(hi > 100.0, "draws reach the hot end, saw {hi}");
    }

    #[test]
    fn corrupted_rails_stay_within_half_nominal() {
        let (ch, emi) = channel_coupling(Surface::VoltageLine);
        for seed in 0..100 {
            let out = perturb_monitoring(
                &truth(),
                Some(&emi),
                &ch,
                &PerturbThresholds::default(),
                seed,
            )
            .unwrap();
            for (rail, nominal) in out.voltage_rails.iter().zip([5.0, 3.3]) {
                assert!(*rail >= 0.5 * nominal && *rail <= 1.5 * nominal);
            }
        }
    }

    #[test]
    fn encoder_reading_decays_to_the_floor() {
        let (ch, emi) = channel_coupling(Surface::EncoderLine);
        let thresholds = PerturbThresholds::default();
        let mut reading = truth();
        let mut below_300_at = None;
        for cycle in 0..80 {
            reading = perturb_monitoring(&reading, Some(&emi), &ch, &thresholds, 9).unwrap();
            if below_300_at.is_none() && reading.rpm < 300.0 {
                below_300_at = Some(cycle);
            }
        }
        assert_eq!(reading.rpm, RPM_FLOOR);
        // Half-life 5 cycles: the 50 % deviation threshold falls inside ten cycles.
        assert!(below_300_at.unwrap() < 10);
        // 19 from a 600 preset is a reduction of at least 96.7 %.
        assert!((600.0 - reading.rpm) / 600.0 >= 0.967);
    }

    #[test]
    fn perturbation_is_deterministic_per_seed() {
        let (ch, emi) = channel_coupling(Surface::TemperatureLine);
        let a = perturb_monitoring(&truth(), Some(&emi), &ch, &PerturbThresholds::default(), 5)
            .unwrap();
        let b = perturb_monitoring(&truth(), Some(&emi), &ch, &PerturbThresholds::default(), 5)
            .unwrap();
        assert_eq!(a, b);
    }
}
