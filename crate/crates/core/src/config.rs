//! Sensor configuration: timing, rotation, receiver, and supervision defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdd::FaultThresholds;
use crate::kv;

/// How firing azimuths are timestamped.
///
/// Real spinning units are not documented either way, so both are exposed:
/// `PerFiring` advances the azimuth continuously within a cycle, `PerCycle`
/// stamps all firings of a cycle with the cycle-start azimuth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AzimuthTimestamping {
    PerFiring,
    PerCycle,
}

/// Full description of the simulated sensor.
///
/// Defaults follow a 16-channel spinning unit: a 55.296 µs cycle fires 16
/// lasers at 2.304 µs intervals and then recharges for 18.432 µs, the ADC
/// samples at 500 MHz, and ranging is accurate to 2 cm.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LidarConfig {
    /// Number of laser channels.
    pub num_channels: u16,
    /// Per-channel elevation in degrees, `num_channels` entries, in firing order.
    pub vertical_angles: Vec<f64>,
    /// Rotation speed, revolutions per minute.
    pub rpm: f64,
    /// Seconds between consecutive firings within a cycle.
    pub firing_interval: f64,
    /// Seconds per full firing cycle (firings plus recharge).
    pub cycle_period: f64,
    /// Recharge gap at the end of each cycle, seconds.
    pub recharge_period: f64,
    /// Laser pulse width (FWHM), seconds.
    pub pulse_width: f64,
    /// Receiver ADC sample rate, Hz.
    pub adc_sample_rate: f64,
    /// Dense oracle rate for analog waveforms, Hz. Must exceed the ADC rate.
    pub sim_sample_rate: f64,
    /// Maximum usable range, meters.
    pub max_range: f64,
    /// Nominal ranging accuracy, meters.
    pub range_accuracy: f64,
    /// Minimum normalized peak amplitude that registers as an echo.
    pub detection_threshold: f64,
    /// Normalized amplitude at which the receiver rails.
    pub receiver_saturation: f64,
    /// Standard deviation of receiver noise at the ADC input (normalized).
    pub noise_sigma: f64,
    /// Azimuth timestamp convention.
    pub azimuth_timestamping: AzimuthTimestamping,
    /// Nominal internal temperature reported by monitoring, °C.
    pub nominal_temperature: f64,
    /// Nominal supply-rail voltages reported by monitoring, volts.
    pub nominal_rails: Vec<f64>,
    /// Acceptable temperature interval before a fault, °C.
    pub fault_temp_min: f64,
    pub fault_temp_max: f64,
    /// Acceptable fractional rail deviation before a fault.
    pub fault_rail_tolerance: f64,
    /// Fractional RPM deviation constituting a severe fault.
    pub fault_rpm_deviation: f64,
    /// Consecutive violating readouts before a fault is raised.
    pub fault_debounce: u32,
}

impl Default for LidarConfig {
    fn default() -> Self {
        let detection_threshold = 1e-6;
        Self {
            num_channels: 16,
            // Interleaved elevations, low/high alternating, fired in index order.
            vertical_angles: vec![
                -15.0, 1.0, -13.0, 3.0, -11.0, 5.0, -9.0, 7.0, -7.0, 9.0, -5.0, 11.0, -3.0,
                13.0, -1.0, 15.0,
            ],
            rpm: 600.0,
            firing_interval: 2.304e-6,
            cycle_period: 55.296e-6,
            recharge_period: 18.432e-6,
            pulse_width: 10e-9,
            adc_sample_rate: 500e6,
            sim_sample_rate: 20e9,
            max_range: 100.0,
            range_accuracy: 0.02,
            detection_threshold,
            receiver_saturation: 0.8,
            noise_sigma: 0.2 * detection_threshold,
            azimuth_timestamping: AzimuthTimestamping::PerFiring,
            nominal_temperature: 40.0,
            nominal_rails: vec![5.0, 3.3, 2.5, 1.2],
            fault_temp_min: -20.0,
            fault_temp_max: 90.0,
            fault_rail_tolerance: 0.10,
            fault_rpm_deviation: 0.5,
            fault_debounce: 3,
        }
    }
}

impl LidarConfig {
    /// Check every structural invariant; error text names the first violation.
    pub fn validate(&self) -> Result<()> {
        if self.num_channels == 0 {
            return Err(Error::Config("num_channels must be positive".into()));
        }
        if self.vertical_angles.len() != self.num_channels as usize {
            return Err(Error::Config(format!(
                "vertical_angles has {} entries for {} channels",
                self.vertical_angles.len(),
                self.num_channels
            )));
        }
        for (name, v) in [
            ("rpm", self.rpm),
            ("firing_interval", self.firing_interval),
            ("cycle_period", self.cycle_period),
            ("recharge_period", self.recharge_period),
            ("pulse_width", self.pulse_width),
            ("adc_sample_rate", self.adc_sample_rate),
            ("sim_sample_rate", self.sim_sample_rate),
            ("max_range", self.max_range),
            ("range_accuracy", self.range_accuracy),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Config(format!("{name} must be strictly positive")));
            }
        }
        let expected = self.num_channels as f64 * self.firing_interval + self.recharge_period;
        if (expected - self.cycle_period).abs() > 1e-12 * self.cycle_period {
            return Err(Error::Config(format!(
                "cycle_period {} != num_channels*firing_interval + recharge_period {}",
                self.cycle_period, expected
            )));
        }
        if self.adc_sample_rate >= self.sim_sample_rate {
            return Err(Error::Config(
                "adc_sample_rate must be below sim_sample_rate".into(),
            ));
        }
        if !(self.detection_threshold > 0.0 && self.detection_threshold < 1.0) {
            return Err(Error::Config("detection_threshold must lie in (0,1)".into()));
        }
        if self.receiver_saturation < self.detection_threshold {
            return Err(Error::Config(
                "receiver_saturation must be at least detection_threshold".into(),
            ));
        }
        if self.noise_sigma < 0.0 {
            return Err(Error::Config("noise_sigma must be nonnegative".into()));
        }
        if self.nominal_rails.is_empty() {
            return Err(Error::Config("nominal_rails must not be empty".into()));
        }
        Ok(())
    }

    /// Duration of one full revolution, seconds.
    pub fn revolution_period(&self) -> f64 {
        60.0 / self.rpm
    }

    /// Rotation rate in degrees per second.
    pub fn degrees_per_second(&self) -> f64 {
        self.rpm / 60.0 * 360.0
    }

    /// Azimuth advance over one firing cycle, degrees.
    pub fn azimuth_per_cycle(&self) -> f64 {
        self.degrees_per_second() * self.cycle_period
    }

    /// Fault thresholds for a supervision machine watching this sensor.
    pub fn fault_thresholds(&self) -> FaultThresholds {
        FaultThresholds {
            temp_min: self.fault_temp_min,
            temp_max: self.fault_temp_max,
            rail_tolerance: self.fault_rail_tolerance,
            rail_nominals: self.nominal_rails.clone(),
            rpm_deviation: self.fault_rpm_deviation,
        }
    }

    /// Load from a `key = value` file. Unknown keys are errors.
    pub fn from_file(path: &Path) -> Result<Self> {
        let source = path.display().to_string();
        let bindings = kv::parse_file(path)?;
        Self::from_bindings(&bindings, &source)
    }

    /// Parse from already-tokenized bindings (also used by tests).
    pub fn from_bindings(bindings: &[kv::Binding], source: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for b in bindings {
            match b.key.as_str() {
                "num_channels" => cfg.num_channels = b.u32(source)? as u16,
                "vertical_angles" => cfg.vertical_angles = b.f64_list(source)?,
                "rpm" => cfg.rpm = b.f64(source)?,
                "firing_interval" => cfg.firing_interval = b.f64(source)?,
                "cycle_period" => cfg.cycle_period = b.f64(source)?,
                "recharge_period" => cfg.recharge_period = b.f64(source)?,
                "pulse_width" => cfg.pulse_width = b.f64(source)?,
                "adc_sample_rate" => cfg.adc_sample_rate = b.f64(source)?,
                "sim_sample_rate" => cfg.sim_sample_rate = b.f64(source)?,
                "max_range" => cfg.max_range = b.f64(source)?,
                "range_accuracy" => cfg.range_accuracy = b.f64(source)?,
                "detection_threshold" => cfg.detection_threshold = b.f64(source)?,
                "receiver_saturation" => cfg.receiver_saturation = b.f64(source)?,
                "noise_sigma" => cfg.noise_sigma = b.f64(source)?,
                "azimuth_timestamping" => {
                    cfg.azimuth_timestamping = match b.value.as_str() {
                        "per_firing" => AzimuthTimestamping::PerFiring,
                        "per_cycle" => AzimuthTimestamping::PerCycle,
                        other => {
                            return Err(Error::Parse {
                                file: source.to_string(),
                                line: b.line,
                                message: format!(
                                    "azimuth_timestamping must be per_firing or per_cycle, got `{other}`"
                                ),
                            })
                        }
                    }
                }
                "nominal_temperature" => cfg.nominal_temperature = b.f64(source)?,
                "nominal_rails" => cfg.nominal_rails = b.f64_list(source)?,
                "fault_temp_min" => cfg.fault_temp_min = b.f64(source)?,
                "fault_temp_max" => cfg.fault_temp_max = b.f64(source)?,
                "fault_rail_tolerance" => cfg.fault_rail_tolerance = b.f64(source)?,
                "fault_rpm_deviation" => cfg.fault_rpm_deviation = b.f64(source)?,
                "fault_debounce" => cfg.fault_debounce = b.u32(source)?,
                _ => return Err(b.unknown_key(source)),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_close_the_cycle() {
        let cfg = LidarConfig::default();
        cfg.validate().unwrap();
        let sum = cfg.num_channels as f64 * cfg.firing_interval + cfg.recharge_period;
        assert!((sum - cfg.cycle_period).abs() < 1e-18);
        assert_eq!(cfg.vertical_angles.len(), 16);
    }

    #[test]
    fn broken_cycle_arithmetic_is_rejected() {
        let cfg = LidarConfig {
            recharge_period: 18e-6,
            ..LidarConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn angle_count_must_match_channels() {
        let cfg = LidarConfig {
            vertical_angles: vec![0.0; 8],
            ..LidarConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn adc_must_undersample_the_dense_grid() {
        let cfg = LidarConfig {
            adc_sample_rate: 20e9,
            ..LidarConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn kv_roundtrip_overrides_and_rejects_unknown_keys() {
        let text = "rpm = 1200\nmax_range = 50\n";
        let b = kv::parse(text, "t").unwrap();
        let cfg = LidarConfig::from_bindings(&b, "t").unwrap();
        assert_eq!(cfg.rpm, 1200.0);
        assert_eq!(cfg.max_range, 50.0);

        let b = kv::parse("rmp = 600\n", "t").unwrap();
        assert!(LidarConfig::from_bindings(&b, "t").is_err());
    }

    #[test]
    fn azimuth_advance_per_cycle_matches_rotation_arithmetic() {
        let cfg = LidarConfig::default();
        // 10 rev/s * 360 deg * 55.296e-6 s
        assert!((cfg.azimuth_per_cycle() - 0.1990656).abs() < 1e-12);
    }
}
