//! Firing schedule generation.

use serde::{Deserialize, Serialize};

use crate::config::{AzimuthTimestamping, LidarConfig};
use crate::error::Result;

/// One laser firing: which channel fires, when, and where it points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiringEvent {
    /// Channel index in `[0, num_channels)`.
    pub channel: u16,
    /// Cycle index within the frame.
    pub cycle: u32,
    /// Emission time relative to frame start, seconds. This is the ranging τ₀.
    pub emit_time: f64,
    /// Azimuth at emission, degrees in `[0, 360)`.
    pub azimuth: f64,
    /// Elevation, degrees.
    pub elevation: f64,
}

impl FiringEvent {
    /// Ray key used for matched-ray comparisons.
    pub fn ray_id(&self) -> (u32, u16) {
        (self.cycle, self.channel)
    }
}

/// Emission time of channel `channel` in cycle `cycle`, seconds from frame start.
pub fn firing_time(config: &LidarConfig, cycle: u32, channel: u16) -> f64 {
    cycle as f64 * config.cycle_period + channel as f64 * config.firing_interval
}

/// Azimuth of a firing under the configured timestamp convention, degrees.
pub fn firing_azimuth(config: &LidarConfig, cycle: u32, channel: u16) -> f64 {
    let t = match config.azimuth_timestamping {
        AzimuthTimestamping::PerFiring => firing_time(config, cycle, channel),
        AzimuthTimestamping::PerCycle => cycle as f64 * config.cycle_period,
    };
    (config.degrees_per_second() * t).rem_euclid(360.0)
}

/// Number of complete cycles that fit in `duration` seconds.
pub fn cycles_in(config: &LidarConfig, duration: f64) -> u32 {
    (duration / config.cycle_period).floor() as u32
}

/// Generate the firing schedule covering `duration` seconds.
///
/// Events come in cycles of `cycle_period`; within cycle `k` firing `j`
/// occurs at `k*cycle_period + j*firing_interval`, channels in index order.
/// Only complete cycles are emitted.
pub fn firing_schedule(config: &LidarConfig, duration: f64) -> Result<Vec<FiringEvent>> {
    config.validate()?;
    if !duration.is_finite() || duration <= 0.0 {
        return Err(crate::error::Error::Domain(
            "schedule duration must be positive".into(),
        ));
    }
    let cycles = cycles_in(config, duration);
    let mut events = Vec::with_capacity(cycles as usize * config.num_channels as usize);
    for cycle in 0..cycles {
        for channel in 0..config.num_channels {
            events.push(FiringEvent {
                channel,
                cycle,
                emit_time: firing_time(config, cycle, channel),
                azimuth: firing_azimuth(config, cycle, channel),
                elevation: config.vertical_angles[channel as usize],
            });
        }
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_cycle_fires_sixteen_lasers_at_the_firing_interval() {
        let cfg = LidarConfig::default();
        let ev = firing_schedule(&cfg, 55.296e-6).unwrap();
        assert_eq!(ev.len(), 16);
        for (j, e) in ev.iter().enumerate() {
            assert!((e.emit_time - j as f64 * 2.304e-6).abs() < 1e-18);
            assert_eq!(e.channel as usize, j);
        }
        assert!((ev[15].emit_time - 34.56e-6).abs() < 1e-12);
    }

    #[test]
    fn one_revolution_at_600_rpm_is_1808_cycles() {
        let cfg = LidarConfig::default();
        let ev = firing_schedule(&cfg, cfg.revolution_period()).unwrap();
        assert_eq!(ev.len(), 28_928);
        assert_eq!(ev.last().unwrap().cycle, 1807);
    }

    #[test]
    fn gaps_are_firing_interval_or_interval_plus_recharge() {
        let cfg = LidarConfig::default();
        let ev = firing_schedule(&cfg, 3.0 * cfg.cycle_period).unwrap();
        for w in ev.windows(2) {
            let gap = w[1].emit_time - w[0].emit_time;
            let short = (gap - cfg.firing_interval).abs() < 1e-15;
            let long = (gap - (cfg.firing_interval + cfg.recharge_period)).abs() < 1e-15;
            assert!(short || long, "unexpected gap {gap}");
        }
    }

    #[test]
    fn azimuth_follows_continuous_rotation() {
        let cfg = LidarConfig::default();
        let ev = firing_schedule(&cfg, 2.0 * cfg.cycle_period).unwrap();
        // Successive firings advance by rate * firing_interval.
        let per_firing = cfg.degrees_per_second() * cfg.firing_interval;
        assert!((ev[1].azimuth - ev[0].azimuth - per_firing).abs() < 1e-12);
        // First firing of cycle 1 sits one cycle period ahead.
        assert!((ev[16].azimuth - cfg.azimuth_per_cycle()).abs() < 1e-12);
    }

    #[test]
    fn per_cycle_timestamping_freezes_azimuth_within_a_cycle() {
        let cfg = LidarConfig {
            azimuth_timestamping: AzimuthTimestamping::PerCycle,
            ..LidarConfig::default()
        };
        let ev = firing_schedule(&cfg, cfg.cycle_period).unwrap();
        assert!(ev.iter().all(|e| e.azimuth == 0.0));
    }

    #[test]
    fn invalid_config_is_a_configuration_error() {
        let cfg = LidarConfig {
            rpm: -1.0,
            ..LidarConfig::default()
        };
        assert!(firing_schedule(&cfg, 0.1).is_err());
    }

    #[test]
    fn zero_duration_is_rejected() {
        assert!(firing_schedule(&LidarConfig::default(), 0.0).is_err());
    }
}
