//! The waveform-level ranging pipeline: echo synthesis, interference
//! superposition, receiver saturation, undersampling ADC, peak detection,
//! and round-trip ranging.
//!
//! Pipeline order mirrors the receive chain: the echo and any coupled
//! interference add linearly, the analog front end clips at the saturation
//! limit, the ADC point-samples with no anti-alias filter, and timing is
//! read off the digitized peak.

use crate::config::LidarConfig;
use crate::emi::{CouplingChannel, EmiSource, Surface};
use crate::error::{Error, Result};
use crate::waveform::Waveform;

/// Speed of light in air, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// A detected echo: receive time τ₁ and the peak's normalized amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoDetection {
    /// Absolute receive time, seconds.
    pub tau1: f64,
    /// Normalized amplitude at the (interpolated) peak.
    pub peak_amplitude: f64,
}

/// Gaussian σ for a pulse of the given FWHM.
pub fn pulse_sigma(pulse_width: f64) -> f64 {
    pulse_width / (2.0 * (2.0 * f64::ln(2.0)).sqrt())
}

/// Echo amplitude for a surface hit: reflectivity rolled off with inverse
/// square range, clamped to (0, 1]. Ranges under a meter do not amplify.
pub fn echo_intensity(range: f64, reflectivity: f64) -> f64 {
    let d = range.max(1.0);
    (reflectivity / (d * d)).clamp(0.0, 1.0)
}

/// Value of a unit-peak Gaussian pulse centered at `peak_time`.
pub fn pulse_value(t: f64, peak_time: f64, pulse_width: f64) -> f64 {
    let sigma = pulse_sigma(pulse_width);
    let dt = t - peak_time;
    (-dt * dt / (2.0 * sigma * sigma)).exp()
}

/// Synthesize the receive-window waveform for one firing.
///
/// The window spans one `firing_interval` from `emit_time` at the dense
/// simulation rate. A hit at `range` puts a Gaussian pulse of width
/// `pulse_width` peaking at `emit_time + 2*range/c`, with the intensity
/// model's amplitude. Out-of-bounds ranges yield an empty (all-zero) window.
pub fn synthesize_echo(
    range: f64,
    reflectivity: f64,
    emit_time: f64,
    config: &LidarConfig,
) -> Waveform {
    let n = (config.firing_interval * config.sim_sample_rate).round() as usize;
    let mut w = Waveform::zeros(config.sim_sample_rate, emit_time, n);
    if !range.is_finite() || range <= 0.0 || range > config.max_range {
        return w;
    }
    let peak_time = emit_time + 2.0 * range / SPEED_OF_LIGHT;
    let amplitude = echo_intensity(range, reflectivity);
    let sigma = pulse_sigma(config.pulse_width);
    // The pulse has negligible support outside +-6 sigma.
    let lo = ((peak_time - 6.0 * sigma - emit_time) * config.sim_sample_rate).floor() as i64;
    let hi = ((peak_time + 6.0 * sigma - emit_time) * config.sim_sample_rate).ceil() as i64;
    for k in lo.max(0)..=hi.min(n as i64 - 1) {
        let t = w.time_at(k as usize);
        w.samples[k as usize] = amplitude * pulse_value(t, peak_time, config.pulse_width);
    }
    w
}

/// Superimpose a coupled interference carrier onto an echo window.
///
/// The emitted signal couples linearly: `out = echo + g * s(t)` where `g` is
/// the channel's coupling amplitude at the carrier frequency and `s(t)` the
/// normalized emitted waveform, phase-continuous in absolute time. No
/// filtering happens before saturation.
pub fn couple_emi(
    echo: &Waveform,
    emi: &EmiSource,
    channel: &CouplingChannel,
    _window_start: f64,
) -> Result<Waveform> {
    let g = channel.coupled_amplitude(emi, Surface::ReceiverTrace)?;
    let mut out = echo.clone();
    for k in 0..out.samples.len() {
        let t = out.time_at(k);
        out.samples[k] += g * emi.emitted_value(t);
    }
    Ok(out)
}

/// Clip every sample to `[-limit, +limit]`. Element-wise and idempotent.
pub fn saturate(w: &Waveform, limit: f64) -> Waveform {
    debug_assert!(limit > 0.0);
    Waveform::new(
        w.sample_rate,
        w.start_time,
        w.samples.iter().map(|s| s.clamp(-limit, limit)).collect(),
    )
}

/// Point-sample a dense waveform at `adc_rate` starting at its first sample.
///
/// There is deliberately no anti-alias filter: content above `adc_rate/2`
/// folds, which is exactly the behavior under study.
pub fn digitize(w: &Waveform, adc_rate: f64) -> Waveform {
    debug_assert!(adc_rate <= w.sample_rate);
    let ratio = w.sample_rate / adc_rate;
    let n_out = (w.samples.len() as f64 / ratio).floor() as usize;
    let samples = (0..n_out)
        .map(|k| {
            let idx = (k as f64 * ratio).round() as usize;
            w.samples[idx.min(w.samples.len() - 1)]
        })
        .collect();
    Waveform::new(adc_rate, w.start_time, samples)
}

/// Apparent frequency of a tone at `f` when sampled at `fs`:
/// `|f - fs*round(f/fs)|`, always in `[0, fs/2]`.
pub fn alias_frequency(f: f64, fs: f64) -> f64 {
    debug_assert!(f >= 0.0 && fs > 0.0);
    (f - fs * (f / fs).round()).abs()
}

/// Locate the echo peak in a digitized window.
///
/// The global maximum must reach `threshold` and be supported by its
/// immediate neighbors reaching half the threshold — an isolated
/// single-sample spike is noise, not a pulse. Timing is then refined with
/// 3-point parabolic interpolation around the maximum. A maximum sitting in
/// a clipped plateau (a run of equal-valued samples) longer than
/// `pulse_width` is the railed receiver, not an echo, and detection fails.
pub fn detect_peak(w: &Waveform, threshold: f64, pulse_width: f64) -> Option<EchoDetection> {
    if w.is_empty() {
        return None;
    }
    let mut k_max = 0;
    let mut v_max = w.samples[0];
    for (k, &v) in w.samples.iter().enumerate() {
        if v > v_max {
            v_max = v;
            k_max = k;
        }
    }
    if v_max < threshold {
        return None;
    }
    let supported = |k: usize| w.samples[k] >= 0.5 * threshold;
    if k_max > 0 && !supported(k_max - 1) {
        return None;
    }
    if k_max + 1 < w.samples.len() && !supported(k_max + 1) {
        return None;
    }

    // Clipped-plateau rejection: count contiguous samples equal to the max.
    let eq = |v: f64| (v - v_max).abs() <= 1e-12 * v_max.abs().max(1e-300);
    let mut lo = k_max;
    while lo > 0 && eq(w.samples[lo - 1]) {
        lo -= 1;
    }
    let mut hi = k_max;
    while hi + 1 < w.samples.len() && eq(w.samples[hi + 1]) {
        hi += 1;
    }
    let plateau = (hi - lo) as f64 / w.sample_rate;
    if hi > lo && plateau > pulse_width {
        return None;
    }

    let (tau1, peak_amplitude) = if k_max == 0 || k_max == w.samples.len() - 1 {
        (w.time_at(k_max), v_max)
    } else {
        let a = w.samples[k_max - 1];
        let b = w.samples[k_max];
        let c = w.samples[k_max + 1];
        let denom = a - 2.0 * b + c;
        if denom.abs() < 1e-300 {
            (w.time_at(k_max), v_max)
        } else {
            let offset = 0.5 * (a - c) / denom;
            let peak = b - 0.25 * (a - c) * offset;
            (w.time_at(k_max) + offset / w.sample_rate, peak)
        }
    };
    Some(EchoDetection {
        tau1,
        peak_amplitude,
    })
}

/// Round-trip ranging: `R = c * (tau1 - tau0) / 2`.
pub fn range_from_tof(tau0: f64, tau1: f64) -> Result<f64> {
    if tau1 < tau0 {
        return Err(Error::TimeOrdering { tau0, tau1 });
    }
    Ok(0.5 * SPEED_OF_LIGHT * (tau1 - tau0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emi::{CouplingChannel, EmiSource, Resonance, Surface};

    fn dense_cfg() -> LidarConfig {
        LidarConfig::default()
    }

    #[test]
    fn echo_peaks_at_round_trip_time() {
        let cfg = dense_cfg();
        let w = synthesize_echo(10.0, 0.8, 0.0, &cfg);
        let k = w
            .samples
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        let expected = 2.0 * 10.0 / SPEED_OF_LIGHT; // 66.713 ns
        assert!((w.time_at(k) - expected).abs() < 1.0 / cfg.sim_sample_rate);
        assert!((expected - 66.713e-9).abs() < 1e-12);
        let peak = w.samples[k];
        assert!((peak - 0.008).abs() < 1e-6, "inverse-square amplitude");
    }

    #[test]
    fn degenerate_and_boundary_ranges() {
        let cfg = dense_cfg();
        let w = synthesize_echo(0.0, 0.8, 0.0, &cfg);
        assert!(w.samples.iter().all(|&s| s == 0.0));
        assert_eq!(w.len(), (cfg.firing_interval * cfg.sim_sample_rate) as usize);

        // Exactly max_range is still included.
        let w = synthesize_echo(cfg.max_range, 0.8, 0.0, &cfg);
        assert!(w.samples.iter().any(|&s| s > 0.0));
        // Beyond max_range is not.
        let w = synthesize_echo(cfg.max_range + 0.001, 0.8, 0.0, &cfg);
        assert!(w.samples.iter().all(|&s| s == 0.0));
    }

    fn cw_source(freq: f64, phase: f64) -> EmiSource {
        EmiSource {
            carrier_freq: freq,
            initial_phase: phase,
            ..EmiSource::default()
        }
    }

    fn unity_channel(center: f64) -> CouplingChannel {
        // Tuned so the full power chain lands at coupling amplitude 1.0 on
        // resonance for the default source.
        let mut ch = CouplingChannel::default();
        ch.surfaces.insert(
            Surface::ReceiverTrace,
            vec![Resonance {
                center,
                width: 40e6,
                peak_gain_db: -61.0,
            }],
        );
        ch
    }

    #[test]
    fn zero_amplitude_interference_is_identity() {
        let cfg = dense_cfg();
        let echo = synthesize_echo(10.0, 0.8, 0.0, &cfg);
        let mut emi = cw_source(990e6, 0.0);
        emi.generator_power_dbm = -300.0; // effectively off
        let ch = unity_channel(990e6);
        let out = couple_emi(&echo, &emi, &ch, 0.0).unwrap();
        for (a, b) in echo.samples.iter().zip(out.samples.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_cw_without_echo_is_a_scaled_sinusoid() {
        let cfg = dense_cfg();
        let echo = Waveform::zeros(cfg.sim_sample_rate, 0.0, 4096);
        let emi = cw_source(990e6, 0.3);
        let ch = unity_channel(990e6);
        let g = ch.coupled_amplitude(&emi, Surface::ReceiverTrace).unwrap();
        let out = couple_emi(&echo, &emi, &ch, 0.0).unwrap();
        let peak = out.samples.iter().cloned().fold(f64::MIN, f64::max);
        assert!((peak - g).abs() < 1e-3 * g);
        for (k, &s) in out.samples.iter().enumerate().take(64) {
            let t = out.time_at(k);
            let expected = g * (2.0 * std::f64::consts::PI * 990e6 * t + 0.3).sin();
            assert!((s - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn small_cw_shifts_the_peak_less_than_a_pulse_width() {
        // Dense-grid oracle: argmax before and after a 10% interferer.
        let cfg = dense_cfg();
        let echo = synthesize_echo(10.0, 0.8, 0.0, &cfg);
        let argmax = |w: &Waveform| {
            w.samples
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0
        };
        let before = echo.time_at(argmax(&echo));
        let mut shifted = echo.clone();
        let g = 0.1 * 0.008; // 10 percent of the echo peak
        for k in 0..shifted.len() {
            let t = shifted.time_at(k);
            shifted.samples[k] += g * (2.0 * std::f64::consts::PI * 990e6 * t).sin();
        }
        let after = shifted.time_at(argmax(&shifted));
        assert!((after - before).abs() <= cfg.pulse_width);
    }

    #[test]
    fn saturate_clips_idempotently() {
        let w = Waveform::new(1.0, 0.0, vec![0.5, 2.0, -2.0, 1.0]);
        let s = saturate(&w, 1.0);
        assert_eq!(s.samples, vec![0.5, 1.0, -1.0, 1.0]);
        assert_eq!(saturate(&s, 1.0).samples, s.samples);

        let c = Waveform::new(1.0, 0.0, vec![2.0; 8]);
        assert_eq!(saturate(&c, 1.0).samples, vec![1.0; 8]);
    }

    #[test]
    fn digitize_at_input_rate_is_identity() {
        let w = Waveform::new(1000.0, 0.0, (0..50).map(|k| k as f64).collect());
        let d = digitize(&w, 1000.0);
        assert_eq!(d.samples, w.samples);
        assert_eq!(d.sample_rate, 1000.0);
    }

    #[test]
    fn undersampled_tones_fold_onto_their_alias() {
        // 990 MHz sampled at 500 MHz lands on the 10 MHz fold; matching the
        // phase mapping sin(2*pi*990e6 t + phi) == sin(2*pi*10e6 t + (pi - phi))
        // at the sample instants makes them agree sample-wise.
        let fs = 500e6;
        let dense_rate = 20e9;
        let phi = 0.7;
        let n = 8192;
        let tone = |f: f64, ph: f64| {
            Waveform::new(
                dense_rate,
                0.0,
                (0..n)
                    .map(|k| {
                        let t = k as f64 / dense_rate;
                        (2.0 * std::f64::consts::PI * f * t + ph).sin()
                    })
                    .collect(),
            )
        };
        let hi = digitize(&tone(990e6, phi), fs);
        let lo = digitize(&tone(10e6, std::f64::consts::PI - phi), fs);
        assert_eq!(alias_frequency(990e6, fs), 10e6);
        for (a, b) in hi.samples.iter().zip(lo.samples.iter()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn alias_frequency_spot_values() {
        assert_eq!(alias_frequency(250e6, 500e6), 250e6);
        assert_eq!(alias_frequency(990e6, 500e6), 10e6);
        assert_eq!(alias_frequency(989e6, 500e6), 11e6);
        assert_eq!(alias_frequency(1040e6, 500e6), 40e6);
        assert!(alias_frequency(3.7e9, 500e6) <= 250e6);
    }

    #[test]
    fn detect_peak_on_empty_and_zero_windows() {
        assert!(detect_peak(&Waveform::new(1.0, 0.0, vec![]), 0.1, 1.0).is_none());
        let w = Waveform::zeros(500e6, 0.0, 128);
        assert!(detect_peak(&w, 1e-5, 10e-9).is_none());
    }

    #[test]
    fn isolated_single_sample_spike_is_rejected_as_noise() {
        let mut samples = vec![0.0; 64];
        samples[30] = 1.0; // no neighbor support
        let w = Waveform::new(500e6, 0.0, samples.clone());
        assert!(detect_peak(&w, 0.1, 10e-9).is_none());
        // With supported neighbors the same peak detects.
        samples[29] = 0.6;
        samples[31] = 0.6;
        let w = Waveform::new(500e6, 0.0, samples);
        assert!(detect_peak(&w, 0.1, 10e-9).is_some());
    }

    #[test]
    fn triangular_pulse_peaks_at_its_apex() {
        // Symmetric triangle: parabola vertex lands on the center sample.
        let mut samples = vec![0.0; 64];
        for (i, v) in [0.25, 0.5, 0.75, 1.0, 0.75, 0.5, 0.25].iter().enumerate() {
            samples[20 + i] = *v;
        }
        let w = Waveform::new(500e6, 1e-6, samples);
        let d = detect_peak(&w, 0.1, 10e-9).unwrap();
        assert!((d.tau1 - w.time_at(23)).abs() < 1e-15);
        assert!((d.peak_amplitude - 1.0).abs() < 1e-12);
    }

    #[test]
    fn clean_digitized_pulse_recovers_timing_within_two_centimeters() {
        let cfg = dense_cfg();
        let truth = 2.0 * 10.0 / SPEED_OF_LIGHT;
        let dense = synthesize_echo(10.0, 0.8, 0.0, &cfg);
        let adc = digitize(&dense, cfg.adc_sample_rate);
        let d = detect_peak(&adc, cfg.detection_threshold, cfg.pulse_width).unwrap();
        assert!(
            (d.tau1 - truth).abs() < 0.13e-9,
            "timing error {} s",
            (d.tau1 - truth).abs()
        );
        let r = range_from_tof(0.0, d.tau1).unwrap();
        assert!((r - 10.0).abs() <= 0.02);
    }

    #[test]
    fn clipped_plateau_longer_than_pulse_width_is_undetectable() {
        // A 1 MHz tone above the rail clips into ~200 ns plateaus at 500 MHz.
        let fs = 500e6;
        let n = 1024;
        let w = Waveform::new(
            fs,
            0.0,
            (0..n)
                .map(|k| {
                    let t = k as f64 / fs;
                    2.0 * (2.0 * std::f64::consts::PI * 1e6 * t).sin()
                })
                .collect(),
        );
        let clipped = saturate(&w, 1.0);
        assert!(detect_peak(&clipped, 0.5, 10e-9).is_none());
        // The unclipped tone itself is detectable.
        assert!(detect_peak(&w, 0.5, 10e-9).is_some());
    }

    #[test]
    fn ranging_spot_values_and_ordering() {
        assert_eq!(range_from_tof(5.0, 5.0).unwrap(), 0.0);
        let r = range_from_tof(0.0, 1e-6).unwrap();
        assert!((r - 149.896229).abs() / 149.896229 < 1e-12);
        let r = range_from_tof(0.0, 66.713e-9).unwrap();
        assert!((r - 10.000027125277).abs() < 1e-9);
        assert!(range_from_tof(1.0, 0.5).is_err());
    }

    #[test]
    fn ranging_is_linear_in_the_delay() {
        let tau0 = 3.2e-3;
        let delta = 41.7e-9;
        let base = range_from_tof(tau0, tau0 + delta).unwrap();
        for k in [2.0, 5.0, 12.5] {
            let scaled = range_from_tof(tau0, tau0 + k * delta).unwrap();
            assert!((scaled - k * base).abs() <= 1e-9 * scaled.abs());
        }
    }
}
