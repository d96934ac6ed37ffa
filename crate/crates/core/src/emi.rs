//! Attacker signal description and the frequency-dependent coupling channel.
//!
//! The victim's conductors act as unintentional antennas. Each attack surface
//! carries a list of Lorentzian resonances; the coupling gain at a carrier
//! frequency is the strongest resonance response. Together with the
//! attacker's power chain (generator, saturating amplifier, antenna) and
//! log-distance path loss this yields the normalized interference amplitude
//! arriving at a given surface.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kv;
use crate::monitor::PerturbThresholds;
use crate::signal::{pulse_sigma, pulse_value, SPEED_OF_LIGHT};
use crate::waveform::Waveform;

/// Victim conductors that can couple with interference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Surface {
    /// Analog trace between photodetector and amplifier.
    ReceiverTrace,
    /// Temperature sensor line.
    TemperatureLine,
    /// Supply-rail monitoring line.
    VoltageLine,
    /// Optical encoder line in the beam-steering module.
    EncoderLine,
}

impl Surface {
    pub const ALL: [Surface; 4] = [
        Surface::ReceiverTrace,
        Surface::TemperatureLine,
        Surface::VoltageLine,
        Surface::EncoderLine,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Surface::ReceiverTrace => "receiver_trace",
            Surface::TemperatureLine => "temperature_line",
            Surface::VoltageLine => "voltage_line",
            Surface::EncoderLine => "encoder_line",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Surface::ALL.iter().copied().find(|s| s.name() == name)
    }
}

/// One resonant response of a surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    /// Center frequency, Hz.
    pub center: f64,
    /// Full width, Hz. The response halves in *amplitude* at one width off
    /// center (Lorentzian with half-width `width/2`... see `gain_at`).
    pub width: f64,
    /// Peak coupling gain, dB (amplitude).
    pub peak_gain_db: f64,
}

impl Resonance {
    /// Linear amplitude gain at frequency `f`:
    /// `peak / (1 + ((f - center) / (width/2))^2)`.
    pub fn gain_at(&self, f: f64) -> f64 {
        let peak = 10f64.powf(self.peak_gain_db / 20.0);
        let x = (f - self.center) / (self.width / 2.0);
        peak / (1.0 + x * x)
    }
}

/// The frequency-dependent path from attacker antenna into each surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingChannel {
    /// Per-surface resonance lists. All four surfaces are present; an empty
    /// list means the surface does not couple.
    pub surfaces: BTreeMap<Surface, Vec<Resonance>>,
    /// Log-distance path loss exponent (2 = free space).
    pub path_loss_exponent: f64,
    /// Path loss at 1 m, dB.
    pub reference_loss_db: f64,
    /// Monitoring-corruption onset thresholds for this victim.
    pub perturb: PerturbThresholds,
}

impl Default for CouplingChannel {
    fn default() -> Self {
        let mut surfaces = BTreeMap::new();
        for s in Surface::ALL {
            surfaces.insert(s, Vec::new());
        }
        Self {
            surfaces,
            path_loss_exponent: 2.0,
            reference_loss_db: 30.0,
            perturb: PerturbThresholds::default(),
        }
    }
}

impl CouplingChannel {
    pub fn validate(&self) -> Result<()> {
        for (surface, resonances) in &self.surfaces {
            for r in resonances {
                if !r.width.is_finite() || r.width <= 0.0 {
                    return Err(Error::Config(format!(
                        "resonance width must be positive on {}",
                        surface.name()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Linear coupling gain of `surface` at frequency `f` (max over its
    /// resonances; zero if it has none).
    pub fn gain(&self, surface: Surface, f: f64) -> Result<f64> {
        let resonances = self
            .surfaces
            .get(&surface)
            .ok_or_else(|| Error::UnknownSurface(surface.name().to_string()))?;
        Ok(resonances
            .iter()
            .map(|r| r.gain_at(f))
            .fold(0.0, f64::max))
    }

    /// Normalized interference amplitude arriving at `surface`.
    ///
    /// The generator request passes through the amplifier's hard power
    /// ceiling, gains the antenna, loses `reference_loss + 10*n*log10(d)` on
    /// the path, and finally scales by the surface's coupling gain at the
    /// carrier. Deterministic; amplitude 1.0 corresponds to a 0 dBm-equivalent
    /// field at the surface.
    pub fn coupled_amplitude(&self, emi: &EmiSource, surface: Surface) -> Result<f64> {
        let p_out_dbm = emi.amplifier_output_dbm();
        let path_loss_db =
            self.reference_loss_db + 10.0 * self.path_loss_exponent * emi.distance.log10();
        let field_dbm = p_out_dbm + emi.antenna_gain_dbi - path_loss_db;
        Ok(10f64.powf(field_dbm / 20.0) * self.gain(surface, emi.carrier_freq)?)
    }

    /// Load from a `key = value` file:
    ///
    /// ```text
    /// path_loss_exponent = 2
    /// reference_loss_db  = 30
    /// resonance = receiver_trace,1000e6,80e6,-42   # surface,center,width,peak_gain_db
    /// perturb_threshold_temperature = 0.01
    /// perturb_threshold_voltage     = 0.01
    /// perturb_threshold_encoder     = 0.01
    /// ```
    pub fn from_file(path: &Path) -> Result<Self> {
        let source = path.display().to_string();
        let bindings = kv::parse_file(path)?;
        Self::from_bindings(&bindings, &source)
    }

    pub fn from_bindings(bindings: &[kv::Binding], source: &str) -> Result<Self> {
        let mut ch = Self::default();
        for b in bindings {
            match b.key.as_str() {
                "path_loss_exponent" => ch.path_loss_exponent = b.f64(source)?,
                "reference_loss_db" => ch.reference_loss_db = b.f64(source)?,
                "perturb_threshold_temperature" => ch.perturb.temperature = b.f64(source)?,
                "perturb_threshold_voltage" => ch.perturb.voltage = b.f64(source)?,
                "perturb_threshold_encoder" => ch.perturb.encoder = b.f64(source)?,
                "resonance" => {
                    let parts: Vec<&str> = b.value.split(',').map(str::trim).collect();
                    if parts.len() != 4 {
                        return Err(Error::Parse {
                            file: source.to_string(),
                            line: b.line,
                            message: "resonance takes surface,center,width,peak_gain_db".into(),
                        });
                    }
                    let surface = Surface::from_name(parts[0]).ok_or_else(|| Error::Parse {
                        file: source.to_string(),
                        line: b.line,
                        message: format!("unknown attack surface `{}`", parts[0]),
                    })?;
                    let num = |s: &str| -> Result<f64> {
                        s.parse::<f64>().map_err(|_| Error::Parse {
                            file: source.to_string(),
                            line: b.line,
                            message: format!("`{s}` is not a number"),
                        })
                    };
                    ch.surfaces.get_mut(&surface).unwrap().push(Resonance {
                        center: num(parts[1])?,
                        width: num(parts[2])?,
                        peak_gain_db: num(parts[3])?,
                    });
                }
                _ => return Err(b.unknown_key(source)),
            }
        }
        ch.validate()?;
        Ok(ch)
    }
}

/// A train of Gaussian pulses, the analytic form of an attack baseband.
///
/// A frame-length baseband holds tens of thousands of pulses; keeping peak
/// times analytic avoids quantizing spoof ranges to a sample grid. Rendered
/// windows are available via [`PulseTrain::render`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseTrain {
    pulses: Vec<Pulse>,
    /// FWHM shared by every pulse, seconds.
    pub pulse_width: f64,
}

/// One baseband pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    /// Peak time, seconds (frame-relative until emission).
    pub peak_time: f64,
    /// Peak amplitude, normalized to [0, 1].
    pub amplitude: f64,
}

impl PulseTrain {
    /// Build from pulses; they are sorted by peak time.
    pub fn new(mut pulses: Vec<Pulse>, pulse_width: f64) -> Self {
        pulses.sort_by(|a, b| a.peak_time.total_cmp(&b.peak_time));
        Self { pulses, pulse_width }
    }

    pub fn empty(pulse_width: f64) -> Self {
        Self {
            pulses: Vec::new(),
            pulse_width,
        }
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    /// Baseband value at time `t`: superposed Gaussian pulses, each with
    /// support within six sigma of its peak.
    pub fn value(&self, t: f64) -> f64 {
        let reach = 6.0 * pulse_sigma(self.pulse_width);
        let start = self
            .pulses
            .partition_point(|p| p.peak_time < t - reach);
        let mut v = 0.0;
        for p in &self.pulses[start..] {
            if p.peak_time > t + reach {
                break;
            }
            v += p.amplitude * pulse_value(t, p.peak_time, self.pulse_width);
        }
        v
    }

    /// Render a sampled window of the baseband.
    pub fn render(&self, sample_rate: f64, start_time: f64, n: usize) -> Waveform {
        let samples = (0..n)
            .map(|k| self.value(start_time + k as f64 / sample_rate))
            .collect();
        Waveform::new(sample_rate, start_time, samples)
    }

    /// Write the pulse list as `peak_time_s,amplitude` CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "peak_time_s,amplitude")?;
        for p in &self.pulses {
            writeln!(w, "{},{}", p.peak_time, p.amplitude)?;
        }
        Ok(())
    }
}

/// Carrier modulation scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Modulation {
    /// Continuous wave.
    Cw,
    /// Amplitude modulation of a pulse-train baseband.
    Am {
        baseband: PulseTrain,
        /// Modulation depth in (0, 1]. The bias equals the depth, so the
        /// envelope swings over `[bias + depth*min(bb), bias + depth*max(bb)]`
        /// and cannot go negative for basebands in [-1, 1].
        depth: f64,
        /// Absolute emission time of baseband t = 0.
        origin: f64,
    },
}

/// The attacker's emitter: signal generator, amplifier, antenna, placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmiSource {
    /// Carrier frequency, Hz.
    pub carrier_freq: f64,
    /// Signal generator output, dBm.
    pub generator_power_dbm: f64,
    /// Amplifier gain, dB.
    pub amplifier_gain_db: f64,
    /// Amplifier saturation ceiling, watts.
    pub amplifier_max_power_w: f64,
    /// Transmit antenna gain, dBi.
    pub antenna_gain_dbi: f64,
    /// Distance to the victim, meters.
    pub distance: f64,
    pub modulation: Modulation,
    /// Carrier phase at t = 0, radians.
    pub initial_phase: f64,
}

impl Default for EmiSource {
    fn default() -> Self {
        Self {
            carrier_freq: 990e6,
            generator_power_dbm: 0.0,
            amplifier_gain_db: 56.0,
            amplifier_max_power_w: 50.0,
            antenna_gain_dbi: 15.0,
            distance: 0.3,
            modulation: Modulation::Cw,
            initial_phase: 0.0,
        }
    }
}

impl EmiSource {
    pub fn validate(&self) -> Result<()> {
        if !self.distance.is_finite() || self.distance <= 0.0 {
            return Err(Error::Config("attacker distance must be positive".into()));
        }
        if !self.carrier_freq.is_finite() || self.carrier_freq <= 0.0 {
            return Err(Error::Config("carrier frequency must be positive".into()));
        }
        if let Modulation::Am { depth, .. } = &self.modulation {
            if !depth.is_finite() || *depth <= 0.0 || *depth > 1.0 {
                return Err(Error::Domain(format!("AM depth {depth} outside (0, 1]")));
            }
        }
        Ok(())
    }

    /// Amplifier output after the hard saturation ceiling, dBm.
    pub fn amplifier_output_dbm(&self) -> f64 {
        let ceiling_dbm = 10.0 * (self.amplifier_max_power_w * 1000.0).log10();
        (self.generator_power_dbm + self.amplifier_gain_db).min(ceiling_dbm)
    }

    /// Carrier phase at absolute time `t`, radians.
    ///
    /// Computed from the fractional carrier cycle count to keep precision at
    /// large `f * t` products.
    pub fn carrier_phase(&self, t: f64) -> f64 {
        let cycles = self.carrier_freq * t;
        2.0 * PI * cycles.fract() + self.initial_phase
    }

    /// Normalized emitted waveform value at absolute time `t` (peak envelope
    /// 1). The coupled signal at a surface is `coupled_amplitude * this`.
    pub fn emitted_value(&self, t: f64) -> f64 {
        let carrier = self.carrier_phase(t).sin();
        match &self.modulation {
            Modulation::Cw => carrier,
            Modulation::Am {
                baseband,
                depth,
                origin,
            } => {
                let bias = *depth;
                let envelope = (bias + depth * baseband.value(t - origin)).max(0.0);
                envelope / (bias + depth) * carrier
            }
        }
    }

    /// Load from a `key = value` file. The modulation here is CW; AM sources
    /// are produced by the attack planner.
    pub fn from_file(path: &Path) -> Result<Self> {
        let source = path.display().to_string();
        let bindings = kv::parse_file(path)?;
        Self::from_bindings(&bindings, &source)
    }

    pub fn from_bindings(bindings: &[kv::Binding], source: &str) -> Result<Self> {
        let mut emi = Self::default();
        for b in bindings {
            match b.key.as_str() {
                "carrier_freq" => emi.carrier_freq = b.f64(source)?,
                "generator_power_dbm" => emi.generator_power_dbm = b.f64(source)?,
                "amplifier_gain_db" => emi.amplifier_gain_db = b.f64(source)?,
                "amplifier_max_power_w" => emi.amplifier_max_power_w = b.f64(source)?,
                "antenna_gain_dbi" => emi.antenna_gain_dbi = b.f64(source)?,
                "distance" => emi.distance = b.f64(source)?,
                "initial_phase" => emi.initial_phase = b.f64(source)?,
                _ => return Err(b.unknown_key(source)),
            }
        }
        emi.validate()?;
        Ok(emi)
    }
}

/// Optimal coupling band for a trace of length `l` meters:
/// `(c / (50 l), c / (2 l))`.
pub fn estimate_band(trace_length: f64) -> Result<(f64, f64)> {
    if !trace_length.is_finite() || trace_length <= 0.0 {
        return Err(Error::Domain(format!(
            "trace length must be positive, got {trace_length}"
        )));
    }
    Ok((
        SPEED_OF_LIGHT / (50.0 * trace_length),
        SPEED_OF_LIGHT / (2.0 * trace_length),
    ))
}
