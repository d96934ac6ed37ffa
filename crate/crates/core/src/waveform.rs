//! Uniformly sampled amplitude-vs-time signals.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// A uniformly sampled real signal. Used for echoes, interference,
/// basebands, and modulated carriers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    /// Samples per second.
    pub sample_rate: f64,
    /// Absolute time of the first sample, seconds.
    pub start_time: f64,
    /// Normalized amplitudes.
    pub samples: Vec<f64>,
}

impl Waveform {
    pub fn new(sample_rate: f64, start_time: f64, samples: Vec<f64>) -> Self {
        debug_assert!(sample_rate > 0.0);
        Self {
            sample_rate,
            start_time,
            samples,
        }
    }

    /// An all-zero window of `n` samples.
    pub fn zeros(sample_rate: f64, start_time: f64, n: usize) -> Self {
        Self::new(sample_rate, start_time, vec![0.0; n])
    }

    /// Absolute time of sample `k`.
    pub fn time_at(&self, k: usize) -> f64 {
        self.start_time + k as f64 / self.sample_rate
    }

    /// Absolute time one past the last sample.
    pub fn end_time(&self) -> f64 {
        self.start_time + self.samples.len() as f64 / self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Write `time,amplitude` CSV rows for plotting.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "time_s,amplitude")?;
        for (k, s) in self.samples.iter().enumerate() {
            writeln!(w, "{},{}", self.time_at(k), s)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timing_accessors() {
        let w = Waveform::zeros(100.0, 1.0, 10);
        assert_eq!(w.time_at(0), 1.0);
        assert!((w.time_at(5) - 1.05).abs() < 1e-15);
        assert!((w.end_time() - 1.1).abs() < 1e-15);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let w = Waveform::new(2.0, 0.0, vec![0.5, -0.5]);
        let mut buf = Vec::new();
        w.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "time_s,amplitude");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0,"));
    }
}
