//! Independent oracles and helpers shared by the integration suites.
//!
//! Everything here deliberately avoids the library's own computation paths:
//! the Hausdorff oracle is a plain O(n*m) scan, the spectral oracle measures
//! apparent frequency from an FFT peak, and the statistics are textbook
//! formulas.

#![allow(dead_code)]

use emisim_core::emi::{CouplingChannel, EmiSource, Resonance, Surface};
use emisim_core::{LidarConfig, PointCloud, Primitive, Scene};

/// O(n*m) Hausdorff distance over valid points, no pruning.
pub fn brute_force_hausdorff(a: &PointCloud, b: &PointCloud) -> f64 {
    let pa: Vec<[f64; 3]> = a.valid_points().map(|p| p.cartesian()).collect();
    let pb: Vec<[f64; 3]> = b.valid_points().map(|p| p.cartesian()).collect();
    let directed = |from: &[[f64; 3]], to: &[[f64; 3]]| -> f64 {
        let mut sup = 0.0f64;
        for p in from {
            let mut inf = f64::INFINITY;
            for q in to {
                let d = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2);
                inf = inf.min(d);
            }
            sup = sup.max(inf);
        }
        sup
    };
    directed(&pa, &pb).max(directed(&pb, &pa)).sqrt()
}

/// Spearman rank correlation; assumes no ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    let rank = |vals: &[f64]| -> Vec<usize> {
        let mut idx: Vec<usize> = (0..vals.len()).collect();
        idx.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
        let mut ranks = vec![0usize; vals.len()];
        for (r, &i) in idx.iter().enumerate() {
            ranks[i] = r;
        }
        ranks
    };
    let rx = rank(xs);
    let ry = rank(ys);
    let d2: f64 = rx
        .iter()
        .zip(ry.iter())
        .map(|(a, b)| {
            let d = *a as f64 - *b as f64;
            d * d
        })
        .sum();
    1.0 - 6.0 * d2 / (n as f64 * ((n * n - 1) as f64))
}

/// Two-sided Kolmogorov-Smirnov statistic against the uniform law on
/// `[lo, hi]`.
pub fn ks_statistic_uniform(samples: &[f64], lo: f64, hi: f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, x) in sorted.iter().enumerate() {
        let cdf = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
        d = d.max((cdf - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - cdf).abs());
    }
    d
}

/// Apparent frequency of a real tone sampled at `fs`: FFT magnitude peak
/// with a Hann window and parabolic bin refinement. Returns Hz in
/// `[0, fs/2]`.
pub fn dft_peak_frequency(samples: &[f64], fs: f64) -> f64 {
    use rustfft::{num_complex::Complex, FftPlanner};
    let n = samples.len();
    let mut buf: Vec<Complex<f64>> = samples
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let w = 0.5 - 0.5 * (std::f64::consts::TAU * k as f64 / n as f64).cos();
            Complex::new(s * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let mags: Vec<f64> = buf[..=half].iter().map(|c| c.norm()).collect();
    let mut k_max = 0;
    for (k, &m) in mags.iter().enumerate() {
        if m > mags[k_max] {
            k_max = k;
        }
    }
    let refined = if k_max > 0 && k_max < half {
        let (a, b, c) = (mags[k_max - 1], mags[k_max], mags[k_max + 1]);
        let denom = a - 2.0 * b + c;
        if denom.abs() < 1e-300 {
            k_max as f64
        } else {
            k_max as f64 + 0.5 * (a - c) / denom
        }
    } else {
        k_max as f64
    };
    refined * fs / n as f64
}

/// A wall `distance` meters down the +x axis.
pub fn plane_scene(distance: f64, reflectivity: f64) -> Scene {
    Scene::new(vec![Primitive::Plane {
        normal: [1.0, 0.0, 0.0],
        offset: distance,
        reflectivity,
    }])
    .unwrap()
}

/// Closed box room matching the bundled demo scene.
pub fn room_scene() -> Scene {
    Scene::new(vec![Primitive::Box {
        min: [-6.0, -6.0, -2.0],
        max: [6.0, 6.0, 3.0],
        reflectivity: 0.9,
    }])
    .unwrap()
}

/// A coupling channel whose single resonance delivers exactly
/// `target_amplitude` at `center` for `source`.
pub fn channel_with_amplitude(
    surface: Surface,
    center: f64,
    width: f64,
    source: &EmiSource,
    target_amplitude: f64,
) -> CouplingChannel {
    let mut ch = CouplingChannel::default();
    ch.surfaces.get_mut(&surface).unwrap().push(Resonance {
        center,
        width,
        peak_gain_db: 0.0,
    });
    let probe = EmiSource {
        carrier_freq: center,
        ..source.clone()
    };
    let at_unity = ch.coupled_amplitude(&probe, surface).unwrap();
    ch.surfaces.get_mut(&surface).unwrap()[0].peak_gain_db =
        20.0 * (target_amplitude / at_unity).log10();
    ch
}

/// Machine already spun up for a config.
pub fn running_machine(config: &LidarConfig) -> emisim_core::FddMachine {
    emisim_core::FddMachine::running(config.fault_thresholds(), config.fault_debounce, config.rpm)
}

/// 10x rotation config: frames are 180 cycles and behavior is otherwise
/// identical.
pub fn fast_config() -> LidarConfig {
    LidarConfig {
        rpm: 6000.0,
        ..LidarConfig::default()
    }
}
