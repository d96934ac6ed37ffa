//! Dataset corruption at configurable intensity, plus bit-exact binary point
//! cloud interchange.
//!
//! Corruption perturbs each point's radial distance by an independent
//! uniform draw from `[-epsilon, epsilon]`; angles, intensity, and ray keys
//! never change. The binary format is the common interchange layout:
//! consecutive little-endian `f32` records of `x, y, z, intensity`.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cloud::{Point, PointCloud};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, hash_label, task_rng};

/// Corruption parameters. The distribution is fixed uniform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    /// Noise half-width, meters.
    pub epsilon: f64,
    pub seed: u64,
}

impl CorruptionSpec {
    pub fn new(epsilon: f64, seed: u64) -> Result<Self> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(Error::Domain(format!("epsilon must be >= 0, got {epsilon}")));
        }
        Ok(Self { epsilon, seed })
    }
}

/// Perturb every point's range by an independent uniform draw.
///
/// Each point's draw comes from a stream derived from `(seed, point index)`,
/// so the result is independent of iteration order. Ranges clamp at zero.
pub fn corrupt_cloud(pc: &PointCloud, spec: &CorruptionSpec) -> PointCloud {
    let mut out = pc.clone();
    if spec.epsilon == 0.0 {
        return out;
    }
    for (i, p) in out.points.iter_mut().enumerate() {
        let mut rng = task_rng(spec.seed, &[i as u64]);
        let u: f64 = rng.gen_range(-spec.epsilon..=spec.epsilon);
        p.r = (p.r + u).max(0.0);
    }
    out
}

const RECORD_BYTES: u64 = 16;

/// Read a binary cloud: little-endian `f32` quads `x, y, z, intensity`.
///
/// Points receive ordinal ray keys. Truncated records and non-finite values
/// report the offending byte offset.
pub fn read_cloud_bin(path: &Path) -> Result<PointCloud> {
    let bytes = fs::read(path)?;
    if !(bytes.len() as u64).is_multiple_of(RECORD_BYTES) {
        return Err(Error::Format {
            offset: (bytes.len() as u64 / RECORD_BYTES) * RECORD_BYTES,
            message: format!(
                "file length {} is not a multiple of {RECORD_BYTES}-byte records",
                bytes.len()
            ),
        });
    }
    let mut pc = PointCloud::new(0, 0);
    pc.points.reserve(bytes.len() / RECORD_BYTES as usize);
    for (i, rec) in bytes.chunks_exact(RECORD_BYTES as usize).enumerate() {
        let f = |j: usize| f32::from_le_bytes([rec[4 * j], rec[4 * j + 1], rec[4 * j + 2], rec[4 * j + 3]]);
        let (x, y, z, intensity) = (f(0), f(1), f(2), f(3));
        for (field, v) in [("x", x), ("y", y), ("z", z), ("intensity", intensity)] {
            if !v.is_finite() {
                return Err(Error::Format {
                    offset: i as u64 * RECORD_BYTES,
                    message: format!("non-finite {field} in record {i}"),
                });
            }
        }
        pc.points.push(Point::from_cartesian(
            [x as f64, y as f64, z as f64],
            intensity as f64,
            (i as u32, 0),
        ));
    }
    Ok(pc)
}

/// Write a cloud in the binary record format (the inverse of
/// [`read_cloud_bin`] for Cartesian values).
///
/// Only valid points are published; a measurement invalidated by
/// supervision never leaves the sensor.
pub fn write_cloud_bin(pc: &PointCloud, path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(pc.points.len() * RECORD_BYTES as usize);
    for p in pc.valid_points() {
        let [x, y, z] = p.cartesian();
        for v in [x as f32, y as f32, z as f32, p.intensity as f32] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

/// Corrupt every `.bin` file under `input` into a mirrored tree at `output`.
///
/// Files are processed in lexicographic order of their relative paths; each
/// file's stream derives from `(master seed, relative path)`, so output is
/// reproducible under any parallel schedule. Returns the relative paths
/// processed.
pub fn corrupt_directory(
    input: &Path,
    output: &Path,
    epsilon: f64,
    seed: u64,
) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    collect_bins(input, input, &mut files)?;
    files.sort();
    for rel in &files {
        let spec = CorruptionSpec::new(
            epsilon,
            derive_seed(seed, &[hash_label(&rel.to_string_lossy())]),
        )?;
        let cloud = read_cloud_bin(&input.join(rel))?;
        let corrupted = corrupt_cloud(&cloud, &spec);
        let dest = output.join(rel);
        if let Some(parent) = dest.parent() {
            fs::create_dir_all(parent)?;
        }
        write_cloud_bin(&corrupted, &dest)?;
    }
    Ok(files)
}

fn collect_bins(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let path = entry.path();
        if path.is_dir() {
            collect_bins(root, &path, out)?;
        } else if path.extension().is_some_and(|e| e == "bin") {
            out.push(path.strip_prefix(root).unwrap().to_path_buf());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_cloud(n: usize) -> PointCloud {
        let mut pc = PointCloud::new(0, 3);
        pc.points = (0..n)
            .map(|i| Point::from_spherical(
                5.0 + (i % 40) as f64 * 0.5,
                75.0 + (i % 30) as f64,
                (i as f64 * 7.3) % 360.0,
                0.25,
                true,
                (i as u32, 0),
            ))
            .collect();
        pc
    }

    #[test]
    fn zero_epsilon_is_identity() {
        let pc = sample_cloud(100);
        let out = corrupt_cloud(&pc, &CorruptionSpec::new(0.0, 9).unwrap());
        assert_eq!(out, pc);
    }

    #[test]
    fn noise_is_bounded_and_angles_are_untouched() {
        let pc = sample_cloud(2000);
        let out = corrupt_cloud(&pc, &CorruptionSpec::new(0.05, 9).unwrap());
        for (a, b) in pc.points.iter().zip(out.points.iter()) {
            assert!((a.r - b.r).abs() <= 0.05);
            assert!(a.theta == b.theta && a.phi == b.phi);
            assert!(a.intensity == b.intensity && a.ray_id == b.ray_id);
        }
        // Not the identity.
        assert!(pc.points.iter().zip(out.points.iter()).any(|(a, b)| a.r != b.r));
    }

    #[test]
    fn draws_fill_the_interval_with_zero_mean() {
        let pc = sample_cloud(100_000);
        let out = corrupt_cloud(&pc, &CorruptionSpec::new(0.10, 4).unwrap());
        let deltas: Vec<f64> = pc
            .points
            .iter()
            .zip(out.points.iter())
            .map(|(a, b)| b.r - a.r)
            .collect();
        let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
        let max = deltas.iter().map(|d| d.abs()).fold(0.0f64, f64::max);
        assert!(mean.abs() < 0.002, "mean {mean}");
        assert!(max <= 0.10 && max > 0.099, "max {max}");
    }

    #[test]
    fn negative_ranges_clamp_to_zero() {
        let mut pc = sample_cloud(1);
        pc.points[0].r = 0.01;
        let out = corrupt_cloud(&pc, &CorruptionSpec::new(0.5, 2).unwrap());
        assert!(out.points[0].r >= 0.0);
    }

    #[test]
    fn corruption_is_order_independent_per_point() {
        let pc = sample_cloud(64);
        let spec = CorruptionSpec::new(0.1, 77).unwrap();
        let full = corrupt_cloud(&pc, &spec);
        // Corrupting a prefix yields the same values for those points.
        let mut prefix = pc.clone();
        prefix.points.truncate(10);
        let prefix_out = corrupt_cloud(&prefix, &spec);
        for i in 0..10 {
            assert_eq!(full.points[i].r, prefix_out.points[i].r);
        }
    }

    #[test]
    fn bin_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cloud.bin");
        let pc = sample_cloud(500);
        write_cloud_bin(&pc, &path).unwrap();
        let back = read_cloud_bin(&path).unwrap();
        write_cloud_bin(&back, &dir.path().join("cloud2.bin")).unwrap();
        let a = fs::read(&path).unwrap();
        let b = fs::read(dir.path().join("cloud2.bin")).unwrap();
        assert_eq!(a, b, "write(read(x)) reproduces the bytes");
        assert_eq!(back.points.len(), 500);
    }

    #[test]
    fn zero_record_is_a_point_at_the_origin() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("zero.bin");
        fs::write(&path, [0u8; 16]).unwrap();
        let pc = read_cloud_bin(&path).unwrap();
        assert_eq!(pc.points.len(), 1);
        let p = pc.points[0];
        assert_eq!((p.r, p.theta, p.phi, p.intensity), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn truncated_file_reports_the_byte_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        fs::write(&path, [1u8; 17]).unwrap();
        match read_cloud_bin(&path) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 16),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_values_are_format_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nan.bin");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&1.0f32.to_le_bytes());
        bytes.extend_from_slice(&f32::NAN.to_le_bytes());
        bytes.extend_from_slice(&1.0f32.to_le_bytes());
        bytes.extend_from_slice(&0.5f32.to_le_bytes());
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            read_cloud_bin(&path),
            Err(Error::Format { offset: 0, .. })
        ));
    }

    #[test]
    fn directory_mode_mirrors_the_tree_deterministically() {
        let input = tempfile::tempdir().unwrap();
        fs::create_dir(input.path().join("sub")).unwrap();
        write_cloud_bin(&sample_cloud(40), &input.path().join("a.bin")).unwrap();
        write_cloud_bin(&sample_cloud(25), &input.path().join("sub/b.bin")).unwrap();

        let out1 = tempfile::tempdir().unwrap();
        let out2 = tempfile::tempdir().unwrap();
        let files1 = corrupt_directory(input.path(), out1.path(), 0.1, 5).unwrap();
        let files2 = corrupt_directory(input.path(), out2.path(), 0.1, 5).unwrap();
        assert_eq!(files1.len(), 2);
        assert_eq!(files1, files2);
        for rel in &files1 {
            let a = fs::read(out1.path().join(rel)).unwrap();
            let b = fs::read(out2.path().join(rel)).unwrap();
            assert_eq!(a, b, "seeded rerun is byte-identical");
        }
        // Different master seed changes the bytes.
        let out3 = tempfile::tempdir().unwrap();
        corrupt_directory(input.path(), out3.path(), 0.1, 6).unwrap();
        let a = fs::read(out1.path().join(&files1[0])).unwrap();
        let c = fs::read(out3.path().join(&files1[0])).unwrap();
        assert_ne!(a, c);
    }
}
