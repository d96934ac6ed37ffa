//! Measured points and point clouds in sensor spherical coordinates.

use serde::{Deserialize, Serialize};

/// Exact Cartesian provenance for a point that entered through the binary
/// interchange format. Spherical trigonometry cannot reproduce tiny
/// components bit-exactly, so write-back rescales the original coordinates
/// radially instead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceCartesian {
    /// Coordinates as read, meters.
    pub xyz: [f64; 3],
    /// Radial distance they correspond to, meters.
    pub r: f64,
}

/// One measurement. `theta` is the polar angle from +z and `phi` the azimuth
/// from +x, both in degrees; they always carry the firing geometry, attacked
/// or not. `r` is only meaningful while `valid` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    /// Radial distance, meters.
    pub r: f64,
    /// Polar angle, degrees.
    pub theta: f64,
    /// Azimuth, degrees.
    pub phi: f64,
    /// Normalized echo intensity.
    pub intensity: f64,
    /// Whether the supervision logic accepted the point.
    pub valid: bool,
    /// (frame cycle index, channel) key for matched-ray comparisons.
    pub ray_id: (u32, u16),
    /// Set for points read from binary files; radial edits stay exact.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_cartesian: Option<SourceCartesian>,
}

impl Point {
    /// Cartesian position, meters.
    ///
    /// Points carrying Cartesian provenance return the source coordinates
    /// scaled by any radial change; others convert from spherical.
    pub fn cartesian(&self) -> [f64; 3] {
        if let Some(sc) = &self.source_cartesian {
            if sc.r > 0.0 {
                if self.r == sc.r {
                    return sc.xyz;
                }
                let s = self.r / sc.r;
                return [sc.xyz[0] * s, sc.xyz[1] * s, sc.xyz[2] * s];
            }
        }
        let theta = self.theta.to_radians();
        let phi = self.phi.to_radians();
        [
            self.r * theta.sin() * phi.cos(),
            self.r * theta.sin() * phi.sin(),
            self.r * theta.cos(),
        ]
    }

    /// Build from Cartesian coordinates. The origin maps to angles (0, 0).
    pub fn from_cartesian(xyz: [f64; 3], intensity: f64, ray_id: (u32, u16)) -> Self {
        let [x, y, z] = xyz;
        let r = (x * x + y * y + z * z).sqrt();
        let (theta, phi) = if r == 0.0 {
            (0.0, 0.0)
        } else {
            ((z / r).clamp(-1.0, 1.0).acos().to_degrees(), y.atan2(x).to_degrees())
        };
        Self {
            r,
            theta,
            phi,
            intensity,
            valid: true,
            ray_id,
            source_cartesian: Some(SourceCartesian { xyz, r }),
        }
    }

    /// Build from sensor spherical coordinates.
    pub fn from_spherical(
        r: f64,
        theta: f64,
        phi: f64,
        intensity: f64,
        valid: bool,
        ray_id: (u32, u16),
    ) -> Self {
        Self {
            r,
            theta,
            phi,
            intensity,
            valid,
            ray_id,
            source_cartesian: None,
        }
    }

    /// Polar angle for a firing elevation in degrees.
    pub fn theta_from_elevation(elevation_deg: f64) -> f64 {
        90.0 - elevation_deg
    }
}

/// A frame of points, at most one per ray.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Point>,
    /// Frame counter (revolution index).
    pub frame_index: u32,
    /// Identifier of the generating sensor configuration; clouds are only
    /// comparable when it matches.
    pub config_id: u64,
}

impl PointCloud {
    pub fn new(frame_index: u32, config_id: u64) -> Self {
        Self {
            points: Vec::new(),
            frame_index,
            config_id,
        }
    }

    /// Points currently accepted by supervision.
    pub fn valid_points(&self) -> impl Iterator<Item = &Point> {
        self.points.iter().filter(|p| p.valid)
    }

    pub fn valid_count(&self) -> usize {
        self.valid_points().count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cartesian_roundtrip_reproduces_firing_geometry() {
        // Converting a point to Cartesian and back recovers (theta, phi)
        // to well under 1e-9 degrees.
        for (r, elev, az) in [(10.0, -15.0, 30.0), (3.7, 15.0, 359.0), (99.0, 1.0, 180.0)] {
            let p = Point::from_spherical(r, Point::theta_from_elevation(elev), az, 0.5, true, (0, 0));
            let q = Point::from_cartesian(p.cartesian(), p.intensity, p.ray_id);
            assert!((q.r - r).abs() < 1e-9);
            assert!((q.theta - p.theta).abs() < 1e-9);
            let dphi = (q.phi - p.phi).rem_euclid(360.0);
            assert!(dphi.min(360.0 - dphi) < 1e-9);
        }
    }

    #[test]
    fn origin_has_defined_angles() {
        let p = Point::from_cartesian([0.0, 0.0, 0.0], 0.0, (0, 0));
        assert_eq!((p.r, p.theta, p.phi), (0.0, 0.0, 0.0));
    }
}
