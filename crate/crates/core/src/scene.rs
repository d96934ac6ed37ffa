//! Analytic scene primitives and exact ray casting.
//!
//! The scene is restricted to planes, spheres, and axis-aligned boxes so that
//! intersections are exact and the simulator can be checked against closed
//! forms.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kv;

/// A 3-vector in meters.
pub type Vec3 = [f64; 3];

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// One scene primitive with its surface reflectivity in `(0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Primitive {
    /// Points `x` with `normal · x = offset`. The normal need not be unit
    /// length in config files; it is normalized on construction.
    Plane {
        normal: Vec3,
        offset: f64,
        reflectivity: f64,
    },
    Sphere {
        center: Vec3,
        radius: f64,
        reflectivity: f64,
    },
    /// Axis-aligned box between `min` and `max` corners.
    Box {
        min: Vec3,
        max: Vec3,
        reflectivity: f64,
    },
}

impl Primitive {
    fn reflectivity(&self) -> f64 {
        match self {
            Primitive::Plane { reflectivity, .. }
            | Primitive::Sphere { reflectivity, .. }
            | Primitive::Box { reflectivity, .. } => *reflectivity,
        }
    }

    /// Nearest strictly positive ray parameter, if any.
    fn intersect(&self, origin: Vec3, dir: Vec3) -> Option<f64> {
        const T_MIN: f64 = 1e-9;
        match self {
            Primitive::Plane { normal, offset, .. } => {
                let denom = dot(*normal, dir);
                if denom.abs() < 1e-15 {
                    return None;
                }
                let t = (offset - dot(*normal, origin)) / denom;
                (t > T_MIN).then_some(t)
            }
            Primitive::Sphere { center, radius, .. } => {
                let oc = [
                    origin[0] - center[0],
                    origin[1] - center[1],
                    origin[2] - center[2],
                ];
                let b = dot(oc, dir);
                let c = dot(oc, oc) - radius * radius;
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let s = disc.sqrt();
                let t0 = -b - s;
                let t1 = -b + s;
                if t0 > T_MIN {
                    Some(t0)
                } else if t1 > T_MIN {
                    Some(t1)
                } else {
                    None
                }
            }
            Primitive::Box { min, max, .. } => {
                let mut t_near = f64::NEG_INFINITY;
                let mut t_far = f64::INFINITY;
                for axis in 0..3 {
                    if dir[axis].abs() < 1e-15 {
                        if origin[axis] < min[axis] || origin[axis] > max[axis] {
                            return None;
                        }
                        continue;
                    }
                    let inv = 1.0 / dir[axis];
                    let mut t0 = (min[axis] - origin[axis]) * inv;
                    let mut t1 = (max[axis] - origin[axis]) * inv;
                    if t0 > t1 {
                        std::mem::swap(&mut t0, &mut t1);
                    }
                    t_near = t_near.max(t0);
                    t_far = t_far.min(t1);
                    if t_near > t_far {
                        return None;
                    }
                }
                if t_near > T_MIN {
                    Some(t_near)
                } else if t_far > T_MIN {
                    Some(t_far)
                } else {
                    None
                }
            }
        }
    }
}

/// A finite collection of primitives.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub primitives: Vec<Primitive>,
}

impl Scene {
    pub fn new(primitives: Vec<Primitive>) -> Result<Self> {
        let scene = Self { primitives };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        for p in &self.primitives {
            let r = p.reflectivity();
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::Config(format!(
                    "reflectivity {r} outside (0, 1]"
                )));
            }
            if let Primitive::Plane { normal, .. } = p {
                if norm(*normal) < 1e-12 {
                    return Err(Error::Config("plane normal must be nonzero".into()));
                }
            }
        }
        Ok(())
    }

    /// Load from a `key = value` file with repeated primitive keys:
    ///
    /// ```text
    /// plane  = nx,ny,nz,offset,reflectivity
    /// sphere = cx,cy,cz,radius,reflectivity
    /// box    = minx,miny,minz,maxx,maxy,maxz,reflectivity
    /// ```
    pub fn from_file(path: &Path) -> Result<Self> {
        let source = path.display().to_string();
        let bindings = kv::parse_file(path)?;
        Self::from_bindings(&bindings, &source)
    }

    pub fn from_bindings(bindings: &[kv::Binding], source: &str) -> Result<Self> {
        let mut primitives = Vec::new();
        for b in bindings {
            let vals = b.f64_list(source)?;
            let arity_err = |want: usize| Error::Parse {
                file: source.to_string(),
                line: b.line,
                message: format!("`{}` takes {want} values, got {}", b.key, vals.len()),
            };
            match b.key.as_str() {
                "plane" => {
                    if vals.len() != 5 {
                        return Err(arity_err(5));
                    }
                    let n = [vals[0], vals[1], vals[2]];
                    let len = norm(n);
                    if len < 1e-12 {
                        return Err(Error::Config("plane normal must be nonzero".into()));
                    }
                    primitives.push(Primitive::Plane {
                        normal: [n[0] / len, n[1] / len, n[2] / len],
                        offset: vals[3] / len,
                        reflectivity: vals[4],
                    });
                }
                "sphere" => {
                    if vals.len() != 5 {
                        return Err(arity_err(5));
                    }
                    primitives.push(Primitive::Sphere {
                        center: [vals[0], vals[1], vals[2]],
                        radius: vals[3],
                        reflectivity: vals[4],
                    });
                }
                "box" => {
                    if vals.len() != 7 {
                        return Err(arity_err(7));
                    }
                    primitives.push(Primitive::Box {
                        min: [vals[0], vals[1], vals[2]],
                        max: [vals[3], vals[4], vals[5]],
                        reflectivity: vals[6],
                    });
                }
                _ => return Err(b.unknown_key(source)),
            }
        }
        Scene::new(primitives)
    }
}

/// Cast a ray and return the nearest hit within `max_range`.
///
/// `direction` must be unit length to within 1e-9. Misses return `None`;
/// the cast itself never fails.
pub fn cast_ray(
    scene: &Scene,
    origin: Vec3,
    direction: Vec3,
    max_range: f64,
) -> Option<(f64, f64)> {
    debug_assert!((norm(direction) - 1.0).abs() < 1e-9);
    let mut best: Option<(f64, f64)> = None;
    for p in &scene.primitives {
        if let Some(t) = p.intersect(origin, direction) {
            if t <= max_range && best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, p.reflectivity()));
            }
        }
    }
    best
}

/// Unit direction for an (azimuth, elevation) pair in degrees.
///
/// Azimuth rotates counterclockwise from +x in the xy-plane; elevation lifts
/// toward +z.
pub fn ray_direction(azimuth_deg: f64, elevation_deg: f64) -> Vec3 {
    let az = azimuth_deg.to_radians();
    let el = elevation_deg.to_radians();
    [el.cos() * az.cos(), el.cos() * az.sin(), el.sin()]
}
