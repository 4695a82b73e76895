use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geometry::Pose;

/// Largest radius a stick may have.
pub const MAX_STICK_RADIUS: f64 = 0.012;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Cylinder,
    Ring,
    Stick,
    Sphere,
    SemiSphere,
    Cuboid,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 6] = [
        ShapeKind::Cylinder,
        ShapeKind::Ring,
        ShapeKind::Stick,
        ShapeKind::Sphere,
        ShapeKind::SemiSphere,
        ShapeKind::Cuboid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Cylinder => "cylinder",
            ShapeKind::Ring => "ring",
            ShapeKind::Stick => "stick",
            ShapeKind::Sphere => "sphere",
            ShapeKind::SemiSphere => "semi_sphere",
            ShapeKind::Cuboid => "cuboid",
        }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShapeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ShapeKind::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown shape kind '{s}'"))
    }
}

/// Dimensions of a primitive in its own frame.
///
/// Frames: cylinders and sticks are centered with the axis along z; spheres
/// are centered; a semi-sphere is the `z ≥ 0` half of a ball with its origin
/// at the center of the flat face; cuboids are centered with half-extents
/// along x, y, z; a ring is a torus in the xy-plane around the z axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Cylinder { radius: f64, height: f64 },
    Ring { major: f64, minor: f64 },
    Stick { radius: f64, length: f64 },
    Sphere { radius: f64 },
    SemiSphere { radius: f64 },
    Cuboid { half_extents: [f64; 3] },
}

impl Shape {
    pub fn kind(&self) -> ShapeKind {
        match self {
            Shape::Cylinder { .. } => ShapeKind::Cylinder,
            Shape::Ring { .. } => ShapeKind::Ring,
            Shape::Stick { .. } => ShapeKind::Stick,
            Shape::Sphere { .. } => ShapeKind::Sphere,
            Shape::SemiSphere { .. } => ShapeKind::SemiSphere,
            Shape::Cuboid { .. } => ShapeKind::Cuboid,
        }
    }

    pub fn is_valid(&self) -> bool {
        let pos = |x: f64| x.is_finite() && x > 0.0;
        match *self {
            Shape::Cylinder { radius, height } => pos(radius) && pos(height),
            Shape::Ring { major, minor } => pos(major) && pos(minor) && minor < major,
            Shape::Stick { radius, length } => pos(radius) && pos(length) && radius <= MAX_STICK_RADIUS,
            Shape::Sphere { radius } | Shape::SemiSphere { radius } => pos(radius),
            Shape::Cuboid { half_extents } => half_extents.iter().all(|&e| pos(e)),
        }
    }

    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        match *self {
            Shape::Sphere { radius } => p.norm() - radius,
            Shape::Cuboid { half_extents: e } => {
                let q = Vector3::new(p.x.abs() - e[0], p.y.abs() - e[1], p.z.abs() - e[2]);
                q.map(|c| c.max(0.0)).norm() + q.max().min(0.0)
            }
            Shape::Cylinder { radius, height } | Shape::Stick { radius, length: height } => {
                let dr = p.xy().norm() - radius;
                let dz = p.z.abs() - height / 2.0;
                dr.max(dz).min(0.0) + dr.max(0.0).hypot(dz.max(0.0))
            }
            Shape::Ring { major, minor } => (p.xy().norm() - major).hypot(p.z) - minor,
            Shape::SemiSphere { radius } => {
                let rho = p.xy().norm();
                if p.z >= 0.0 {
                    let n = p.norm();
                    if n > radius {
                        n - radius
                    } else {
                        -(radius - n).min(p.z)
                    }
                } else if rho <= radius {
                    -p.z
                } else {
                    (rho - radius).hypot(p.z)
                }
            }
        }
    }

    /// Outward unit normal from central differences of the signed distance.
    pub fn gradient(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let h = 1e-7;
        let g = Vector3::from_fn(|i, _| {
            let mut a = *p;
            let mut b = *p;
            a[i] += h;
            b[i] -= h;
            (self.signed_distance(&a) - self.signed_distance(&b)) / (2.0 * h)
        });
        g.try_normalize(0.0).unwrap_or_else(Vector3::z)
    }

    /// Radius of a ball around the frame origin containing the shape.
    pub fn bounding_radius(&self) -> f64 {
        match *self {
            Shape::Cylinder { radius, height } | Shape::Stick { radius, length: height } => {
                radius.hypot(height / 2.0)
            }
            Shape::Ring { major, minor } => major + minor,
            Shape::Sphere { radius } | Shape::SemiSphere { radius } => radius,
            Shape::Cuboid { half_extents: e } => Vector3::from(e).norm(),
        }
    }

    /// Points on the surface, spaced roughly `spacing` apart.
    pub fn surface_samples(&self, spacing: f64) -> Vec<Vector3<f64>> {
        let steps = |len: f64| ((len / spacing).ceil() as usize).max(1);
        // Multiples of 4 put samples on the axis-aligned extremes.
        let circle = |r: f64| steps(std::f64::consts::TAU * r).max(8).next_multiple_of(4);
        let mut out = Vec::new();
        match *self {
            Shape::Sphere { radius } | Shape::SemiSphere { radius } => {
                let half = matches!(self, Shape::SemiSphere { .. });
                let n_lat = steps(std::f64::consts::PI * radius).max(4);
                for i in 0..=n_lat {
                    let theta = std::f64::consts::PI * i as f64 / n_lat as f64;
                    let z = radius * theta.cos();
                    if half && z < 0.0 {
                        continue;
                    }
                    let rho = radius * theta.sin();
                    let n = circle(rho);
                    for j in 0..n {
                        let phi = std::f64::consts::TAU * j as f64 / n as f64;
                        out.push(Vector3::new(rho * phi.cos(), rho * phi.sin(), z));
                    }
                }
                if half {
                    disk(&mut out, radius, 0.0, spacing);
                }
            }
            Shape::Cylinder { radius, height } | Shape::Stick { radius, length: height } => {
                let n = circle(radius);
                let nz = steps(height);
                for k in 0..=nz {
                    let z = -height / 2.0 + height * k as f64 / nz as f64;
                    for j in 0..n {
                        let phi = std::f64::consts::TAU * j as f64 / n as f64;
                        out.push(Vector3::new(radius * phi.cos(), radius * phi.sin(), z));
                    }
                }
                disk(&mut out, radius, height / 2.0, spacing);
                disk(&mut out, radius, -height / 2.0, spacing);
            }
            Shape::Ring { major, minor } => {
                let nu = circle(major + minor);
                let nv = circle(minor);
                for i in 0..nu {
                    let u = std::f64::consts::TAU * i as f64 / nu as f64;
                    for j in 0..nv {
                        let v = std::f64::consts::TAU * j as f64 / nv as f64;
                        let rho = major + minor * v.cos();
                        out.push(Vector3::new(rho * u.cos(), rho * u.sin(), minor * v.sin()));
                    }
                }
            }
            Shape::Cuboid { half_extents } => box_surface(&mut out, &Vector3::from(half_extents), spacing),
        }
        out
    }

    /// Height of the frame origin above the table in each stable pose.
    pub fn stable_poses(&self) -> Vec<StablePose> {
        use std::f64::consts::FRAC_PI_2;
        let upright = Pose::identity();
        let lying = Pose::new(crate::geometry::rot_x(FRAC_PI_2), Vector3::zeros());
        match *self {
            Shape::Cylinder { radius, height } => vec![
                StablePose { name: "upright", base: upright, height: height / 2.0 },
                StablePose { name: "lying", base: lying, height: radius },
            ],
            Shape::Stick { radius, .. } => vec![StablePose { name: "lying", base: lying, height: radius }],
            Shape::Sphere { radius } => vec![StablePose { name: "resting", base: upright, height: radius }],
            Shape::SemiSphere { .. } => vec![StablePose { name: "flat", base: upright, height: 0.0 }],
            Shape::Ring { minor, .. } => vec![StablePose { name: "flat", base: upright, height: minor }],
            Shape::Cuboid { half_extents: e } => vec![
                StablePose { name: "z_up", base: upright, height: e[2] },
                StablePose {
                    name: "x_up",
                    base: Pose::new(crate::geometry::rot_y(-FRAC_PI_2), Vector3::zeros()),
                    height: e[0],
                },
                StablePose { name: "y_up", base: lying, height: e[1] },
            ],
        }
    }
}

/// A resting orientation: `base` maps the object frame into a yaw-free world
/// frame whose table is `z = -height`.
#[derive(Clone, Copy, Debug)]
pub struct StablePose {
    pub name: &'static str,
    pub base: Pose,
    pub height: f64,
}

impl StablePose {
    pub fn placed(&self, yaw: f64, x: f64, y: f64) -> Pose {
        let lift = Pose::new(crate::geometry::rot_z(yaw), Vector3::new(x, y, self.height));
        lift.compose(&self.base)
    }
}

fn disk(out: &mut Vec<Vector3<f64>>, radius: f64, z: f64, spacing: f64) {
    let rings = ((radius / spacing).ceil() as usize).max(1);
    out.push(Vector3::new(0.0, 0.0, z));
    for i in 1..=rings {
        let r = radius * i as f64 / rings as f64;
        let n = ((std::f64::consts::TAU * r / spacing).ceil() as usize).max(6);
        for j in 0..n {
            let phi = std::f64::consts::TAU * j as f64 / n as f64;
            out.push(Vector3::new(r * phi.cos(), r * phi.sin(), z));
        }
    }
}

/// Grid samples on the six faces of the centered box with half-extents `e`.
pub(crate) fn box_surface(out: &mut Vec<Vector3<f64>>, e: &Vector3<f64>, spacing: f64) {
    let n = e.map(|h| ((2.0 * h / spacing).ceil() as usize).max(1));
    for axis in 0..3 {
        let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [-1.0, 1.0] {
            for i in 0..=n[a] {
                for j in 0..=n[b] {
                    let mut p = Vector3::zeros();
                    p[axis] = side * e[axis];
                    p[a] = -e[a] + 2.0 * e[a] * i as f64 / n[a] as f64;
                    p[b] = -e[b] + 2.0 * e[b] * j as f64 / n[b] as f64;
                    out.push(p);
                }
            }
        }
    }
}

/// A colored primitive placed in the world.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneObject {
    pub shape: Shape,
    pub color: [f64; 3],
    pub pose: Pose,
}

impl SceneObject {
    pub fn world_signed_distance(&self, p: &Vector3<f64>) -> f64 {
        self.shape.signed_distance(&self.pose.inverse().apply(p))
    }
}
