use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::shape::Shape;
use crate::geometry::{from_axes, Pose};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyId {
    CylinderSide,
    CylinderTop,
    StickPinch,
    SphereElevation30,
    SphereElevation60,
    SphereElevation90,
    SemiSphereBand,
    CuboidPinchX,
    CuboidPinchY,
    CuboidPinchZ,
    RingTube,
}

/// How a parameter domain is sampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    /// Both endpoints included.
    Closed,
    /// The map is periodic over the interval; sampled half-open.
    Periodic,
    /// Sampled half-open, but the map does not wrap: the end point is the
    /// start rotated by the gripper symmetry, which pose distances ignore.
    HalfOpen,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub domain: Domain,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self { lo, hi: hi.max(lo), domain: Domain::Closed }
    }

    pub fn periodic(lo: f64, hi: f64) -> Self {
        Self { lo, hi, domain: Domain::Periodic }
    }

    pub fn half_open(lo: f64, hi: f64) -> Self {
        Self { lo, hi, domain: Domain::HalfOpen }
    }

    pub fn point(x: f64) -> Self {
        Self::closed(x, x)
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_degenerate(&self) -> bool {
        self.len() <= 0.0
    }

    /// `n` equispaced values; a degenerate interval yields its single point.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        let n = n.max(1);
        if self.is_degenerate() {
            return vec![self.lo];
        }
        if self.domain != Domain::Closed {
            return (0..n).map(|i| self.lo + self.len() * i as f64 / n as f64).collect();
        }
        if n == 1 {
            return vec![0.5 * (self.lo + self.hi)];
        }
        (0..n)
            .map(|i| if i + 1 == n { self.hi } else { self.lo + self.len() * i as f64 / (n - 1) as f64 })
            .collect()
    }

    /// Largest parameter distance from any point of the domain to the
    /// nearest of `grid(n)`.
    pub fn half_gap(&self, n: usize) -> f64 {
        let n = n.max(1);
        if self.is_degenerate() {
            return 0.0;
        }
        match self.domain {
            Domain::Periodic => self.len() / (2 * n) as f64,
            Domain::HalfOpen => self.len() / n as f64,
            Domain::Closed if n == 1 => self.len() / 2.0,
            Domain::Closed => self.len() / (2 * (n - 1)) as f64,
        }
    }

    /// Fewest grid points whose half gap times `lipschitz` stays within
    /// `bound`.
    pub fn count_for(&self, lipschitz: f64, bound: f64) -> usize {
        if self.is_degenerate() || lipschitz <= 0.0 || bound.is_infinite() {
            return 1;
        }
        let target = bound / lipschitz;
        let mut n = match self.domain {
            Domain::Periodic => (self.len() / (2.0 * target)).ceil() as usize,
            Domain::HalfOpen => (self.len() / target).ceil() as usize,
            Domain::Closed => (self.len() / (2.0 * target)).ceil() as usize + 1,
        };
        n = n.max(1);
        while n > 1 && self.half_gap(n - 1) <= target {
            n -= 1;
        }
        while self.half_gap(n) > target {
            n += 1;
        }
        n
    }
}

/// Options shared by every family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FamilyConfig {
    pub max_width: f64,
    pub margin: f64,
    pub cylinder_top: bool,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        Self { max_width: 0.085, margin: 0.01, cylinder_top: true }
    }
}

/// Depth of the top-grasp origin below the cylinder's top face.
pub const TOP_GRASP_DEPTH: f64 = 0.01;
/// Lowest fingertip height of the semi-sphere band pinch above the flat face.
pub const BAND_MIN_HEIGHT: f64 = 0.002;
/// Highest band height as a fraction of the radius; sin⁻¹(0.25) ≈ 14.5°
/// keeps contact normals within 15° of the closing axis.
pub const BAND_MAX_FRACTION: f64 = 0.25;
/// Tilt range of ring grasps away from vertical.
pub const RING_MAX_TILT: f64 = PI / 3.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraspFamily {
    pub id: FamilyId,
    pub shape: Shape,
    pub u: Interval,
    pub v: Interval,
}

/// Unit radial and tangential directions in the xy-plane.
fn radial(a: f64) -> Vector3<f64> {
    Vector3::new(a.cos(), a.sin(), 0.0)
}

fn tangent(a: f64) -> Vector3<f64> {
    Vector3::new(-a.sin(), a.cos(), 0.0)
}

fn frame(x: Vector3<f64>, y: Vector3<f64>, origin: Vector3<f64>) -> Pose {
    Pose::new(from_axes(&x, &y, &x.cross(&y)), origin)
}

/// Longer and shorter in-plane axes for a pinch across `axis`.
fn cuboid_axes(e: [f64; 3], axis: usize) -> (usize, usize) {
    let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
    let (a, b) = (a.min(b), a.max(b));
    if e[b] > e[a] {
        (b, a)
    } else {
        (a, b)
    }
}

fn cuboid_axis(id: FamilyId) -> usize {
    match id {
        FamilyId::CuboidPinchX => 0,
        FamilyId::CuboidPinchY => 1,
        _ => 2,
    }
}

impl GraspFamily {
    /// Object-frame gripper pose and open width at `(u, v)`.
    pub fn map(&self, u: f64, v: f64) -> (Pose, f64) {
        let z = Vector3::z();
        match (self.id, self.shape) {
            (FamilyId::CylinderSide, Shape::Cylinder { radius, .. }) => {
                let y = radial(v);
                (frame(y.cross(&z), y, z * u), 2.0 * radius)
            }
            (FamilyId::CylinderTop, Shape::Cylinder { radius, height }) => {
                (frame(-z, radial(v), z * (height / 2.0 - TOP_GRASP_DEPTH)), 2.0 * radius)
            }
            (FamilyId::StickPinch, Shape::Stick { radius, .. }) => {
                (frame(-radial(v), tangent(v), z * u), 2.0 * radius)
            }
            (
                FamilyId::SphereElevation30 | FamilyId::SphereElevation60 | FamilyId::SphereElevation90,
                Shape::Sphere { radius },
            ) => {
                let el = sphere_elevation(self.id);
                let d = radial(v) * el.cos() + z * el.sin();
                (frame(-d, tangent(v), Vector3::zeros()), 2.0 * radius)
            }
            (FamilyId::SemiSphereBand, Shape::SemiSphere { radius }) => {
                let w = 2.0 * (radius * radius - u * u).max(0.0).sqrt();
                (frame(-z, radial(v), z * u), w)
            }
            (FamilyId::CuboidPinchX | FamilyId::CuboidPinchY | FamilyId::CuboidPinchZ, Shape::Cuboid { half_extents }) => {
                let k = cuboid_axis(self.id);
                let (p, q) = cuboid_axes(half_extents, k);
                let (ep, eq, ek) = (Vector3::ith(p, 1.0), Vector3::ith(q, 1.0), Vector3::ith(k, 1.0));
                let x = -(eq * v.cos() + ep * v.sin());
                (frame(x, ek, ep * u), 2.0 * half_extents[k])
            }
            (FamilyId::RingTube, Shape::Ring { major, minor }) => {
                let er = radial(u);
                let x = -(z * v.cos() + er * v.sin());
                let y = er * v.cos() - z * v.sin();
                (frame(x, y, er * major), 2.0 * minor)
            }
            (id, shape) => unreachable!("family {id:?} built for {shape:?}"),
        }
    }

    /// Bound on translation change per unit of `u`; `v` never moves the origin.
    pub fn translation_lipschitz(&self) -> f64 {
        match self.shape {
            Shape::Ring { major, .. } => major,
            _ => 1.0,
        }
    }

    /// Bounds on rotation change per unit of `u` and of `v`.
    pub fn rotation_lipschitz(&self) -> (f64, f64) {
        match self.id {
            FamilyId::RingTube => (1.0, 1.0),
            _ => (0.0, 1.0),
        }
    }

    pub fn annotation(&self, u: f64, v: f64, u_index: usize, v_index: usize) -> GraspAnnotation {
        let (pose, width) = self.map(u, v);
        GraspAnnotation { family: self.id, u, v, u_index, v_index, pose, width }
    }
}

fn sphere_elevation(id: FamilyId) -> f64 {
    match id {
        FamilyId::SphereElevation30 => PI / 6.0,
        FamilyId::SphereElevation60 => PI / 3.0,
        _ => FRAC_PI_2,
    }
}

/// A labeled grasp in the object frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraspAnnotation {
    pub family: FamilyId,
    pub u: f64,
    pub v: f64,
    pub u_index: usize,
    pub v_index: usize,
    pub pose: Pose,
    pub width: f64,
}

impl GraspAnnotation {
    /// Ordering key used to make label encoding deterministic.
    pub fn order_key(&self) -> (FamilyId, usize, usize) {
        (self.family, self.u_index, self.v_index)
    }
}

/// The grasp families of `shape`, in a fixed order. Families whose width
/// would exceed the gripper span are omitted.
pub fn families_of(shape: &Shape, cfg: &FamilyConfig) -> Vec<GraspFamily> {
    let m = cfg.margin;
    let slide = |half: f64| {
        if half - m > -half + m {
            Interval::closed(-half + m, half - m)
        } else {
            Interval::point(0.0)
        }
    };
    let fits = |w: f64| w <= cfg.max_width;
    let full = Interval::periodic(0.0, TAU);
    let half_turn = Interval::half_open(0.0, PI);
    let fam = |id, u, v| GraspFamily { id, shape: *shape, u, v };
    match *shape {
        Shape::Cylinder { radius, height } => {
            if !fits(2.0 * radius) {
                return Vec::new();
            }
            let mut out = vec![fam(FamilyId::CylinderSide, slide(height / 2.0), full)];
            if cfg.cylinder_top && height > 2.0 * TOP_GRASP_DEPTH {
                out.push(fam(FamilyId::CylinderTop, Interval::point(0.0), half_turn));
            }
            out
        }
        Shape::Stick { radius, length } if fits(2.0 * radius) => {
            vec![fam(FamilyId::StickPinch, slide(length / 2.0), full)]
        }
        Shape::Sphere { radius } if fits(2.0 * radius) => [
            FamilyId::SphereElevation30,
            FamilyId::SphereElevation60,
            FamilyId::SphereElevation90,
        ]
        .into_iter()
        .map(|id| fam(id, Interval::point(0.0), full))
        .collect(),
        Shape::SemiSphere { radius } => {
            let hi = BAND_MAX_FRACTION * radius;
            let lo = BAND_MIN_HEIGHT.min(hi);
            // The band width shrinks with height, so the lowest grasp is the widest.
            if !fits(2.0 * (radius * radius - lo * lo).sqrt()) {
                return Vec::new();
            }
            vec![fam(FamilyId::SemiSphereBand, Interval::closed(lo, hi), half_turn)]
        }
        Shape::Cuboid { half_extents: e } => [FamilyId::CuboidPinchX, FamilyId::CuboidPinchY, FamilyId::CuboidPinchZ]
            .into_iter()
            .filter(|&id| fits(2.0 * e[cuboid_axis(id)]))
            .map(|id| {
                let (p, _) = cuboid_axes(e, cuboid_axis(id));
                fam(id, slide(e[p]), Interval::closed(-FRAC_PI_2, FRAC_PI_2))
            })
            .collect(),
        Shape::Ring { minor, .. } if fits(2.0 * minor) => {
            vec![fam(FamilyId::RingTube, full, Interval::closed(0.0, RING_MAX_TILT))]
        }
        _ => Vec::new(),
    }
}

/// Cartesian grid of `n_u × n_v` annotations, `u` outer.
pub fn sample_grid(family: &GraspFamily, n_u: usize, n_v: usize) -> Vec<GraspAnnotation> {
    let us = family.u.grid(n_u);
    let vs = family.v.grid(n_v);
    let mut out = Vec::with_capacity(us.len() * vs.len());
    for (i, &u) in us.iter().enumerate() {
        for (j, &v) in vs.iter().enumerate() {
            out.push(family.annotation(u, v, i, j));
        }
    }
    out
}

/// Grid sizes for [`covering_sample`]. Any `(u, v)` lies within the half
/// gaps `δu, δv` of a grid node, so the pose moves at most `Lt·δu` in
/// translation and `Lru·δu + Lrv·δv` in rotation.
pub fn covering_counts(family: &GraspFamily, eps_t: f64, eps_r: f64) -> (usize, usize) {
    // Keep clear of the boundary so round-off in the pose map cannot tip a
    // probe over the threshold.
    let shrink = 1.0 - 1e-9;
    let (eps_t, eps_r) = (eps_t * shrink, eps_r * shrink);
    let lt = family.translation_lipschitz();
    let (lru, lrv) = family.rotation_lipschitz();
    let nu_min = family.u.count_for(lt, eps_t);
    if lru == 0.0 || family.u.is_degenerate() || eps_r.is_infinite() {
        return (nu_min, family.v.count_for(lrv, eps_r));
    }
    let mut best: Option<(usize, usize)> = None;
    let mut nu = nu_min;
    loop {
        let budget = eps_r - lru * family.u.half_gap(nu);
        if budget > 0.0 {
            let nv = family.v.count_for(lrv, budget);
            if best.is_none_or(|(a, b)| nu * nv < a * b) {
                best = Some((nu, nv));
            }
        }
        if let Some((a, b)) = best {
            if nu >= a * b {
                break;
            }
        }
        nu += 1;
    }
    best.expect("loop exits only with a solution")
}

/// A grid sample covering the family within `(eps_t, eps_r)` under
/// `(d_T, d_R)`.
pub fn covering_sample(family: &GraspFamily, eps_t: f64, eps_r: f64) -> Vec<GraspAnnotation> {
    let (nu, nv) = covering_counts(family, eps_t, eps_r);
    sample_grid(family, nu, nv)
}
