use nalgebra::Vector3;

use crate::grasp::Shape;
use crate::poly::{eval_with_derivative, real_roots};

/// Ray parameters below this count as behind the origin.
const T_MIN: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub distance: f64,
    /// Outward unit normal at the hit point.
    pub normal: Vector3<f64>,
}

fn closer(a: Option<Hit>, b: Option<Hit>) -> Option<Hit> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if y.distance < x.distance { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Positive roots of `t² + 2·b·t + c = 0`, ascending.
fn quadratic(b: f64, c: f64) -> Option<(f64, f64)> {
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    // Avoid cancellation by computing the larger-magnitude root first.
    let q = if b > 0.0 { -b - s } else { -b + s };
    let (t0, t1) = if q == 0.0 { (0.0, 0.0) } else { (c / q, q) };
    Some((t0.min(t1), t0.max(t1)))
}

fn sphere_hits(o: &Vector3<f64>, d: &Vector3<f64>, r: f64) -> impl Iterator<Item = f64> {
    let roots = quadratic(o.dot(d), o.norm_squared() - r * r);
    roots.into_iter().flat_map(|(a, b)| [a, b]).filter(|t| *t > T_MIN)
}

/// Hit with the horizontal disk of radius `r` at height `z`.
fn disk(o: &Vector3<f64>, d: &Vector3<f64>, r: f64, z: f64, up: bool) -> Option<Hit> {
    if d.z == 0.0 {
        return None;
    }
    let t = (z - o.z) / d.z;
    let p = o + d * t;
    (t > T_MIN && p.xy().norm_squared() <= r * r).then(|| Hit {
        distance: t,
        normal: if up { Vector3::z() } else { -Vector3::z() },
    })
}

fn wall(o: &Vector3<f64>, d: &Vector3<f64>, r: f64, half: f64) -> Option<Hit> {
    let a = d.xy().norm_squared();
    if a == 0.0 {
        return None;
    }
    let (t0, t1) = quadratic(o.xy().dot(&d.xy()) / a, (o.xy().norm_squared() - r * r) / a)?;
    [t0, t1].into_iter().filter(|&t| t > T_MIN).find_map(|t| {
        let p = o + d * t;
        (p.z.abs() <= half).then(|| Hit { distance: t, normal: Vector3::new(p.x, p.y, 0.0) / r })
    })
}

fn slab(o: &Vector3<f64>, d: &Vector3<f64>, e: &[f64; 3]) -> Option<Hit> {
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    let (mut n_near, mut n_far) = (Vector3::zeros(), Vector3::zeros());
    for i in 0..3 {
        if d[i] == 0.0 {
            if o[i].abs() > e[i] {
                return None;
            }
            continue;
        }
        let (mut a, mut b) = ((-e[i] - o[i]) / d[i], (e[i] - o[i]) / d[i]);
        let mut na = Vector3::ith(i, -1.0);
        let mut nb = Vector3::ith(i, 1.0);
        if a > b {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut na, &mut nb);
        }
        if a > t_near {
            t_near = a;
            n_near = na;
        }
        if b < t_far {
            t_far = b;
            n_far = nb;
        }
    }
    if t_near > t_far {
        None
    } else if t_near > T_MIN {
        Some(Hit { distance: t_near, normal: n_near })
    } else if t_far > T_MIN {
        Some(Hit { distance: t_far, normal: n_far })
    } else {
        None
    }
}

fn torus(o: &Vector3<f64>, d: &Vector3<f64>, major: f64, minor: f64) -> Option<Hit> {
    // Restart the ray at the bounding sphere so the quartic's coefficients
    // are of the torus's own scale rather than the camera distance.
    let bound = major + minor;
    let start = if o.norm() <= bound { 0.0 } else { sphere_hits(o, d, bound).next()? };
    let q = o + d * start;
    let k = q.norm_squared() + major * major - minor * minor;
    let b = q.dot(d);
    let r4 = 4.0 * major * major;
    let coeffs = [
        1.0,
        4.0 * b,
        4.0 * b * b + 2.0 * k - r4 * d.xy().norm_squared(),
        4.0 * b * k - 2.0 * r4 * q.xy().dot(&d.xy()),
        k * k - r4 * q.xy().norm_squared(),
    ];
    let s = real_roots(&coeffs).into_iter().find(|&s| s + start > T_MIN)?;
    // Extra Newton steps; the companion eigenvalues are only accurate to a
    // few ulps of the largest root.
    let mut s = s;
    for _ in 0..3 {
        let (f, df) = eval_with_derivative(&coeffs, s);
        if df == 0.0 {
            break;
        }
        let next = s - f / df;
        if !next.is_finite() || (next - s).abs() > 1e-6 {
            break;
        }
        s = next;
    }
    let p = q + d * s;
    let rho = p.xy().norm();
    let ring = if rho > 0.0 { Vector3::new(p.x, p.y, 0.0) * (major / rho) } else { Vector3::zeros() };
    let normal = (p - ring).try_normalize(0.0).unwrap_or_else(Vector3::z);
    Some(Hit { distance: start + s, normal })
}

/// Nearest intersection of the ray `origin + t·dir`, `t > 0`, with the
/// surface of `shape`, in the shape's frame. `dir` must be unit length.
pub fn ray_intersect(shape: &Shape, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<Hit> {
    let (o, d) = (origin, dir);
    match *shape {
        Shape::Sphere { radius } => sphere_hits(o, d, radius).next().map(|t| Hit {
            distance: t,
            normal: (o + d * t).normalize(),
        }),
        Shape::Cylinder { radius, height } | Shape::Stick { radius, length: height } => {
            let half = height / 2.0;
            let caps = closer(disk(o, d, radius, half, true), disk(o, d, radius, -half, false));
            closer(wall(o, d, radius, half), caps)
        }
        Shape::Cuboid { half_extents } => slab(o, d, &half_extents),
        Shape::SemiSphere { radius } => {
            let dome = sphere_hits(o, d, radius).find_map(|t| {
                let p = o + d * t;
                (p.z >= 0.0).then(|| Hit { distance: t, normal: p.normalize() })
            });
            closer(dome, disk(o, d, radius, 0.0, false))
        }
        Shape::Ring { major, minor } => torus(o, d, major, minor),
    }
}
