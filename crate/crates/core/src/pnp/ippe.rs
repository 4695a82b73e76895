//! Infinitesimal plane-based pose estimation.
//!
//! The homography from the object plane to normalized image coordinates is
//! fitted by DLT, and its Jacobian at the plane origin yields the two
//! rotations consistent with the local affine approximation.

use nalgebra::{DMatrix, Matrix2, Matrix3, Vector2, Vector3};

use super::{score, spread_ratio_2d, Correspondences, PnpError, PnpMethod, PnpSolution};
use crate::geometry::{fit_plane, Pose};
use crate::scalar::{real, tolerance, Real};

/// Both planar-ambiguity solutions, best first by reprojection error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IppeSolutions<T: Real = f64> {
    pub best: PnpSolution<T>,
    /// `None` when the mirrored rotation puts a keypoint behind the camera.
    pub alternate: Option<PnpSolution<T>>,
}

pub fn solve_ippe<T: Real>(corr: &Correspondences<T>) -> Result<IppeSolutions<T>, PnpError> {
    let (centroid, normal, eig) = fit_plane(&corr.object_points);
    let scale = eig[2].max(T::zero()).sqrt();
    let residual = corr
        .object_points
        .iter()
        .map(|p| (p - centroid).dot(&normal).abs())
        .fold(T::zero(), |a, b| a.max(b));
    if residual >= tolerance::<T>(1e-9) {
        return Err(PnpError::NonPlanarInput);
    }
    let limit = tolerance::<T>(1e-9);
    if scale <= T::zero() || eig[1].max(T::zero()).sqrt() <= limit * scale {
        return Err(PnpError::DegenerateConfiguration);
    }

    // Plane frame: columns e1, e2 span the plane, e3 is its normal.
    let e3 = normal.normalize();
    let e1 = corr
        .object_points
        .iter()
        .map(|p| p - centroid)
        .fold(Vector3::zeros(), |a: Vector3<T>, d| if d.norm() > a.norm() { d } else { a });
    let e1 = (e1 - e3 * e3.dot(&e1)).normalize();
    let e2 = e3.cross(&e1);
    let r_plane = Matrix3::from_columns(&[e1, e2, e3]);
    let plane_pts: [Vector2<T>; 4] = corr.object_points.map(|p| {
        let q = r_plane.transpose() * (p - centroid);
        Vector2::new(q.x, q.y)
    });

    let img = corr.normalized();
    if spread_ratio_2d(&img) <= limit {
        return Err(PnpError::DegenerateConfiguration);
    }

    let h = homography(&plane_pts, &img).ok_or(PnpError::DegenerateConfiguration)?;
    if h[(2, 2)].abs() <= T::default_epsilon() {
        return Err(PnpError::DegenerateConfiguration);
    }
    let p = h[(0, 2)] / h[(2, 2)];
    let q = h[(1, 2)] / h[(2, 2)];
    let jac = Matrix2::new(
        h[(0, 0)] - p * h[(2, 0)],
        h[(0, 1)] - p * h[(2, 1)],
        h[(1, 0)] - q * h[(2, 0)],
        h[(1, 1)] - q * h[(2, 1)],
    ) / h[(2, 2)];

    let rotations = ippe_rotations(&jac, p, q).ok_or(PnpError::DegenerateConfiguration)?;

    let mut sols = Vec::with_capacity(2);
    for rc in rotations {
        let Some(tc) = plane_translation(&rc, &plane_pts, &img) else {
            continue;
        };
        // X_cam = Rc·R_planeᵀ·(p − centroid) + tc
        let r = rc * r_plane.transpose();
        let t = tc - r * centroid;
        if let Some(s) = score(Pose::new(r, t), corr, PnpMethod::Ippe) {
            sols.push(s);
        }
    }
    sols.sort_by(|a, b| {
        a.reprojection_error
            .partial_cmp(&b.reprojection_error)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut it = sols.into_iter();
    let best = it.next().ok_or(PnpError::NoRealSolution)?;
    Ok(IppeSolutions { best, alternate: it.next() })
}

/// Rotation taking the z axis onto the unit vector `v` by the shortest arc.
fn rotation_z_to<T: Real>(v: &Vector3<T>) -> Matrix3<T> {
    let k = Vector3::new(-v.y, v.x, T::zero());
    let s2 = k.norm_squared();
    if s2 <= T::default_epsilon() * T::default_epsilon() {
        return Matrix3::identity();
    }
    let kx = Matrix3::new(T::zero(), -k.z, k.y, k.z, T::zero(), -k.x, -k.y, k.x, T::zero());
    Matrix3::identity() + kx + kx * kx * ((T::one() - v.z) / s2)
}

/// The two rotations of the plane consistent with homography Jacobian `jac`
/// at the point whose normalized projection is `(p, q)`.
fn ippe_rotations<T: Real>(jac: &Matrix2<T>, p: T, q: T) -> Option<[Matrix3<T>; 2]> {
    let rv = rotation_z_to(&Vector3::new(p, q, T::one()).normalize());
    let b = Matrix2::new(
        rv[(0, 0)] - p * rv[(2, 0)],
        rv[(0, 1)] - p * rv[(2, 1)],
        rv[(1, 0)] - q * rv[(2, 0)],
        rv[(1, 1)] - q * rv[(2, 1)],
    );
    let a = b.try_inverse()? * jac;
    let ata = a.transpose() * a;
    let (a00, a01, a11) = (ata[(0, 0)], ata[(0, 1)], ata[(1, 1)]);
    let half = real::<T>(0.5);
    let gamma = (half * (a00 + a11 + ((a00 - a11) * (a00 - a11) + real::<T>(4.0) * a01 * a01).sqrt())).sqrt();
    if gamma <= T::default_epsilon() {
        return None;
    }
    let rt = a / gamma;
    let b0 = (T::one() - rt[(0, 0)] * rt[(0, 0)] - rt[(1, 0)] * rt[(1, 0)]).max(T::zero()).sqrt();
    let mut b1 = (T::one() - rt[(0, 1)] * rt[(0, 1)] - rt[(1, 1)] * rt[(1, 1)]).max(T::zero()).sqrt();
    if rt[(0, 0)] * rt[(0, 1)] + rt[(1, 0)] * rt[(1, 1)] > T::zero() {
        b1 = -b1;
    }
    let build = |sign: T| {
        let c1 = Vector3::new(rt[(0, 0)], rt[(1, 0)], sign * b0);
        let c2 = Vector3::new(rt[(0, 1)], rt[(1, 1)], sign * b1);
        rv * Matrix3::from_columns(&[c1, c2, c1.cross(&c2)])
    };
    Some([build(T::one()), build(-T::one())])
}

/// Least-squares translation for a known rotation of the z=0 plane.
fn plane_translation<T: Real>(r: &Matrix3<T>, plane: &[Vector2<T>; 4], img: &[Vector2<T>; 4]) -> Option<Vector3<T>> {
    let mut a = DMatrix::<T>::zeros(8, 3);
    let mut b = DMatrix::<T>::zeros(8, 1);
    for i in 0..4 {
        let x = Vector3::new(plane[i].x, plane[i].y, T::zero());
        let rx = r * x;
        let (u, v) = (img[i].x, img[i].y);
        a[(2 * i, 0)] = T::one();
        a[(2 * i, 2)] = -u;
        b[(2 * i, 0)] = u * rx.z - rx.x;
        a[(2 * i + 1, 1)] = T::one();
        a[(2 * i + 1, 2)] = -v;
        b[(2 * i + 1, 0)] = v * rx.z - rx.y;
    }
    let t = a.svd(true, true).solve(&b, T::default_epsilon()).ok()?;
    Some(Vector3::new(t[0], t[1], t[2]))
}

/// Similarity transform moving the centroid to the origin and scaling the
/// mean distance to √2.
fn hartley<T: Real>(pts: &[Vector2<T>; 4]) -> Option<Matrix3<T>> {
    let n = real::<T>(4.0);
    let c = pts.iter().fold(Vector2::zeros(), |a, p| a + p) / n;
    let mean = pts.iter().map(|p| (p - c).norm()).fold(T::zero(), |a, b| a + b) / n;
    if mean <= T::zero() {
        return None;
    }
    let s = real::<T>(std::f64::consts::SQRT_2) / mean;
    Some(Matrix3::new(s, T::zero(), -s * c.x, T::zero(), s, -s * c.y, T::zero(), T::zero(), T::one()))
}

/// Normalized DLT homography mapping `src` to `dst`.
pub(crate) fn homography<T: Real>(src: &[Vector2<T>; 4], dst: &[Vector2<T>; 4]) -> Option<Matrix3<T>> {
    let ts = hartley(src)?;
    let td = hartley(dst)?;
    let apply = |m: &Matrix3<T>, p: &Vector2<T>| {
        let h = m * Vector3::new(p.x, p.y, T::one());
        Vector2::new(h.x / h.z, h.y / h.z)
    };
    // Padded to 9×9 so the full right-singular basis is available.
    let mut a = DMatrix::<T>::zeros(9, 9);
    for i in 0..4 {
        let s = apply(&ts, &src[i]);
        let d = apply(&td, &dst[i]);
        let (x, y, u, v) = (s.x, s.y, d.x, d.y);
        let o = T::one();
        let z = T::zero();
        let r0 = [-x, -y, -o, z, z, z, u * x, u * y, u];
        let r1 = [z, z, z, -x, -y, -o, v * x, v * y, v];
        for j in 0..9 {
            a[(2 * i, j)] = r0[j];
            a[(2 * i + 1, j)] = r1[j];
        }
    }
    let svd = a.try_svd(false, true, T::default_epsilon(), 0)?;
    let v_t = svd.v_t?;
    let k = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
        .map(|(i, _)| i)?;
    let h = v_t.row(k);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    Some(td.try_inverse()? * hn * ts)
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;
    use crate::geometry::{rot_x, rot_z, rotation_distance, KeypointKind, KeypointTemplate};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn recovers_reference_box_pose() {
        let pose = Pose::new(rot_z(0.3) * rot_x(-0.2), Vector3::new(0.05, -0.1, 0.8));
        let t = KeypointTemplate::new(KeypointKind::Box, 0.06).unwrap();
        let corr = Correspondences::new(t.points, project_all(&pose, &t.points, &cam()), cam()).unwrap();
        let sols = solve_ippe(&corr).unwrap();
        assert!((sols.best.pose.translation - pose.translation).norm() < 1e-6);
        assert!(rotation_distance(&sols.best.pose.rotation, &pose.rotation) < 1e-6);
        assert!(sols.best.pose.is_valid());
    }

    #[test]
    fn tetrahedron_is_not_planar() {
        let pose = Pose::new(rot_z(0.3), Vector3::new(0.0, 0.0, 0.8));
        let t = KeypointTemplate::new(KeypointKind::Tetrahedron, 0.06).unwrap();
        let corr = Correspondences::new(t.points, project_all(&pose, &t.points, &cam()), cam()).unwrap();
        assert_eq!(solve_ippe(&corr).err(), Some(PnpError::NonPlanarInput));
    }

    #[test]
    fn collinear_object_points_are_degenerate() {
        let obj = [0.0, 1.0, 2.0, 3.0].map(|k| Vector3::new(0.02 * k, 0.0, 0.0));
        let px = [Vector2::new(300.0, 200.0), Vector2::new(320.0, 210.0), Vector2::new(330.0, 260.0), Vector2::new(280.0, 250.0)];
        let corr = Correspondences::new(obj, px, cam()).unwrap();
        assert_eq!(solve_ippe(&corr).err(), Some(PnpError::DegenerateConfiguration));
    }

    #[test]
    fn alternate_never_beats_best_under_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let noise = Normal::new(0.0, 2.0).unwrap();
        for kind in [KeypointKind::Box, KeypointKind::Tail] {
            let t = KeypointTemplate::new(kind, 0.06).unwrap();
            for _ in 0..300 {
                let pose = random_pose(&mut rng, kind, &cam());
                let mut px = project_all(&pose, &t.points, &cam());
                for p in px.iter_mut() {
                    p.x += noise.sample(&mut rng);
                    p.y += noise.sample(&mut rng);
                }
                let corr = Correspondences::new(t.points, px, cam()).unwrap();
                if let Ok(s) = solve_ippe(&corr) {
                    if let Some(alt) = s.alternate {
                        assert!(alt.reprojection_error >= s.best.reprojection_error);
                    }
                }
            }
        }
    }

    #[test]
    fn homography_maps_the_four_points() {
        let src = [Vector2::new(0.0, 0.0), Vector2::new(1.0, 0.0), Vector2::new(1.0, 1.0), Vector2::new(0.0, 1.0)];
        let dst = [Vector2::new(0.1, 0.2), Vector2::new(0.5, 0.1), Vector2::new(0.7, 0.6), Vector2::new(0.05, 0.4)];
        let h = homography(&src, &dst).unwrap();
        for (s, d) in src.iter().zip(dst.iter()) {
            let m = h * Vector3::new(s.x, s.y, 1.0);
            assert!((Vector2::new(m.x / m.z, m.y / m.z) - d).norm() < 1e-12);
        }
    }

    #[test]
    fn single_precision_round_trip() {
        let pose = Pose::new(rot_z(0.3) * rot_x(-0.2), Vector3::new(0.05, -0.1, 0.8));
        let t = KeypointTemplate::new(KeypointKind::Box, 0.06).unwrap();
        let px = project_all(&pose, &t.points, &cam());
        let corr32 = Correspondences::new(
            t.points.map(|p| p.cast::<f32>()),
            px.map(|p| p.cast::<f32>()),
            cam().cast::<f32>(),
        )
        .unwrap();
        let s = solve_ippe(&corr32).unwrap().best;
        assert!((s.pose.translation - pose.translation.cast::<f32>()).norm() < 1e-3);
    }
}
