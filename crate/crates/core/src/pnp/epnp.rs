//! EPnP: object points as barycentric combinations of control points whose
//! camera coordinates lie in the null space of a linear system, with the
//! null-space weights ("betas") fixed by inter-control-point distances.

use nalgebra::{DMatrix, DVector, Matrix3, Vector2, Vector3};

use super::{best_of, kabsch, score, Correspondences, PnpError, PnpMethod, PnpSolution};
use crate::scalar::{real, tolerance, Real};

const GN_ITERATIONS: usize = 10;

pub fn solve_epnp<T: Real>(corr: &Correspondences<T>) -> Result<PnpSolution<T>, PnpError> {
    let pts = &corr.object_points;
    let n = real::<T>(4.0);
    let c0 = pts.iter().fold(Vector3::zeros(), |a, p| a + p) / n;
    let mut scatter = Matrix3::zeros();
    for p in pts {
        let d = p - c0;
        scatter += d * d.transpose();
    }
    let eig = scatter.symmetric_eigen();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let lambda = order.map(|i| eig.eigenvalues[i].max(T::zero()));
    let tiny = tolerance::<T>(1e-9);
    if lambda[0].sqrt() <= tiny || lambda[1].sqrt() <= tiny * lambda[0].sqrt() {
        return Err(PnpError::SingularSystem);
    }
    let planar = lambda[2].sqrt() <= tiny * lambda[0].sqrt();
    let k = if planar { 3 } else { 4 };

    // Control points: centroid plus one per principal direction.
    let mut ctrl = vec![c0];
    for j in 0..k - 1 {
        let dir = eig.eigenvectors.column(order[j]).into_owned();
        ctrl.push(c0 + dir * (lambda[j] / n).sqrt());
    }

    let alphas: Vec<Vec<T>> = pts
        .iter()
        .map(|p| {
            let d = p - c0;
            let mut a: Vec<T> = (1..k)
                .map(|j| {
                    let e = ctrl[j] - c0;
                    d.dot(&e) / e.norm_squared()
                })
                .collect();
            let a0 = T::one() - a.iter().fold(T::zero(), |s, x| s + *x);
            a.insert(0, a0);
            a
        })
        .collect();

    let img = corr.normalized();
    let mut m = DMatrix::<T>::zeros(8, 3 * k);
    for i in 0..4 {
        for j in 0..k {
            let a = alphas[i][j];
            m[(2 * i, 3 * j)] = a;
            m[(2 * i, 3 * j + 2)] = -a * img[i].x;
            m[(2 * i + 1, 3 * j + 1)] = a;
            m[(2 * i + 1, 3 * j + 2)] = -a * img[i].y;
        }
    }
    let mtm = m.transpose() * &m;
    let e = mtm.symmetric_eigen();
    let mut idx: Vec<usize> = (0..3 * k).collect();
    idx.sort_by(|&a, &b| {
        e.eigenvalues[a]
            .partial_cmp(&e.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let null: Vec<DVector<T>> = idx.iter().take(k).map(|&i| e.eigenvectors.column(i).into_owned()).collect();

    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect();
    let rho: Vec<T> = pairs.iter().map(|&(a, b)| (ctrl[a] - ctrl[b]).norm_squared()).collect();
    let dv = |nv: usize, a: usize, b: usize| -> Vector3<T> {
        let v = &null[nv];
        Vector3::new(
            v[3 * a] - v[3 * b],
            v[3 * a + 1] - v[3 * b + 1],
            v[3 * a + 2] - v[3 * b + 2],
        )
    };

    let mut inits: Vec<Vec<T>> = Vec::new();
    // N = 1: closed-form scale of the smallest null vector.
    {
        let (mut num, mut den) = (T::zero(), T::zero());
        for (p, &(a, b)) in pairs.iter().enumerate() {
            let d = dv(0, a, b).norm();
            num += rho[p].sqrt() * d;
            den += d * d;
        }
        if den > T::zero() {
            inits.push(vec![num / den]);
        }
    }
    // N = 2, 3 and the four-vector subset: linearize on beta products.
    let product_sets: Vec<Vec<(usize, usize)>> = if k == 4 {
        vec![
            vec![(0, 0), (0, 1), (1, 1)],
            vec![(0, 0), (0, 1), (1, 1), (0, 2), (1, 2), (2, 2)],
            vec![(0, 0), (0, 1), (0, 2), (0, 3)],
        ]
    } else {
        vec![vec![(0, 0), (0, 1), (1, 1)]]
    };
    for set in &product_sets {
        if let Some(b) = linearized_betas(set, &pairs, &rho, &dv) {
            inits.push(b);
        }
    }
    // Camera points guessed from a weak-perspective model, projected onto
    // the null space. The equal-depth guess sits exactly between the two
    // depth-reversed interpretations, so the non-planar case also gets a
    // scaled-orthographic guess that carries the depth gradient.
    let depth_guesses = [Some(equal_depth_points(pts, &img)), (!planar).then(|| pos_points(pts, &img)).flatten()];
    for cam_pts in depth_guesses.into_iter().flatten() {
        if let Some(b) = project_to_null(&cam_pts, &alphas, &null) {
            inits.push(b);
        }
    }

    let candidates = inits.into_iter().filter_map(|b0| {
        let betas = gauss_newton(b0, &pairs, &rho, &dv);
        let pose = pose_from_betas(&betas, &null, &alphas, pts, k)?;
        score(pose, corr, PnpMethod::Epnp)
    });
    best_of(candidates).ok_or(PnpError::NoRealSolution)
}

fn linearized_betas<T: Real>(
    set: &[(usize, usize)],
    pairs: &[(usize, usize)],
    rho: &[T],
    dv: &impl Fn(usize, usize, usize) -> Vector3<T>,
) -> Option<Vec<T>> {
    let mut l = DMatrix::<T>::zeros(pairs.len(), set.len());
    for (r, &(a, b)) in pairs.iter().enumerate() {
        for (c, &(i, j)) in set.iter().enumerate() {
            let prod = dv(i, a, b).dot(&dv(j, a, b));
            l[(r, c)] = if i == j { prod } else { prod * real::<T>(2.0) };
        }
    }
    let rhs = DMatrix::from_column_slice(rho.len(), 1, rho);
    let prods = l.svd(true, true).solve(&rhs, T::default_epsilon()).ok()?;
    let width = set.iter().map(|&(i, j)| i.max(j)).max()? + 1;
    let b11 = prods[0];
    let beta1 = b11.abs().sqrt();
    if beta1 <= T::zero() {
        return None;
    }
    let sign = if b11 < T::zero() { -T::one() } else { T::one() };
    let mut betas = vec![T::zero(); width];
    betas[0] = beta1;
    for (c, &(i, j)) in set.iter().enumerate() {
        if i == 0 && j > 0 {
            betas[j] = sign * prods[c] / beta1;
        }
    }
    Some(betas)
}

fn rays<T: Real>(img: &[Vector2<T>; 4]) -> [Vector3<T>; 4] {
    img.map(|p| Vector3::new(p.x, p.y, T::one()))
}

/// All points at the single depth that best matches the object's spread.
fn equal_depth_points<T: Real>(pts: &[Vector3<T>; 4], img: &[Vector2<T>; 4]) -> [Vector3<T>; 4] {
    let rays = rays(img);
    let (mut num, mut den) = (T::zero(), T::zero());
    for i in 0..4 {
        for j in i + 1..4 {
            num += (pts[i] - pts[j]).norm_squared();
            den += (rays[i] - rays[j]).norm_squared();
        }
    }
    let depth = if den > T::zero() { (num / den).sqrt() } else { T::one() };
    rays.map(|r| r * depth)
}

/// Scaled-orthographic pose of a non-coplanar point set, turned into camera
/// points along the observed rays.
fn pos_points<T: Real>(pts: &[Vector3<T>; 4], img: &[Vector2<T>; 4]) -> Option<[Vector3<T>; 4]> {
    let a = Matrix3::from_rows(&[
        (pts[1] - pts[0]).transpose(),
        (pts[2] - pts[0]).transpose(),
        (pts[3] - pts[0]).transpose(),
    ]);
    let inv = a.try_inverse()?;
    let du = Vector3::new(img[1].x - img[0].x, img[2].x - img[0].x, img[3].x - img[0].x);
    let dv = Vector3::new(img[1].y - img[0].y, img[2].y - img[0].y, img[3].y - img[0].y);
    let i = inv * du;
    let j = inv * dv;
    let s = (i.norm() * j.norm()).sqrt();
    if s <= T::zero() {
        return None;
    }
    let k = i.normalize().cross(&j.normalize());
    let z0 = T::one() / s;
    let rays = rays(img);
    Some(std::array::from_fn(|n| rays[n] * (z0 + k.dot(&(pts[n] - pts[0])))))
}

/// Least-squares null-space weights reproducing the given camera points.
fn project_to_null<T: Real>(cam_pts: &[Vector3<T>; 4], alphas: &[Vec<T>], null: &[DVector<T>]) -> Option<Vec<T>> {
    let k = alphas[0].len();
    // Control points from X = A·C, solved per axis.
    let a = DMatrix::from_fn(4, k, |i, j| alphas[i][j]);
    let x = DMatrix::from_fn(4, 3, |i, c| cam_pts[i][c]);
    let ctrl = a.svd(true, true).solve(&x, T::default_epsilon()).ok()?;
    let flat = DVector::from_fn(3 * k, |r, _| ctrl[(r / 3, r % 3)]);
    let basis = DMatrix::from_columns(null);
    let betas = basis.transpose() * flat;
    Some(betas.iter().copied().collect())
}

fn gauss_newton<T: Real>(
    mut betas: Vec<T>,
    pairs: &[(usize, usize)],
    rho: &[T],
    dv: &impl Fn(usize, usize, usize) -> Vector3<T>,
) -> Vec<T> {
    let nb = betas.len();
    for _ in 0..GN_ITERATIONS {
        let mut jac = DMatrix::<T>::zeros(pairs.len(), nb);
        let mut res = DMatrix::<T>::zeros(pairs.len(), 1);
        for (r, &(a, b)) in pairs.iter().enumerate() {
            let diff = (0..nb).fold(Vector3::zeros(), |acc, n| acc + dv(n, a, b) * betas[n]);
            res[(r, 0)] = diff.norm_squared() - rho[r];
            for n in 0..nb {
                jac[(r, n)] = diff.dot(&dv(n, a, b)) * real::<T>(2.0);
            }
        }
        let Ok(step) = jac.svd(true, true).solve(&res, T::default_epsilon()) else {
            break;
        };
        let mut size = T::zero();
        for n in 0..nb {
            betas[n] -= step[n];
            size += step[n].abs();
        }
        if !size.is_finite() || size <= T::default_epsilon() {
            break;
        }
    }
    betas
}

fn pose_from_betas<T: Real>(
    betas: &[T],
    null: &[DVector<T>],
    alphas: &[Vec<T>],
    pts: &[Vector3<T>; 4],
    k: usize,
) -> Option<crate::geometry::Pose<T>> {
    if betas.iter().any(|b| !b.is_finite()) {
        return None;
    }
    let ctrl: Vec<Vector3<T>> = (0..k)
        .map(|j| {
            (0..betas.len()).fold(Vector3::zeros(), |acc, n| {
                let v = &null[n];
                acc + Vector3::new(v[3 * j], v[3 * j + 1], v[3 * j + 2]) * betas[n]
            })
        })
        .collect();
    let mut cam: Vec<Vector3<T>> = alphas
        .iter()
        .map(|a| (0..k).fold(Vector3::zeros(), |acc, j| acc + ctrl[j] * a[j]))
        .collect();
    let mean_z = cam.iter().fold(T::zero(), |s, p| s + p.z);
    if mean_z < T::zero() {
        for p in cam.iter_mut() {
            *p = -*p;
        }
    }
    kabsch(pts, &cam)
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;
    use crate::geometry::{rotation_distance, KeypointKind, KeypointTemplate};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noiseless_recovery_for_every_template() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for kind in KeypointKind::ALL {
            let t = KeypointTemplate::new(kind, 0.06).unwrap();
            for _ in 0..300 {
                let pose = random_pose(&mut rng, kind, &cam());
                let corr = Correspondences::new(t.points, project_all(&pose, &t.points, &cam()), cam()).unwrap();
                let s = solve_epnp(&corr).unwrap();
                assert!((s.pose.translation - pose.translation).norm() < 1e-5, "{kind:?}");
                assert!(rotation_distance(&s.pose.rotation, &pose.rotation) < 1e-5, "{kind:?}");
            }
        }
    }

    #[test]
    fn collinear_object_points_are_singular() {
        let obj = [0.0, 1.0, 2.0, 3.0].map(|k| Vector3::new(0.02 * k, 0.0, 0.0));
        let px = [nalgebra::Vector2::new(300.0, 200.0); 4];
        let corr = Correspondences::new(obj, px, cam()).unwrap();
        assert_eq!(solve_epnp(&corr).err(), Some(PnpError::SingularSystem));
    }
}
