//! Three-point resection (Grunert's quartic) with the fourth point used to
//! pick among up to four real solutions.

use nalgebra::Vector3;

use super::{best_of, kabsch, score, Correspondences, PnpError, PnpMethod, PnpSolution};
use crate::poly::{complex_roots, newton_step};
use crate::scalar::{real, tolerance, Real};

pub fn solve_p3p<T: Real>(corr: &Correspondences<T>) -> Result<PnpSolution<T>, PnpError> {
    let [p0, p1, p2, _] = corr.object_points;
    let a = (p1 - p2).norm();
    let b = (p0 - p2).norm();
    let c = (p0 - p1).norm();
    let area = (p1 - p0).cross(&(p2 - p0)).norm();
    if b <= T::zero() || c <= T::zero() || area <= tolerance::<T>(1e-9) * b * c {
        return Err(PnpError::DegenerateConfiguration);
    }

    let rays: [Vector3<T>; 4] = corr.normalized().map(|n| Vector3::new(n.x, n.y, T::one()).normalize());
    let [j0, j1, j2, _] = rays;
    let cos_a = j1.dot(&j2);
    let cos_b = j0.dot(&j2);
    let cos_g = j0.dot(&j1);
    let depths = grunert(a, b, c, cos_a, cos_b, cos_g);
    if depths.is_empty() {
        return Err(PnpError::NoRealSolution);
    }

    let src = [p0, p1, p2];
    let candidates = depths.into_iter().filter_map(|[s0, s1, s2]| {
        let dst = [j0 * s0, j1 * s1, j2 * s2];
        let pose = kabsch(&src, &dst)?;
        score(pose, corr, PnpMethod::P3p)
    });
    best_of(candidates).ok_or(PnpError::NoRealSolution)
}

/// Positive distances `(s0, s1, s2)` along the three unit rays such that
/// the triangle with sides `a = |P1P2|`, `b = |P0P2|`, `c = |P0P1|` fits
/// the rays with inter-ray cosines `cos_a = j1·j2`, `cos_b = j0·j2`,
/// `cos_g = j0·j1`.
fn grunert<T: Real>(a: T, b: T, c: T, cos_a: T, cos_b: T, cos_g: T) -> Vec<[T; 3]> {
    let two = real::<T>(2.0);
    let four = real::<T>(4.0);
    let one = T::one();
    let b2 = b * b;
    let a2b = a * a / b2;
    let c2b = c * c / b2;
    let amc = a2b - c2b;
    let apc = a2b + c2b;
    let (ca2, cb2, cg2) = (cos_a * cos_a, cos_b * cos_b, cos_g * cos_g);

    let a4 = (amc - one) * (amc - one) - four * c2b * ca2;
    let a3 = four
        * (amc * (one - amc) * cos_b - (one - apc) * cos_a * cos_g + two * c2b * ca2 * cos_b);
    let a2 = two
        * (amc * amc - one + two * amc * amc * cb2 + two * (one - c2b) * ca2
            - four * apc * cos_a * cos_b * cos_g
            + two * (one - a2b) * cg2);
    let a1 = four * (-amc * (one + amc) * cos_b + two * a2b * cg2 * cos_b - (one - apc) * cos_a * cos_g);
    let a0 = (one + amc) * (one + amc) - four * a2b * cg2;

    // Roots with |im| < 1e-8·(1 + |re|) are taken as real. The real parts of
    // the remaining complex pairs are tried as well, since a double root can
    // split into a pair under round-off; those survive only if the polished
    // depths satisfy all three side equations.
    let coeffs = [a4, a3, a2, a1, a0];
    let accept = real::<T>(1e-8);
    let mut out: Vec<[T; 3]> = Vec::with_capacity(4);
    for (re, im) in complex_roots(&coeffs) {
        let strict = im.abs() < accept * (T::one() + re.abs());
        if !strict && im < T::zero() {
            continue;
        }
        let v = newton_step(&coeffs, re);
        if v <= T::zero() {
            continue;
        }
        let denom = one + v * v - two * v * cos_b;
        if denom <= T::zero() {
            continue;
        }
        let s0 = (b2 / denom).sqrt();
        let s2 = v * s0;
        // c² = s0² + s1² − 2·s0·s1·cos_g, two roots for s1; keep the one that
        // also satisfies the a-side equation.
        let disc = (c * c - s0 * s0 * (one - cg2)).max(T::zero()).sqrt();
        let best = [s0 * cos_g + disc, s0 * cos_g - disc]
            .into_iter()
            .filter(|s1| *s1 > T::zero())
            .map(|s1| (s1, (s1 * s1 + s2 * s2 - two * s1 * s2 * cos_a - a * a).abs()))
            .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap_or(std::cmp::Ordering::Equal));
        if let Some((s1, _)) = best {
            let sides = [a, b, c];
            let cosines = [cos_a, cos_b, cos_g];
            let s = polish_depths([s0, s1, s2], sides, cosines);
            if strict || side_residual(&s, sides, cosines) <= tolerance::<T>(1e-10) * b2 {
                out.push(s);
            }
        }
    }
    out
}

const PAIRS: [(usize, usize); 3] = [(1, 2), (0, 2), (0, 1)];

fn side_residual<T: Real>(s: &[T; 3], sides: [T; 3], cosines: [T; 3]) -> T {
    let two = real::<T>(2.0);
    PAIRS.iter().enumerate().fold(T::zero(), |m, (e, &(i, j))| {
        let r = (s[i] * s[i] + s[j] * s[j] - two * s[i] * s[j] * cosines[e] - sides[e] * sides[e]).abs();
        m.max(r)
    })
}

/// Newton steps on the three law-of-cosines equations. The quartic's
/// coefficients lose digits to cancellation when the triangle is small
/// relative to its depth; this restores full precision on the depths.
fn polish_depths<T: Real>(mut s: [T; 3], sides: [T; 3], cosines: [T; 3]) -> [T; 3] {
    // Equation e couples depths PAIRS[e] through sides[e] and cosines[e].
    let two = real::<T>(2.0);
    let residual = |s: &[T; 3]| {
        Vector3::from_fn(|e, _| {
            let (i, j) = PAIRS[e];
            s[i] * s[i] + s[j] * s[j] - two * s[i] * s[j] * cosines[e] - sides[e] * sides[e]
        })
    };
    let mut r = residual(&s);
    for _ in 0..5 {
        let mut jac = nalgebra::Matrix3::zeros();
        for (e, &(i, j)) in PAIRS.iter().enumerate() {
            jac[(e, i)] = two * (s[i] - s[j] * cosines[e]);
            jac[(e, j)] = two * (s[j] - s[i] * cosines[e]);
        }
        let Some(step) = jac.lu().solve(&r) else {
            break;
        };
        let next = [s[0] - step[0], s[1] - step[1], s[2] - step[2]];
        let rn = residual(&next);
        if !(rn.norm() < r.norm()) {
            break;
        }
        s = next;
        r = rn;
    }
    s
}
