//! Real roots of small dense polynomials via companion-matrix eigenvalues.

use nalgebra::DMatrix;

use crate::scalar::{real, Real};

/// Evaluates `coeffs` (highest degree first) and its derivative at `x`.
pub fn eval_with_derivative<T: Real>(coeffs: &[T], x: T) -> (T, T) {
    let mut p = T::zero();
    let mut dp = T::zero();
    for &c in coeffs {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

/// All roots `(re, im)` of the polynomial with coefficients `coeffs`,
/// highest degree first. Leading coefficients that are negligible relative
/// to the largest one are dropped so a nearly-degenerate quartic degrades to
/// a cubic.
pub fn complex_roots<T: Real>(coeffs: &[T]) -> Vec<(T, T)> {
    let scale = coeffs
        .iter()
        .fold(T::zero(), |m, c| if c.abs() > m { c.abs() } else { m });
    if scale == T::zero() {
        return Vec::new();
    }
    let negligible = scale * real::<T>(1e-14);
    let start = coeffs
        .iter()
        .position(|c| c.abs() > negligible)
        .unwrap_or(coeffs.len());
    let c = &coeffs[start..];
    let degree = c.len().saturating_sub(1);
    if degree == 0 {
        return Vec::new();
    }
    if degree == 1 {
        return vec![(-c[1] / c[0], T::zero())];
    }
    let mut companion = DMatrix::<T>::zeros(degree, degree);
    for j in 0..degree {
        companion[(0, j)] = -c[j + 1] / c[0];
    }
    for i in 1..degree {
        companion[(i, i - 1)] = T::one();
    }
    companion.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect()
}

/// Real roots, ascending. Eigenvalues with `|im| < 1e-8·(1 + |re|)` count
/// as real; each accepted root gets one Newton step, kept only if it lowers
/// the residual.
pub fn real_roots<T: Real>(coeffs: &[T]) -> Vec<T> {
    let accept = real::<T>(1e-8);
    let mut roots: Vec<T> = complex_roots(coeffs)
        .into_iter()
        .filter(|(re, im)| im.abs() < accept * (T::one() + re.abs()))
        .map(|(re, _)| newton_step(coeffs, re))
        .collect();
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    roots
}

/// One guarded Newton step on `coeffs` from `x`.
pub fn newton_step<T: Real>(coeffs: &[T], x: T) -> T {
    polish(coeffs, x)
}

fn polish<T: Real>(coeffs: &[T], x: T) -> T {
    let (p, dp) = eval_with_derivative(coeffs, x);
    if dp == T::zero() {
        return x;
    }
    let next = x - p / dp;
    if !next.is_finite() {
        return x;
    }
    let (pn, _) = eval_with_derivative(coeffs, next);
    if pn.abs() <= p.abs() {
        next
    } else {
        x
    }
}
