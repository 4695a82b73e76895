//! Four-point pose recovery: IPPE for planar templates, P3P and EPnP.

mod epnp;
mod ippe;
mod kabsch;
mod p3p;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::{CameraModel, KeypointTemplate, Pose};
use crate::scalar::{real, Real};

pub use epnp::solve_epnp;
pub use ippe::{solve_ippe, IppeSolutions};
pub use kabsch::kabsch;
pub use p3p::solve_p3p;

/// Smallest keypoint depth any solver will accept, in meters.
pub const MIN_DEPTH: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PnpMethod {
    Ippe,
    P3p,
    Epnp,
}

impl PnpMethod {
    pub const ALL: [PnpMethod; 3] = [PnpMethod::Ippe, PnpMethod::P3p, PnpMethod::Epnp];

    pub fn name(self) -> &'static str {
        match self {
            PnpMethod::Ippe => "ippe",
            PnpMethod::P3p => "p3p",
            PnpMethod::Epnp => "epnp",
        }
    }

    /// IPPE only handles coplanar object points.
    pub fn supports(self, template: crate::geometry::KeypointKind) -> bool {
        self != PnpMethod::Ippe || template.is_planar()
    }
}

impl std::str::FromStr for PnpMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ippe" => Ok(PnpMethod::Ippe),
            "p3p" => Ok(PnpMethod::P3p),
            "epnp" => Ok(PnpMethod::Epnp),
            other => Err(format!("unknown PnP method `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum PnpError {
    #[error("object points are not coplanar")]
    NonPlanarInput,
    #[error("degenerate point configuration")]
    DegenerateConfiguration,
    #[error("no real solution with positive depth")]
    NoRealSolution,
    #[error("rank-deficient linear system")]
    SingularSystem,
    #[error("IPPE needs a planar template")]
    IncompatibleMethodTemplate,
    #[error("a keypoint lies behind the camera")]
    NonPositiveDepth,
    #[error("object points must be pairwise distinct")]
    InvalidCorrespondences,
}

/// Four object/image point pairs and the camera that observed them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondences<T: Real = f64> {
    pub object_points: [Vector3<T>; 4],
    pub image_points: [Vector2<T>; 4],
    pub cam: CameraModel<T>,
}

impl<T: Real> Correspondences<T> {
    pub fn new(
        object_points: [Vector3<T>; 4],
        image_points: [Vector2<T>; 4],
        cam: CameraModel<T>,
    ) -> Result<Self, PnpError> {
        for i in 0..4 {
            for j in i + 1..4 {
                if (object_points[i] - object_points[j]).norm() <= real::<T>(1e-9) {
                    return Err(PnpError::InvalidCorrespondences);
                }
            }
        }
        Ok(Self { object_points, image_points, cam })
    }

    /// Correspondences without the distinctness check; solvers report
    /// degeneracy themselves.
    pub fn new_unchecked(
        object_points: [Vector3<T>; 4],
        image_points: [Vector2<T>; 4],
        cam: CameraModel<T>,
    ) -> Self {
        Self { object_points, image_points, cam }
    }

    /// Observed points in normalized image coordinates.
    pub(crate) fn normalized(&self) -> [Vector2<T>; 4] {
        self.image_points.map(|p| self.cam.normalize(&p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PnpSolution<T: Real = f64> {
    pub pose: Pose<T>,
    /// RMS pixel distance over the four points.
    pub reprojection_error: T,
    pub method: PnpMethod,
}

/// RMS distance between observed pixels and the projections of the object
/// points under `pose`.
pub fn reprojection_error<T: Real>(pose: &Pose<T>, corr: &Correspondences<T>) -> Result<T, PnpError> {
    let mut sum = T::zero();
    for (p, obs) in corr.object_points.iter().zip(corr.image_points.iter()) {
        let proj = corr
            .cam
            .project(&pose.apply(p))
            .map_err(|_| PnpError::NonPositiveDepth)?;
        sum += (proj - obs).norm_squared();
    }
    Ok((sum / real::<T>(4.0)).sqrt())
}

/// Scores a candidate pose, rejecting it when any keypoint is closer than
/// [`MIN_DEPTH`].
pub(crate) fn score<T: Real>(
    pose: Pose<T>,
    corr: &Correspondences<T>,
    method: PnpMethod,
) -> Option<PnpSolution<T>> {
    let min_depth = real::<T>(MIN_DEPTH);
    if corr.object_points.iter().any(|p| pose.apply(p).z < min_depth) {
        return None;
    }
    let reprojection_error = reprojection_error(&pose, corr).ok()?;
    if !reprojection_error.is_finite() {
        return None;
    }
    Some(PnpSolution { pose, reprojection_error, method })
}

pub(crate) fn best_of<T: Real>(candidates: impl IntoIterator<Item = PnpSolution<T>>) -> Option<PnpSolution<T>> {
    candidates.into_iter().fold(None, |best, c| match best {
        Some(b) if b.reprojection_error <= c.reprojection_error => Some(b),
        _ => Some(c),
    })
}

/// Recovers the gripper pose whose template keypoints project to
/// `image_points`.
pub fn recover_grasp<T: Real>(
    image_points: &[Vector2<T>; 4],
    template: &KeypointTemplate<T>,
    cam: &CameraModel<T>,
    method: PnpMethod,
) -> Result<PnpSolution<T>, PnpError> {
    if !method.supports(template.kind) {
        return Err(PnpError::IncompatibleMethodTemplate);
    }
    let corr = Correspondences::new(template.points, *image_points, *cam)?;
    solve(&corr, method)
}

pub fn solve<T: Real>(corr: &Correspondences<T>, method: PnpMethod) -> Result<PnpSolution<T>, PnpError> {
    match method {
        PnpMethod::Ippe => solve_ippe(corr).map(|s| s.best),
        PnpMethod::P3p => solve_p3p(corr),
        PnpMethod::Epnp => solve_epnp(corr),
    }
}

/// Ratio of the smallest to the largest singular value of the centered 2D
/// point set; near zero for collinear points.
pub(crate) fn spread_ratio_2d<T: Real>(points: &[Vector2<T>]) -> T {
    let n = real::<T>(points.len() as f64);
    let mean = points.iter().fold(Vector2::zeros(), |a, p| a + p) / n;
    let mut cov = nalgebra::Matrix2::zeros();
    for p in points {
        let d = p - mean;
        cov += d * d.transpose();
    }
    let eig = cov.symmetric_eigenvalues();
    let (lo, hi) = if eig[0] < eig[1] { (eig[0], eig[1]) } else { (eig[1], eig[0]) };
    if hi <= T::zero() {
        return T::zero();
    }
    (lo.max(T::zero()) / hi).sqrt()
}
