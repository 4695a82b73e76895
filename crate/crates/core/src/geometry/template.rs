use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::GeometryError;
use crate::scalar::{real, Real};

/// Default keypoint spacing `l` in meters.
pub const DEFAULT_CANONICAL_DISTANCE: f64 = 0.06;

/// Layout of the four gripper-frame keypoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeypointKind {
    /// Corners of an `l × l` square in the gripper x–z plane.
    Box,
    /// Three square corners plus an apex off the x–z plane.
    Tetrahedron,
    /// A planar "T": one edge along z with a stem pointing back along −x.
    Tail,
}

impl KeypointKind {
    pub const ALL: [KeypointKind; 3] = [KeypointKind::Box, KeypointKind::Tetrahedron, KeypointKind::Tail];

    pub fn is_planar(self) -> bool {
        !matches!(self, KeypointKind::Tetrahedron)
    }

    pub fn name(self) -> &'static str {
        match self {
            KeypointKind::Box => "box",
            KeypointKind::Tetrahedron => "tetrahedron",
            KeypointKind::Tail => "tail",
        }
    }
}

impl std::str::FromStr for KeypointKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "box" => Ok(KeypointKind::Box),
            "tetrahedron" | "tetra" => Ok(KeypointKind::Tetrahedron),
            "tail" => Ok(KeypointKind::Tail),
            other => Err(format!("unknown keypoint template `{other}`")),
        }
    }
}

/// Four gripper-frame assistant points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeypointTemplate<T: Real = f64> {
    pub kind: KeypointKind,
    pub canonical_distance: T,
    pub points: [Vector3<T>; 4],
}

impl<T: Real> KeypointTemplate<T> {
    pub fn new(kind: KeypointKind, l: T) -> Result<Self, GeometryError> {
        if !(l > T::zero()) {
            return Err(GeometryError::NonPositiveDistance);
        }
        let z = T::zero();
        let half = l * real::<T>(0.5);
        let points = match kind {
            KeypointKind::Box => [
                Vector3::new(z, z, z),
                Vector3::new(z, z, l),
                Vector3::new(-l, z, z),
                Vector3::new(-l, z, l),
            ],
            KeypointKind::Tetrahedron => [
                Vector3::new(z, z, z),
                Vector3::new(z, z, l),
                Vector3::new(-l, z, z),
                Vector3::new(-half, l / real::<T>(2.0).sqrt(), half),
            ],
            KeypointKind::Tail => [
                Vector3::new(z, z, z),
                Vector3::new(z, z, l),
                Vector3::new(-half, z, half),
                Vector3::new(-l, z, half),
            ],
        };
        Ok(Self { kind, canonical_distance: l, points })
    }

    pub fn scaled(&self, s: T) -> Result<Self, GeometryError> {
        Self::new(self.kind, self.canonical_distance * s)
    }

    pub fn is_planar(&self) -> bool {
        self.kind.is_planar()
    }

    pub fn plane_fit_residual(&self) -> T {
        plane_fit_residual(&self.points)
    }
}

/// Least-squares plane through `points`: centroid and unit normal.
pub fn fit_plane<T: Real>(points: &[Vector3<T>]) -> (Vector3<T>, Vector3<T>, [T; 3]) {
    let n = real::<T>(points.len() as f64);
    let centroid = points.iter().fold(Vector3::zeros(), |acc, p| acc + p) / n;
    let mut scatter = Matrix3::zeros();
    for p in points {
        let d = p - centroid;
        scatter += d * d.transpose();
    }
    let eig = scatter.symmetric_eigen();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let normal = eig.eigenvectors.column(order[0]).into_owned();
    let values = [
        eig.eigenvalues[order[0]],
        eig.eigenvalues[order[1]],
        eig.eigenvalues[order[2]],
    ];
    (centroid, normal, values)
}

/// Largest distance of any point from the best-fit plane.
pub fn plane_fit_residual<T: Real>(points: &[Vector3<T>]) -> T {
    let (centroid, normal, _) = fit_plane(points);
    points
        .iter()
        .map(|p| (p - centroid).dot(&normal).abs())
        .fold(T::zero(), |a, b| if b > a { b } else { a })
}
