use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::Scene;
use super::raycast::ray_intersect;
use crate::geometry::{from_axes, rot_axis, CameraModel, Pose};

/// Camera distribution around the workspace center.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CameraConfig {
    pub radius: [f64; 2],
    /// Elevation above the table, degrees.
    pub elevation_deg: [f64; 2],
    pub look_at_jitter: f64,
    pub roll_jitter_deg: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self { radius: [0.6, 1.2], elevation_deg: [25.0, 70.0], look_at_jitter: 0.05, roll_jitter_deg: 5.0 }
    }
}

/// A camera placement; `pose` maps world points into the camera frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSample {
    pub pose: Pose,
}

impl CameraSample {
    /// Camera at `eye` looking at `target`, image x to the right of the
    /// horizon and y down, then rolled about the viewing axis.
    pub fn look_at(eye: &Vector3<f64>, target: &Vector3<f64>, roll: f64) -> Self {
        let z = (target - eye).normalize();
        let side = z.cross(&Vector3::z());
        let x = side.try_normalize(1e-12).unwrap_or_else(Vector3::x);
        let y = z.cross(&x);
        let spin = rot_axis(&z, roll);
        let cam_to_world = Pose::new(spin * from_axes(&x, &y, &z), *eye);
        Self { pose: cam_to_world.inverse() }
    }

    pub fn eye(&self) -> Vector3<f64> {
        self.pose.inverse().translation
    }

    /// Viewing direction in the world frame.
    pub fn forward(&self) -> Vector3<f64> {
        self.pose.rotation.row(2).transpose()
    }
}

pub fn sample_cameras(seed: u64, n: usize, cfg: &CameraConfig) -> Vec<CameraSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = |r: [f64; 2]| if r[1] > r[0] { rng.random_range(r[0]..=r[1]) } else { r[0] };
    (0..n)
        .map(|_| {
            let radius = u(cfg.radius);
            let elevation = u(cfg.elevation_deg).to_radians();
            let azimuth = u([0.0, std::f64::consts::TAU]);
            let jitter = loop {
                let j = Vector3::new(u([-1.0, 1.0]), u([-1.0, 1.0]), u([-1.0, 1.0]));
                if j.norm_squared() <= 1.0 {
                    break j * cfg.look_at_jitter;
                }
            };
            let roll = u([-cfg.roll_jitter_deg, cfg.roll_jitter_deg]).to_radians();
            let eye = Vector3::new(
                radius * elevation.cos() * azimuth.cos(),
                radius * elevation.cos() * azimuth.sin(),
                radius * elevation.sin(),
            );
            CameraSample::look_at(&eye, &jitter, roll)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderConfig {
    /// Half side of the square table top.
    pub table_half_size: f64,
    pub checker_size: f64,
    pub checker_albedo: [f64; 2],
    /// Direction the light travels, normalized on use.
    pub light_direction: [f64; 3],
    pub ambient: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            table_half_size: 0.6,
            checker_size: 0.02,
            checker_albedo: [0.35, 0.65],
            light_direction: [-0.3, 0.2, -1.0],
            ambient: 0.2,
        }
    }
}

/// What a pixel sees.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Surface {
    Background,
    Table,
    Object(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RenderedFrame {
    pub width: u32,
    pub height: u32,
    /// Row-major RGB.
    pub color: Vec<u8>,
    /// Row-major projective depth in meters, 0 where nothing is hit.
    pub depth: Vec<f64>,
    pub surface: Vec<Surface>,
}

impl RenderedFrame {
    pub fn depth_at(&self, x: u32, y: u32) -> f64 {
        self.depth[(y * self.width + x) as usize]
    }

    /// Depth at the pixel containing the continuous coordinate, if inside.
    pub fn depth_at_pixel(&self, p: &Vector2<f64>) -> Option<f64> {
        let (x, y) = (p.x.round(), p.y.round());
        (x >= 0.0 && y >= 0.0 && x < self.width as f64 && y < self.height as f64)
            .then(|| self.depth_at(x as u32, y as u32))
    }
}

/// Casts one pinhole ray per pixel center against the table and objects.
pub fn render(scene: &Scene, cam: &CameraModel, camera: &CameraSample, cfg: &RenderConfig) -> RenderedFrame {
    let cam_to_world = camera.pose.inverse();
    let inverses: Vec<Pose> = scene.objects.iter().map(|o| o.pose.inverse()).collect();
    let light = -Vector3::from(cfg.light_direction).normalize();
    let (w, h) = (cam.width as usize, cam.height as usize);
    let rows: Vec<(Vec<u8>, Vec<f64>, Vec<Surface>)> = (0..h)
        .into_par_iter()
        .map(|row| {
            let mut color = Vec::with_capacity(3 * w);
            let mut depth = Vec::with_capacity(w);
            let mut surface = Vec::with_capacity(w);
            for col in 0..w {
                let n = cam.normalize(&Vector2::new(col as f64, row as f64));
                let ray_cam = Vector3::new(n.x, n.y, 1.0);
                let dir_cam = ray_cam.normalize();
                let o = cam_to_world.translation;
                let d = cam_to_world.rotation * dir_cam;
                let mut best: Option<(f64, Vector3<f64>, Surface)> = None;
                if scene.table_z < o.z && d.z < 0.0 {
                    let t = (scene.table_z - o.z) / d.z;
                    let p = o + d * t;
                    if p.x.abs() <= cfg.table_half_size && p.y.abs() <= cfg.table_half_size {
                        best = Some((t, Vector3::z(), Surface::Table));
                    }
                }
                for (i, obj) in scene.objects.iter().enumerate() {
                    let lo = inverses[i].apply(&o);
                    let ld = inverses[i].rotation * d;
                    // Skip objects whose bounding ball the ray misses.
                    let b = lo.dot(&ld);
                    let r = obj.shape.bounding_radius();
                    if lo.norm_squared() - b * b > r * r + 1e-12 {
                        continue;
                    }
                    if let Some(hit) = ray_intersect(&obj.shape, &lo, &ld) {
                        if best.is_none_or(|(t, _, _)| hit.distance < t) {
                            best = Some((hit.distance, obj.pose.rotation * hit.normal, Surface::Object(i)));
                        }
                    }
                }
                match best {
                    None => {
                        color.extend_from_slice(&[0, 0, 0]);
                        depth.push(0.0);
                        surface.push(Surface::Background);
                    }
                    Some((t, normal, what)) => {
                        let p = o + d * t;
                        let albedo = match what {
                            Surface::Table => {
                                let cell = (p.x / cfg.checker_size).floor() + (p.y / cfg.checker_size).floor();
                                let a = cfg.checker_albedo[(cell.rem_euclid(2.0) as usize) & 1];
                                [a; 3]
                            }
                            Surface::Object(i) => scene.objects[i].color,
                            Surface::Background => unreachable!(),
                        };
                        let shade = cfg.ambient + (1.0 - cfg.ambient) * normal.dot(&light).max(0.0);
                        color.extend(albedo.map(|a| ((a * shade).clamp(0.0, 1.0) * 255.0).round() as u8));
                        depth.push(t * dir_cam.z);
                        surface.push(what);
                    }
                }
            }
            (color, depth, surface)
        })
        .collect();
    let mut frame = RenderedFrame {
        width: cam.width,
        height: cam.height,
        color: Vec::with_capacity(3 * w * h),
        depth: Vec::with_capacity(w * h),
        surface: Vec::with_capacity(w * h),
    };
    for (c, d, s) in rows {
        frame.color.extend(c);
        frame.depth.extend(d);
        frame.surface.extend(s);
    }
    frame
}
