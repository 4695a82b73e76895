//! Color as 8-bit RGB PNG, depth as 16-bit grayscale PNG in millimeters.

use std::io::Cursor;
use std::path::Path;

use image::{ImageBuffer, ImageFormat, Luma, Rgb, RgbImage};

use super::{write_atomic, FormatError, IoError};

fn encode(img: impl Into<image::DynamicImage>, path: &Path) -> Result<Vec<u8>, IoError> {
    let mut buf = Cursor::new(Vec::new());
    img.into()
        .write_to(&mut buf, ImageFormat::Png)
        .map_err(|e| IoError::Image { path: path.to_path_buf(), message: e.to_string() })?;
    Ok(buf.into_inner())
}

pub fn write_color(path: &Path, width: u32, height: u32, rgb: &[u8]) -> Result<(), IoError> {
    let img = RgbImage::from_raw(width, height, rgb.to_vec())
        .ok_or_else(|| IoError::Image { path: path.to_path_buf(), message: "buffer size mismatch".into() })?;
    write_atomic(path, &encode(img, path)?)
}

pub fn read_color(path: &Path) -> Result<RgbImage, IoError> {
    let img = image::open(path).map_err(|e| IoError::Image { path: path.to_path_buf(), message: e.to_string() })?;
    Ok(img.to_rgb8())
}

/// Meters to whole millimeters, saturating at the 16-bit range.
pub fn depth_to_mm(d: f64) -> u16 {
    if d.is_finite() && d > 0.0 {
        (d * 1000.0).round().min(u16::MAX as f64) as u16
    } else {
        0
    }
}

pub fn write_depth(path: &Path, width: u32, height: u32, depth: &[f64]) -> Result<(), IoError> {
    let data: Vec<u16> = depth.iter().map(|&d| depth_to_mm(d)).collect();
    let img: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_raw(width, height, data)
        .ok_or_else(|| IoError::Image { path: path.to_path_buf(), message: "buffer size mismatch".into() })?;
    write_atomic(path, &encode(img, path)?)
}

/// Depth in meters, row-major, 0 where nothing was hit.
pub fn read_depth(path: &Path) -> Result<(u32, u32, Vec<f64>), IoError> {
    let img = image::open(path).map_err(|e| IoError::Image { path: path.to_path_buf(), message: e.to_string() })?;
    let image::DynamicImage::ImageLuma16(img) = img else {
        return Err(IoError::Format { path: path.to_path_buf(), source: FormatError::new(0, "depth must be 16-bit gray") });
    };
    let (w, h) = img.dimensions();
    Ok((w, h, img.into_raw().into_iter().map(|mm| mm as f64 / 1000.0).collect()))
}

/// Marks a small cross; pixels outside the image are ignored.
pub fn draw_cross(img: &mut RgbImage, x: f64, y: f64, half: i64, color: [u8; 3]) {
    let (cx, cy) = (x.round() as i64, y.round() as i64);
    for d in -half..=half {
        for (px, py) in [(cx + d, cy), (cx, cy + d)] {
            if px >= 0 && py >= 0 && (px as u32) < img.width() && (py as u32) < img.height() {
                img.put_pixel(px as u32, py as u32, Rgb(color));
            }
        }
    }
}
