//! `KGNT` tensor files: magic, version byte, `u32` channels, height and
//! width, then little-endian `f32` data, channel-major.

use std::path::Path;

use ndarray::Array3;

use super::{write_atomic, FormatError, IoError};
use crate::codec::LabelMaps;

pub const MAGIC: &[u8; 4] = b"KGNT";
pub const VERSION: u8 = 1;
const HEADER: usize = 17;

pub fn encode_tensor(t: &Array3<f32>) -> Vec<u8> {
    let (c, h, w) = t.dim();
    let mut out = Vec::with_capacity(HEADER + 4 * t.len());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    for d in [c, h, w] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    // `iter` walks logical order, which is channel-major for any layout.
    for v in t.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_tensor(bytes: &[u8]) -> Result<Array3<f32>, FormatError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(FormatError::new(0, "bad magic, expected KGNT"));
    }
    match bytes.get(4) {
        Some(&VERSION) => {}
        Some(v) => return Err(FormatError::new(4, format!("unsupported version {v}"))),
        None => return Err(FormatError::new(4, "truncated header")),
    }
    if bytes.len() < HEADER {
        return Err(FormatError::new(bytes.len() as u64, "truncated header"));
    }
    let dim = |i: usize| u32::from_le_bytes(bytes[5 + 4 * i..9 + 4 * i].try_into().expect("4 bytes")) as usize;
    let (c, h, w) = (dim(0), dim(1), dim(2));
    let count = c
        .checked_mul(h)
        .and_then(|n| n.checked_mul(w))
        .filter(|n| n.checked_mul(4).is_some())
        .ok_or_else(|| FormatError::new(5, "tensor dimensions overflow"))?;
    let body = &bytes[HEADER..];
    if body.len() != 4 * count {
        let offset = HEADER + body.len().min(4 * count);
        let what = if body.len() < 4 * count { "truncated tensor data" } else { "trailing bytes after tensor data" };
        return Err(FormatError::new(offset as u64, what));
    }
    let data = body.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes"))).collect();
    Ok(Array3::from_shape_vec((c, h, w), data).expect("length checked"))
}

pub fn write_tensor(path: &Path, t: &Array3<f32>) -> Result<(), IoError> {
    write_atomic(path, &encode_tensor(t))
}

pub fn read_tensor(path: &Path) -> Result<Array3<f32>, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
    decode_tensor(&bytes).map_err(|e| IoError::Format { path: path.to_path_buf(), source: e })
}

/// File names of the four map families inside a frame directory.
pub const MAP_FILES: [&str; 4] = ["Y.kgnt", "O.kgnt", "J.kgnt", "S.kgnt"];

pub fn write_maps(dir: &Path, maps: &LabelMaps) -> Result<(), IoError> {
    let tensors = [&maps.heatmap, &maps.center_offset, &maps.keypoint_offsets, &maps.width];
    for (name, t) in MAP_FILES.iter().zip(tensors) {
        write_tensor(&dir.join(name), t)?;
    }
    Ok(())
}

/// Reads the four map files; the stride is whatever scales the maps up to
/// `image_size` `(width, height)`.
pub fn read_maps(dir: &Path, image_size: (u32, u32)) -> Result<LabelMaps, IoError> {
    let [y, o, j, s] = MAP_FILES.map(|n| read_tensor(&dir.join(n)));
    let (heatmap, center_offset, keypoint_offsets, width) = (y?, o?, j?, s?);
    let (_, rows, cols) = heatmap.dim();
    let bad = || IoError::Format { path: dir.to_path_buf(), source: FormatError::new(0, "map sizes do not fit the image") };
    if rows == 0 || cols == 0 || image_size.0 as usize % cols != 0 {
        return Err(bad());
    }
    let stride = image_size.0 / cols as u32;
    if image_size.1 as usize != rows * stride as usize {
        return Err(bad());
    }
    let maps = LabelMaps { stride, heatmap, center_offset, keypoint_offsets, width };
    maps.validate().map_err(|_| bad())?;
    Ok(maps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let t = Array3::from_shape_vec((2, 1, 3), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = encode_tensor(&t);
        assert_eq!(&b[..5], b"KGNT\x01");
        assert_eq!(&b[5..17], &[2, 0, 0, 0, 1, 0, 0, 0, 3, 0, 0, 0]);
        assert_eq!(&b[17..21], &1.0f32.to_le_bytes());
        assert_eq!(b.len(), 17 + 24);
    }

    #[test]
    fn malformed_inputs_report_offsets() {
        let t = Array3::<f32>::zeros((1, 2, 2));
        let good = encode_tensor(&t);
        let mut bad = good.clone();
        bad[0] = b'X';
        assert_eq!(decode_tensor(&bad).unwrap_err().offset, 0);
        let mut bad = good.clone();
        bad[4] = 9;
        assert_eq!(decode_tensor(&bad).unwrap_err().offset, 4);
        assert_eq!(decode_tensor(&good[..20]).unwrap_err().offset, 20);
        let mut long = good.clone();
        long.push(0);
        assert_eq!(decode_tensor(&long).unwrap_err().offset, good.len() as u64);
        assert_eq!(decode_tensor(&good[..9]).unwrap_err().offset, 9);
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(c in 1usize..4, h in 1usize..5, w in 1usize..5, seed in any::<u32>()) {
            let data: Vec<f32> = (0..c * h * w)
                .map(|i| f32::from_bits(seed.wrapping_mul(2654435761).wrapping_add(i as u32 * 40503) & 0x7f7f_ffff))
                .collect();
            let t = Array3::from_shape_vec((c, h, w), data).unwrap();
            let back = decode_tensor(&encode_tensor(&t)).unwrap();
            prop_assert!(t.iter().zip(back.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
            prop_assert_eq!(t.dim(), back.dim());
        }
    }
}
