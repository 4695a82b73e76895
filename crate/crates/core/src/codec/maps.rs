use ndarray::Array3;

use super::CodecError;

/// Dense label tensors at output-stride resolution, each `[channel, row, col]`.
///
/// Channel layout: `heatmap` and `width` have one channel per orientation
/// bin; `center_offset` is shared (x then y); `keypoint_offsets` has eight
/// channels per bin, `(dx, dy)` for each of the four keypoints in order.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelMaps {
    pub stride: u32,
    pub heatmap: Array3<f32>,
    pub center_offset: Array3<f32>,
    pub keypoint_offsets: Array3<f32>,
    pub width: Array3<f32>,
}

impl LabelMaps {
    pub fn zeros(bins: usize, height: usize, width: usize, stride: u32) -> Self {
        Self {
            stride,
            heatmap: Array3::zeros((bins, height, width)),
            center_offset: Array3::zeros((2, height, width)),
            keypoint_offsets: Array3::zeros((8 * bins, height, width)),
            width: Array3::zeros((bins, height, width)),
        }
    }

    pub fn bins(&self) -> usize {
        self.heatmap.dim().0
    }

    /// `(rows, cols)` of every map.
    pub fn size(&self) -> (usize, usize) {
        let (_, h, w) = self.heatmap.dim();
        (h, w)
    }

    pub fn validate(&self) -> Result<(), CodecError> {
        let (m, h, w) = self.heatmap.dim();
        let ok = self.center_offset.dim() == (2, h, w)
            && self.keypoint_offsets.dim() == (8 * m, h, w)
            && self.width.dim() == (m, h, w)
            && m > 0
            && self.stride > 0;
        if ok {
            Ok(())
        } else {
            Err(CodecError::ShapeMismatch)
        }
    }
}
