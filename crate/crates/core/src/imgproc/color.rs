//! sRGB to CIELAB (D65) conversion with a fixed rescaling into `[0, 1]`.

use crate::error::{Error, Result};

use super::image::{ColorSpace, MultiChannelImage};

/// Lower clamp applied to a* and b* before rescaling.
pub const AB_MIN: f64 = -73.0;
/// Upper clamp applied to a* and b* before rescaling.
pub const AB_MAX: f64 = 95.0;

// Linear sRGB -> XYZ, D65.
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

// Reference white taken as the matrix row sums so that r=g=b maps exactly
// onto the neutral axis.
const WHITE: [f64; 3] = [
    RGB_TO_XYZ[0][0] + RGB_TO_XYZ[0][1] + RGB_TO_XYZ[0][2],
    RGB_TO_XYZ[1][0] + RGB_TO_XYZ[1][1] + RGB_TO_XYZ[1][2],
    RGB_TO_XYZ[2][0] + RGB_TO_XYZ[2][1] + RGB_TO_XYZ[2][2],
];

pub(crate) fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

pub(crate) fn linear_to_srgb(c: f64) -> f64 {
    if c <= 0.0031308 {
        c * 12.92
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

/// Relative luminance weights of linear sRGB.
pub(crate) const LUMINANCE: [f64; 3] = RGB_TO_XYZ[1];

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// Converts one sRGB triple in `[0, 1]` to unscaled `(L*, a*, b*)`.
pub fn srgb_to_lab(rgb: [f64; 3]) -> [f64; 3] {
    let lin = rgb.map(srgb_to_linear);
    let xyz: [f64; 3] =
        std::array::from_fn(|i| (0..3).map(|j| RGB_TO_XYZ[i][j] * lin[j]).sum::<f64>());
    let fx = lab_f(xyz[0] / WHITE[0]);
    let fy = lab_f(xyz[1] / WHITE[1]);
    let fz = lab_f(xyz[2] / WHITE[2]);
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// Maps unscaled Lab onto `[0, 1]`: L / 100, a* and b* clamped to
/// `[AB_MIN, AB_MAX]` then mapped affinely.
pub fn rescale_lab(lab: [f64; 3]) -> [f64; 3] {
    let ab = |v: f64| (v.clamp(AB_MIN, AB_MAX) - AB_MIN) / (AB_MAX - AB_MIN);
    [(lab[0] / 100.0).clamp(0.0, 1.0), ab(lab[1]), ab(lab[2])]
}

/// Converts an RGB image to rescaled Lab.
pub fn rgb_to_lab(img: &MultiChannelImage) -> Result<MultiChannelImage> {
    if img.color_space() != ColorSpace::Rgb {
        return Err(Error::ColorSpace {
            expected: "RGB",
            actual: img.color_space().name(),
        });
    }
    let data = img
        .data()
        .chunks_exact(3)
        .flat_map(|p| rescale_lab(srgb_to_lab([p[0], p[1], p[2]])))
        .collect();
    MultiChannelImage::new(img.width(), img.height(), 3, data, ColorSpace::Lab)
}
