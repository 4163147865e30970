use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgproc::{ColorSpace, MultiChannelImage, TextonMap};

/// Number of cues: L, a, b and texton.
pub const NUM_CUES: usize = 4;

/// Histogram bin counts per cue, in the order L, a, b, texton.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinConfig(pub [usize; NUM_CUES]);

impl Default for BinConfig {
    fn default() -> Self {
        BinConfig([25, 25, 25, 32])
    }
}

impl BinConfig {
    /// Length of the concatenated per-scale histogram.
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// Start of each cue's slice inside the concatenated histogram.
    pub fn offsets(&self) -> [usize; NUM_CUES] {
        let mut out = [0; NUM_CUES];
        for c in 1..NUM_CUES {
            out[c] = out[c - 1] + self.0[c - 1];
        }
        out
    }

    pub fn slice(&self, cue: usize) -> std::ops::Range<usize> {
        let start = self.offsets()[cue];
        start..start + self.0[cue]
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.iter().any(|&b| b == 0 || b > u16::MAX as usize) {
            return Err(Error::InvalidParameter(format!(
                "bin counts {:?} must be in 1..=65535",
                self.0
            )));
        }
        Ok(())
    }
}

/// Uniform bin of a value in `[0, 1]`; 1.0 falls into the last bin.
pub fn quantize_value(v: f64, bins: usize) -> usize {
    ((v.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1)
}

/// Per-pixel discrete labels for the four cues.
#[derive(Clone, Debug, PartialEq)]
pub struct CueStack {
    pub width: usize,
    pub height: usize,
    pub bins: BinConfig,
    /// Row-major, one label per cue, each below its cue's bin count.
    pub labels: Vec<[u16; NUM_CUES]>,
}

impl CueStack {
    pub fn new(width: usize, height: usize, bins: BinConfig, labels: Vec<[u16; NUM_CUES]>) -> Result<Self> {
        bins.validate()?;
        if width == 0 || height == 0 || labels.len() != width * height {
            return Err(Error::Dimension(format!(
                "{} labels for a {width}x{height} cue stack",
                labels.len()
            )));
        }
        for l in &labels {
            for c in 0..NUM_CUES {
                if l[c] as usize >= bins.0[c] {
                    return Err(Error::OutOfRange(format!(
                        "cue {c} label {} >= {} bins",
                        l[c], bins.0[c]
                    )));
                }
            }
        }
        Ok(Self {
            width,
            height,
            bins,
            labels,
        })
    }

    pub fn label(&self, x: usize, y: usize) -> [u16; NUM_CUES] {
        self.labels[y * self.width + x]
    }
}

/// Bins each Lab channel uniformly over `[0, 1]`; texton labels pass through.
pub fn quantize_cues(lab: &MultiChannelImage, textons: &TextonMap, bins: BinConfig) -> Result<CueStack> {
    bins.validate()?;
    if lab.color_space() != ColorSpace::Lab {
        return Err(Error::ColorSpace {
            expected: "Lab",
            actual: lab.color_space().name(),
        });
    }
    if lab.width() != textons.width || lab.height() != textons.height {
        return Err(Error::Dimension(format!(
            "Lab image {}x{} vs texton map {}x{}",
            lab.width(),
            lab.height(),
            textons.width,
            textons.height
        )));
    }
    if textons.k > bins.0[3] {
        return Err(Error::Dimension(format!(
            "{} textons do not fit in {} texton bins",
            textons.k, bins.0[3]
        )));
    }
    let labels = lab
        .data()
        .chunks_exact(3)
        .zip(&textons.labels)
        .map(|(p, &t)| {
            [
                quantize_value(p[0], bins.0[0]) as u16,
                quantize_value(p[1], bins.0[1]) as u16,
                quantize_value(p[2], bins.0[2]) as u16,
                t,
            ]
        })
        .collect();
    CueStack::new(lab.width(), lab.height(), bins, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgproc::TextonCodebook;

    #[test]
    fn bin_edges() {
        assert_eq!(quantize_value(0.0, 25), 0);
        assert_eq!(quantize_value(1.0, 25), 24);
        assert_eq!(quantize_value(0.5, 25), 12);
        assert_eq!(quantize_value(0.04, 25), 1);
        assert_eq!(quantize_value(0.0399, 25), 0);
    }

    #[test]
    fn default_bins() {
        let b = BinConfig::default();
        assert_eq!(b.total(), 107);
        assert_eq!(b.offsets(), [0, 25, 50, 75]);
        assert_eq!(b.slice(3), 75..107);
    }

    fn texton_map(w: usize, h: usize, k: usize) -> TextonMap {
        TextonMap {
            width: w,
            height: h,
            k,
            labels: (0..w * h).map(|i| (i % k) as u16).collect(),
            codebook: TextonCodebook {
                centroids: vec![vec![0.0]; k],
            },
        }
    }

    #[test]
    fn quantizes_lab_and_passes_textons() {
        let lab = MultiChannelImage::new(2, 1, 3, vec![0.0, 0.5, 1.0, 0.2, 0.3, 0.99], ColorSpace::Lab).unwrap();
        let cues = quantize_cues(&lab, &texton_map(2, 1, 3), BinConfig::default()).unwrap();
        assert_eq!(cues.label(0, 0), [0, 12, 24, 0]);
        assert_eq!(cues.label(1, 0), [5, 7, 24, 1]);
    }

    #[test]
    fn dimension_mismatch() {
        let lab = MultiChannelImage::filled(3, 3, ColorSpace::Lab, 3, 0.5).unwrap();
        assert!(matches!(
            quantize_cues(&lab, &texton_map(2, 3, 2), BinConfig::default()),
            Err(Error::Dimension(_))
        ));
        let rgb = MultiChannelImage::filled(2, 3, ColorSpace::Rgb, 3, 0.5).unwrap();
        assert!(quantize_cues(&rgb, &texton_map(2, 3, 2), BinConfig::default()).is_err());
    }

    #[test]
    fn rejects_out_of_range_labels() {
        assert!(CueStack::new(1, 1, BinConfig([2, 2, 2, 2]), vec![[0, 0, 2, 0]]).is_err());
    }
}
