//! Cue preparation for whole splits and dataset-level scoring.

use rayon::prelude::*;

use crate::data::LoadedItem;
use crate::detect::{fit_codebook, prepare_cues, Detector, FeatureConfig};
use crate::error::Result;
use crate::eval::{default_thresholds, pr_curve, summarize, BinaryMap, EvalImage, EvalReport, Tolerance, DEFAULT_THRESHOLDS};
use crate::features::CueStack;
use crate::imgproc::{add_gaussian_noise, MultiChannelImage, TextonCodebook};
use crate::postproc::BoundaryMap;

/// An image reduced to its quantized cues, with its annotations.
#[derive(Clone, Debug)]
pub struct PreparedImage {
    pub id: String,
    pub cues: CueStack,
    pub annotations: Vec<BinaryMap>,
}

impl PreparedImage {
    pub fn width(&self) -> usize {
        self.cues.width
    }

    pub fn height(&self) -> usize {
        self.cues.height
    }
}

/// Universal texton codebook over a set of items.
pub fn corpus_codebook(items: &[LoadedItem], cfg: &FeatureConfig) -> Result<TextonCodebook> {
    let images: Vec<MultiChannelImage> = items.iter().map(|i| i.image.clone()).collect();
    fit_codebook(&images, cfg.n_textons, cfg.seed)
}

/// Cues of every item; with `noise > 0` each image first gets Gaussian noise
/// of that variance (seeded per item position).
pub fn prepare_images(
    items: &[LoadedItem],
    codebook: Option<&TextonCodebook>,
    cfg: &FeatureConfig,
    noise: f64,
    noise_seed: u64,
) -> Result<Vec<PreparedImage>> {
    items
        .par_iter()
        .enumerate()
        .map(|(i, item)| {
            let img = if noise > 0.0 {
                add_gaussian_noise(&item.image, noise, noise_seed.wrapping_add(i as u64))?
            } else {
                item.image.clone()
            };
            Ok(PreparedImage {
                id: item.id.clone(),
                cues: prepare_cues(&img, codebook, cfg)?,
                annotations: item.annotations.clone(),
            })
        })
        .collect()
}

/// Thinned maps of every image under `detector`.
pub fn detect_all(detector: &Detector, images: &[PreparedImage]) -> Result<Vec<BoundaryMap>> {
    images
        .par_iter()
        .map(|im| detector.detect_cues(&im.cues).map(|d| d.thin))
        .collect()
}

/// PR evaluation of precomputed thinned maps against the images' annotations.
pub fn evaluate_maps(maps: &[BoundaryMap], images: &[PreparedImage], tolerance: Tolerance, thresholds: &[f64]) -> Result<EvalReport> {
    let eval: Vec<EvalImage<'_>> = maps
        .iter()
        .zip(images)
        .map(|(m, im)| EvalImage {
            strength: &m.strength,
            width: m.width,
            height: m.height,
            annotations: &im.annotations,
        })
        .collect();
    summarize(pr_curve(&eval, thresholds, tolerance)?)
}

/// Detects and scores a split at the default thresholds.
pub fn evaluate_detector(detector: &Detector, images: &[PreparedImage], tolerance: Tolerance) -> Result<EvalReport> {
    let maps = detect_all(detector, images)?;
    evaluate_maps(&maps, images, tolerance, &default_thresholds(DEFAULT_THRESHOLDS))
}
