//! The SGD loop: detect on a training image with the current model, label
//! the detections, update on every sample, and stop on validation F.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::detect::lbm_responses;
use crate::error::{Error, Result};
use crate::eval::{default_thresholds, Tolerance, DEFAULT_THRESHOLDS};
use crate::imgproc::TextonCodebook;
use crate::metric::{DistanceKernel, FeatureEcho, MetricModel, ScaleParams};
use crate::pipeline::{evaluate_maps, PreparedImage};
use crate::postproc::{postprocess, BoundaryMap, DEFAULT_SMOOTH_RADIUS};

use super::grad::{sgd_step, Objective};
use super::sample::{bootstrap_samples, generate_samples, SampleContext, TrainingSample};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Output dimension of the logistic transform.
    pub n: usize,
    pub sigma: f64,
    pub kernel: DistanceKernel,
    /// Parameters start uniform on `[-init_range, init_range]`.
    pub init_range: f64,
    pub patience: usize,
    pub min_improvement: f64,
    pub max_epochs: usize,
    pub images_per_epoch: usize,
    /// Epochs that sample from annotations instead of detections.
    pub bootstrap_epochs: usize,
    /// Detection strength needed before a pixel becomes a sample.
    pub detection_threshold: f64,
    /// Sample sets of the most recent images that each update pass covers.
    pub replay_images: usize,
    pub objective: Objective,
    pub tolerance: Tolerance,
    pub smooth_radius: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            n: 16,
            sigma: 0.2,
            kernel: DistanceKernel::Rbf,
            init_range: 1.0,
            patience: 5,
            min_improvement: 0.001,
            max_epochs: 40,
            images_per_epoch: 20,
            bootstrap_epochs: 0,
            detection_threshold: 0.3,
            replay_images: 20,
            objective: Objective::PerScale,
            tolerance: Tolerance::default(),
            smooth_radius: DEFAULT_SMOOTH_RADIUS,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} must be finite and >= 0", self.learning_rate));
        }
        if self.n == 0 {
            return bad("N must be >= 1".into());
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma {} must be > 0", self.sigma));
        }
        if !(self.init_range >= 0.0 && self.init_range.is_finite()) {
            return bad(format!("init range {} must be >= 0", self.init_range));
        }
        if self.patience == 0 || self.images_per_epoch == 0 || self.replay_images == 0 {
            return bad("patience, images per epoch and replay images must be >= 1".into());
        }
        Ok(())
    }
}

/// A model with every parameter drawn uniformly from `[-r, r]`, one
/// parameter set per radius of `features`.
pub fn init_model(cfg: &TrainConfig, features: FeatureEcho, textons: Option<TextonCodebook>) -> Result<MetricModel> {
    cfg.validate()?;
    let m = features.bins.total();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let r = cfg.init_range;
    let mut draw = |len: usize| -> Vec<f64> {
        (0..len)
            .map(|_| if r > 0.0 { rng.random_range(-r..=r) } else { 0.0 })
            .collect()
    };
    let scales = (0..features.radii.len())
        .map(|scale_index| ScaleParams {
            scale_index,
            alpha: draw(cfg.n),
            beta: draw(cfg.n * m),
        })
        .collect();
    let model = MetricModel {
        kernel: cfg.kernel,
        sigma: cfg.sigma,
        n: cfg.n,
        m,
        scales,
        features,
        textons,
    };
    model.validate()?;
    Ok(model)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-sample loss; `None` for the initial evaluation.
    pub mean_loss: Option<f64>,
    pub val_f: f64,
    pub samples: usize,
    pub bootstrap: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    /// Loss of every sample just before its update, in order.
    pub sample_losses: Vec<f64>,
    /// `sample_losses` length at the end of each trained epoch.
    pub epoch_ends: Vec<usize>,
    /// Epoch of the returned model (0 = the initial model).
    pub best_epoch: usize,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,mean_loss,val_f\n");
        for e in &self.epochs {
            let loss = e.mean_loss.map_or(String::new(), |l| format!("{l:.6}"));
            let _ = writeln!(s, "{},{loss},{:.6}", e.epoch, e.val_f);
        }
        s
    }

    /// Moving average (window `window`) of the per-sample loss at the end of
    /// trained epoch `epoch` (1-based).
    pub fn smoothed_loss_at(&self, epoch: usize, window: usize) -> Option<f64> {
        let end = *self.epoch_ends.get(epoch.checked_sub(1)?)?;
        if end == 0 {
            return None;
        }
        let start = end.saturating_sub(window.max(1));
        let w = &self.sample_losses[start..end];
        Some(w.iter().sum::<f64>() / w.len() as f64)
    }

    /// Relative drop of the smoothed loss from the first epoch to the best
    /// one (or the last one when the initial model stayed best).
    pub fn loss_decrease(&self, window: usize) -> Option<f64> {
        let first = self.smoothed_loss_at(1, window)?;
        let target = if self.best_epoch == 0 { self.epoch_ends.len() } else { self.best_epoch };
        let at = self.smoothed_loss_at(target, window)?;
        Some((first - at) / first)
    }

    pub fn best_f(&self) -> f64 {
        self.epochs
            .iter()
            .find(|e| e.epoch == self.best_epoch)
            .map_or(0.0, |e| e.val_f)
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Best model on validation.
    pub model: MetricModel,
    /// Model after the last update.
    pub last_model: MetricModel,
    pub log: TrainLog,
    pub warnings: Vec<String>,
}

fn detect(model: &MetricModel, image: &PreparedImage, smooth_radius: f64) -> Result<BoundaryMap> {
    Ok(postprocess(&lbm_responses(&image.cues, model)?, smooth_radius).1)
}

/// Validation ODS F of `model`. Uses the validation annotations for scoring only.
pub fn validation_f(model: &MetricModel, val: &[PreparedImage], cfg: &TrainConfig) -> Result<f64> {
    use rayon::prelude::*;
    let maps: Vec<BoundaryMap> = val
        .par_iter()
        .map(|im| detect(model, im, cfg.smooth_radius))
        .collect::<Result<_>>()?;
    Ok(evaluate_maps(&maps, val, cfg.tolerance, &default_thresholds(DEFAULT_THRESHOLDS))?.ods)
}

/// Trains `init` on `train`, keeping the best model on `val`.
pub fn train(train: &[PreparedImage], val: &[PreparedImage], init: MetricModel, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    init.validate()?;
    if train.is_empty() {
        return Err(Error::Dataset("no training images".into()));
    }
    if val.is_empty() {
        return Err(Error::Dataset("no validation images".into()));
    }
    let mut warnings = Vec::new();
    let mut log = TrainLog::default();
    let f0 = validation_f(&init, val, cfg)?;
    log.epochs.push(EpochRecord {
        epoch: 0,
        mean_loss: None,
        val_f: f0,
        samples: 0,
        bootstrap: false,
    });
    if cfg.learning_rate == 0.0 {
        warnings.push("learning rate is 0; returning the initial model unchanged".into());
        return Ok(TrainOutcome {
            model: init.clone(),
            last_model: init,
            log,
            warnings,
        });
    }

    let scales = init.features.scale_config();
    let scale_indices: Vec<usize> = init.scales.iter().map(|p| p.scale_index).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_7a11);
    let mut model = init.clone();
    let mut best = init;
    let (mut best_f, mut ref_f, mut stale) = (f0, f0, 0usize);
    let mut order: Vec<usize> = Vec::new();
    let mut recent: std::collections::VecDeque<Vec<TrainingSample>> = Default::default();

    for epoch in 1..=cfg.max_epochs {
        let bootstrap = epoch <= cfg.bootstrap_epochs;
        let start = log.sample_losses.len();
        for _ in 0..cfg.images_per_epoch {
            if order.is_empty() {
                order = (0..train.len()).collect();
                order.shuffle(&mut rng);
            }
            let im = &train[order.pop().expect("refilled")];
            let ctx = SampleContext {
                image: &im.id,
                cues: &im.cues,
                scales: &scales,
                scale_indices: &scale_indices,
            };
            let tol = cfg.tolerance.pixels(im.width(), im.height());
            let mut samples = if bootstrap {
                Vec::new()
            } else {
                let thin = detect(&model, im, cfg.smooth_radius)?;
                generate_samples(&ctx, &thin, &im.annotations, tol, cfg.detection_threshold, &mut rng)?
            };
            if !samples.iter().any(|s| s.positive) {
                samples = bootstrap_samples(&ctx, &im.annotations, tol, &mut rng)?;
            }
            recent.push_back(samples);
            if recent.len() > cfg.replay_images {
                recent.pop_front();
            }
            let mut pass: Vec<&TrainingSample> = recent.iter().flatten().collect();
            pass.shuffle(&mut rng);
            for (k, s) in pass.into_iter().enumerate() {
                let l = sgd_step(&mut model, s, cfg.objective, cfg.learning_rate)?;
                if !l.is_finite() || model.scales.iter().any(|p| p.alpha.iter().chain(&p.beta).any(|v| !v.is_finite())) {
                    return Err(Error::Diverged(format!(
                        "epoch {epoch}, image {}, sample {k} at ({}, {}): loss {l}",
                        im.id, s.origin.x, s.origin.y
                    )));
                }
                log.sample_losses.push(l);
            }
        }
        let n = log.sample_losses.len() - start;
        log.epoch_ends.push(log.sample_losses.len());
        let mean_loss = if n > 0 {
            Some(log.sample_losses[start..].iter().sum::<f64>() / n as f64)
        } else {
            None
        };
        let f = validation_f(&model, val, cfg)?;
        log.epochs.push(EpochRecord {
            epoch,
            mean_loss,
            val_f: f,
            samples: n,
            bootstrap,
        });
        if f > best_f {
            best_f = f;
            best = model.clone();
            log.best_epoch = epoch;
        }
        if f >= ref_f + cfg.min_improvement {
            ref_f = f;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    Ok(TrainOutcome {
        model: best,
        last_model: model,
        log,
        warnings,
    })
}
