//! Training of the learned metric and of the χ² fusion weights, plus model files.

pub mod chi2_fit;
pub mod grad;
pub mod model_io;
pub mod sample;
pub mod sgd;

pub use chi2_fit::{fit_chi_square_weights, logistic_regression, weights_from_coefficients};
pub use grad::{gradients, log_loss, loss, sample_loss, sgd_step, ModelGradient, Objective};
pub use model_io::{check_compatible, load_any, load_model, save_chi_square, save_model, ChiSquareBundle, SavedModel};
pub use sample::{
    bootstrap_pixels, bootstrap_samples, generate_samples, label_detections, LabeledPixel, SampleContext,
    SampleOrigin, TrainingSample,
};
pub use sgd::{init_model, train, validation_f, EpochRecord, TrainConfig, TrainLog, TrainOutcome};

#[cfg(test)]
pub(crate) mod test_support {
    use rand::Rng;

    use super::{SampleOrigin, TrainingSample};
    use crate::features::{BinConfig, ScaleConfig};
    use crate::metric::{DistanceKernel, FeatureEcho, MetricModel, ScaleParams};

    pub fn random_model(kernel: DistanceKernel, n: usize, rng: &mut impl Rng) -> MetricModel {
        let bins = BinConfig([5, 4, 3, 6]);
        let m = bins.total();
        let cfg = ScaleConfig::new(vec![2, 4], 8).unwrap();
        MetricModel {
            kernel,
            sigma: rng.random_range(0.15..0.6),
            n,
            m,
            scales: (0..2)
                .map(|scale_index| ScaleParams {
                    scale_index,
                    alpha: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
                    beta: (0..n * m).map(|_| rng.random_range(-1.0..1.0)).collect(),
                })
                .collect(),
            features: FeatureEcho::new(bins, &cfg),
            textons: None,
        }
    }

    /// Per-cue L1-normalized random histogram.
    pub fn random_histogram(bins: BinConfig, rng: &mut impl Rng) -> Vec<f64> {
        let mut h = Vec::with_capacity(bins.total());
        for &b in &bins.0 {
            let raw: Vec<f64> = (0..b).map(|_| rng.random_range(0.0..1.0)).collect();
            let s: f64 = raw.iter().sum();
            h.extend(raw.iter().map(|v| v / s));
        }
        h
    }

    pub fn random_sample(model: &MetricModel, positive: bool, rng: &mut impl Rng) -> TrainingSample {
        let bins = model.features.bins;
        TrainingSample {
            pairs: (0..model.scales.len())
                .map(|_| (random_histogram(bins, rng), random_histogram(bins, rng)))
                .collect(),
            positive,
            origin: SampleOrigin {
                image: "random".into(),
                x: 0,
                y: 0,
                orientation: 0,
            },
        }
    }
}
