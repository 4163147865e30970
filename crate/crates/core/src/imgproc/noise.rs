use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

use super::image::MultiChannelImage;

/// Variance used when the noisy-image protocol asks for default noise.
pub const DEFAULT_NOISE_VARIANCE: f64 = 0.01;

/// Adds i.i.d. zero-mean Gaussian noise of the given variance to every
/// channel value and clamps the result to `[0, 1]`.
pub fn add_gaussian_noise(
    img: &MultiChannelImage,
    variance: f64,
    seed: u64,
) -> Result<MultiChannelImage> {
    if !(variance >= 0.0 && variance.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise variance {variance} must be finite and >= 0"
        )));
    }
    if variance == 0.0 {
        return Ok(img.clone());
    }
    let normal = Normal::new(0.0, variance.sqrt())
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = img
        .data()
        .iter()
        .map(|&v| (v + normal.sample(&mut rng)).clamp(0.0, 1.0))
        .collect();
    MultiChannelImage::new(
        img.width(),
        img.height(),
        img.channels(),
        data,
        img.color_space(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgproc::image::ColorSpace;

    #[test]
    fn zero_variance_is_identity() {
        let img = MultiChannelImage::filled(5, 4, ColorSpace::Rgb, 3, 0.25).unwrap();
        assert_eq!(add_gaussian_noise(&img, 0.0, 1).unwrap(), img);
    }

    #[test]
    fn sample_variance_matches() {
        let img = MultiChannelImage::filled(128, 128, ColorSpace::Gray, 1, 0.5).unwrap();
        let out = add_gaussian_noise(&img, 0.01, 42).unwrap();
        let n = out.data().len() as f64;
        let mean = out.data().iter().sum::<f64>() / n;
        let var = out.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var - 0.01).abs() < 0.001, "variance {var}");
    }

    #[test]
    fn clamps_at_zero() {
        let img = MultiChannelImage::filled(50, 50, ColorSpace::Gray, 1, 0.0).unwrap();
        let out = add_gaussian_noise(&img, 0.01, 3).unwrap();
        assert!(out.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(out.data().iter().any(|&v| v > 0.0));
    }

    #[test]
    fn seeds_control_output() {
        let img = MultiChannelImage::filled(16, 16, ColorSpace::Gray, 1, 0.5).unwrap();
        let a = add_gaussian_noise(&img, 0.01, 1).unwrap();
        let b = add_gaussian_noise(&img, 0.01, 1).unwrap();
        let c = add_gaussian_noise(&img, 0.01, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn negative_variance_rejected() {
        let img = MultiChannelImage::filled(2, 2, ColorSpace::Gray, 1, 0.5).unwrap();
        assert!(add_gaussian_noise(&img, -0.1, 1).is_err());
        assert!(add_gaussian_noise(&img, f64::NAN, 1).is_err());
    }
}
