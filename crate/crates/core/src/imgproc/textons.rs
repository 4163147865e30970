//! Texton assignment: k-means over per-pixel filter-bank descriptors.
//!
//! The descriptor of a pixel is the oriented energy `sqrt(even^2 + odd^2)` of
//! every even/odd pair in the bank, followed by the signed even and
//! center-surround responses. Energies keep a periodic texture together
//! across stripe phases; the signed terms tell the bright side of a step
//! from its dark side.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::filters::{FilterBank, KernelKind};
use super::image::{ColorSpace, MultiChannelImage};

/// Maximum number of pixels fed to k-means; the rest are only assigned.
pub const MAX_KMEANS_SAMPLES: usize = 50_000;
pub const KMEANS_MAX_ITERS: usize = 50;
/// Independent seedings; the run with the lowest SSE is kept.
pub const KMEANS_RESTARTS: usize = 3;
pub const DEFAULT_TEXTONS: usize = 32;
/// Scale of the energy terms relative to the signed ones.
pub const ENERGY_WEIGHT: f64 = 1.0;

/// K centroids in descriptor space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextonCodebook {
    pub centroids: Vec<Vec<f64>>,
}

/// Per-pixel texton labels.
#[derive(Clone, Debug, PartialEq)]
pub struct TextonMap {
    pub width: usize,
    pub height: usize,
    pub k: usize,
    pub labels: Vec<u16>,
    pub codebook: TextonCodebook,
}

/// Row-major `(pixel, descriptor)` matrix for a grayscale image.
pub fn texton_descriptors(gray: &MultiChannelImage, bank: &FilterBank) -> Result<Vec<Vec<f64>>> {
    let responses = bank.responses(gray)?;
    let n = gray.width() * gray.height();
    let mut planes: Vec<Vec<f64>> = Vec::new();
    let mut signed: Vec<Vec<f64>> = Vec::new();
    let mut i = 0;
    while i < bank.kernels.len() {
        let k = &bank.kernels[i];
        match k.kind {
            KernelKind::Even
                if i + 1 < bank.kernels.len() && bank.kernels[i + 1].kind == KernelKind::Odd =>
            {
                let (e, o) = (&responses[i], &responses[i + 1]);
                planes.push(e.iter().zip(o).map(|(a, b)| ENERGY_WEIGHT * a.hypot(*b)).collect());
                signed.push(e.clone());
                i += 2;
            }
            _ => {
                signed.push(responses[i].clone());
                i += 1;
            }
        }
    }
    planes.extend(signed);
    Ok((0..n)
        .map(|p| planes.iter().map(|plane| plane[p]).collect())
        .collect())
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl TextonCodebook {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn dim(&self) -> usize {
        self.centroids.first().map_or(0, Vec::len)
    }

    /// Best of [`KMEANS_RESTARTS`] k-means++ seeded Lloyd runs on at most
    /// [`MAX_KMEANS_SAMPLES`] randomly chosen descriptors.
    pub fn fit(descriptors: &[Vec<f64>], k: usize, seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!("texton count {k} must be >= 2")));
        }
        if k > descriptors.len() {
            return Err(Error::InvalidParameter(format!(
                "texton count {k} exceeds {} samples",
                descriptors.len()
            )));
        }
        if k > u16::MAX as usize {
            return Err(Error::InvalidParameter(format!("texton count {k} too large")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sample: Vec<&[f64]> = if descriptors.len() > MAX_KMEANS_SAMPLES {
            rand::seq::index::sample(&mut rng, descriptors.len(), MAX_KMEANS_SAMPLES)
                .into_iter()
                .map(|i| descriptors[i].as_slice())
                .collect()
        } else {
            descriptors.iter().map(Vec::as_slice).collect()
        };

        let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
        for _ in 0..KMEANS_RESTARTS {
            let (sse, centroids) = kmeans_once(&sample, k, &mut rng);
            if best.as_ref().is_none_or(|(b, _)| sse < *b) {
                best = Some((sse, centroids));
            }
        }
        let centroids = best.expect("at least one restart").1;
        Ok(TextonCodebook { centroids })
    }

    /// Labels each descriptor with its nearest centroid (lowest index on ties).
    pub fn assign(&self, descriptors: &[Vec<f64>]) -> Vec<u16> {
        descriptors
            .iter()
            .map(|d| nearest_centroid(&self.centroids, d) as u16)
            .collect()
    }

    /// Convenience: descriptors of `gray` assigned to this codebook.
    pub fn texton_map(&self, gray: &MultiChannelImage, bank: &FilterBank) -> Result<TextonMap> {
        let desc = texton_descriptors(gray, bank)?;
        if desc.first().map(Vec::len) != Some(self.dim()) {
            return Err(Error::Dimension(format!(
                "codebook dimension {} does not match filter bank descriptors",
                self.dim()
            )));
        }
        Ok(TextonMap {
            width: gray.width(),
            height: gray.height(),
            k: self.k(),
            labels: self.assign(&desc),
            codebook: self.clone(),
        })
    }
}

/// One k-means++ seeded Lloyd run; returns the final SSE and centroids.
fn kmeans_once(sample: &[&[f64]], k: usize, rng: &mut ChaCha8Rng) -> (f64, Vec<Vec<f64>>) {
    // k-means++ seeding
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(sample[rng.random_range(0..sample.len())].to_vec());
    let mut nearest: Vec<f64> = sample.iter().map(|s| sq_dist(s, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = sample.len() - 1;
            for (i, d) in nearest.iter().enumerate() {
                if target < *d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            // all points coincide with existing centroids
            rng.random_range(0..sample.len())
        };
        let c = sample[next].to_vec();
        for (n, s) in nearest.iter_mut().zip(sample) {
            *n = n.min(sq_dist(s, &c));
        }
        centroids.push(c);
    }

    let dim = centroids[0].len();
    let mut assignment = vec![usize::MAX; sample.len()];
    for _ in 0..KMEANS_MAX_ITERS {
        let mut changed = false;
        for (a, s) in assignment.iter_mut().zip(sample) {
            let best = nearest_centroid(&centroids, s);
            if *a != best {
                *a = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (a, s) in assignment.iter().zip(sample) {
            counts[*a] += 1;
            for (acc, v) in sums[*a].iter_mut().zip(s.iter()) {
                *acc += v;
            }
        }
        for ((c, sum), n) in centroids.iter_mut().zip(sums).zip(counts) {
            // empty clusters keep their previous centroid
            if n > 0 {
                *c = sum.into_iter().map(|v| v / n as f64).collect();
            }
        }
    }
    let sse = sample
        .iter()
        .map(|s| sq_dist(s, &centroids[nearest_centroid(&centroids, s)]))
        .sum();
    (sse, centroids)
}

fn nearest_centroid(centroids: &[Vec<f64>], v: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(c, v);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Clusters the filter-bank descriptors of one grayscale image into `k` textons.
pub fn compute_textons(
    gray: &MultiChannelImage,
    bank: &FilterBank,
    k: usize,
    seed: u64,
) -> Result<TextonMap> {
    if gray.color_space() != ColorSpace::Gray {
        return Err(Error::ColorSpace {
            expected: "Gray",
            actual: gray.color_space().name(),
        });
    }
    let desc = texton_descriptors(gray, bank)?;
    let codebook = TextonCodebook::fit(&desc, k, seed)?;
    let labels = codebook.assign(&desc);
    Ok(TextonMap {
        width: gray.width(),
        height: gray.height(),
        k,
        labels,
        codebook,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgproc::filters::make_filter_bank;

    fn bank() -> FilterBank {
        make_filter_bank(8, &[1.4, 2.8]).unwrap()
    }

    /// Left half vertical stripes, right half horizontal stripes, period 6.
    fn two_gratings(w: usize, h: usize) -> MultiChannelImage {
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let phase = if x < w / 2 { x } else { y };
                data.push(if phase % 6 < 3 { 0.2 } else { 0.8 });
            }
        }
        MultiChannelImage::new(w, h, 1, data, ColorSpace::Gray).unwrap()
    }

    #[test]
    fn constant_image_single_label() {
        let img = MultiChannelImage::filled(24, 24, ColorSpace::Gray, 1, 0.3).unwrap();
        let t = compute_textons(&img, &bank(), 4, 7).unwrap();
        assert!(t.labels.iter().all(|&l| l == t.labels[0]));
    }

    #[test]
    fn gratings_separate_with_two_textons() {
        let (w, h) = (64, 64);
        let img = two_gratings(w, h);
        let t = compute_textons(&img, &bank(), 2, 3).unwrap();
        // pixels at least 10 px from the vertical border and 8 px from the frame
        let mut counts = [[0usize; 2]; 2];
        for y in 8..h - 8 {
            for x in 8..w - 8 {
                if (x as isize - (w / 2) as isize).abs() < 10 {
                    continue;
                }
                let side = usize::from(x >= w / 2);
                counts[side][t.labels[y * w + x] as usize] += 1;
            }
        }
        let majority = |c: [usize; 2]| c[0].max(c[1]);
        let total: usize = counts.iter().flatten().sum();
        let purity = (majority(counts[0]) + majority(counts[1])) as f64 / total as f64;
        let left_label = usize::from(counts[0][1] > counts[0][0]);
        let right_label = usize::from(counts[1][1] > counts[1][0]);
        assert_ne!(left_label, right_label);
        assert!(purity >= 0.95, "purity {purity}");
    }

    #[test]
    fn deterministic_given_seed() {
        let img = two_gratings(40, 40);
        let a = compute_textons(&img, &bank(), 5, 11).unwrap();
        let b = compute_textons(&img, &bank(), 5, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn k_bounds() {
        let img = MultiChannelImage::filled(2, 2, ColorSpace::Gray, 1, 0.3).unwrap();
        assert!(compute_textons(&img, &bank(), 5, 0).is_err());
        assert!(compute_textons(&img, &bank(), 1, 0).is_err());
    }

    #[test]
    fn labels_within_range() {
        let img = two_gratings(32, 32);
        let t = compute_textons(&img, &bank(), 6, 1).unwrap();
        assert!(t.labels.iter().all(|&l| (l as usize) < t.k));
        assert!(t.codebook.centroids.iter().flatten().all(|v| v.is_finite()));
    }
}
