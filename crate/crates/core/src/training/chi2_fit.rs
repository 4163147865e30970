//! Logistic fit of the χ² fusion weights.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::Tolerance;
use crate::features::{half_disk_counts, normalize_pair, HalfDiskShape, ScaleConfig, NUM_CUES};
use crate::metric::{chi_square, sigmoid, ChiSquareModel};
use crate::pipeline::PreparedImage;

use super::sample::bootstrap_pixels;

const RIDGE: f64 = 1e-4;
const MAX_NEWTON: usize = 100;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// L2-regularized logistic regression by Newton's method. Returns the
/// intercept followed by one coefficient per feature.
pub fn logistic_regression(rows: &[Vec<f64>], labels: &[bool]) -> Result<Vec<f64>> {
    let Some(first) = rows.first() else {
        return Err(Error::InvalidParameter("no rows to fit".into()));
    };
    if rows.len() != labels.len() {
        return Err(Error::Dimension(format!("{} rows, {} labels", rows.len(), labels.len())));
    }
    let n_pos = labels.iter().filter(|&&y| y).count();
    if n_pos == 0 || n_pos == labels.len() {
        return Err(Error::Dataset("all samples have the same label; cannot fit weights".into()));
    }
    let d = first.len() + 1;
    let mut theta = vec![0.0; d];
    for _ in 0..MAX_NEWTON {
        let mut hess = vec![vec![0.0; d]; d];
        let mut grad = vec![0.0; d];
        for (row, &y) in rows.iter().zip(labels) {
            let x: Vec<f64> = std::iter::once(1.0).chain(row.iter().copied()).collect();
            let p = sigmoid(x.iter().zip(&theta).map(|(a, b)| a * b).sum());
            let r = f64::from(u8::from(y)) - p;
            let wgt = (p * (1.0 - p)).max(1e-12);
            for i in 0..d {
                grad[i] += r * x[i];
                for j in i..d {
                    hess[i][j] += wgt * x[i] * x[j];
                }
            }
        }
        for i in 0..d {
            for j in 0..i {
                hess[i][j] = hess[j][i];
            }
            if i > 0 {
                hess[i][i] += RIDGE;
                grad[i] -= RIDGE * theta[i];
            }
        }
        let step = solve(hess, grad).ok_or_else(|| Error::Dataset("singular logistic system".into()))?;
        let mut change: f64 = 0.0;
        for (t, s) in theta.iter_mut().zip(&step) {
            *t += s;
            change = change.max(s.abs());
        }
        if change < 1e-10 {
            break;
        }
    }
    Ok(theta)
}

/// Clamps coefficients at zero and rescales them to sum to one, as
/// `n_scales` rows of per-cue weights.
pub fn weights_from_coefficients(coef: &[f64], n_scales: usize) -> Result<ChiSquareModel> {
    if coef.len() != n_scales * NUM_CUES {
        return Err(Error::Dimension(format!("{} coefficients for {n_scales} scales", coef.len())));
    }
    let clamped: Vec<f64> = coef.iter().map(|c| c.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Dataset("no χ² distance correlates positively with boundaries".into()));
    }
    let rows = clamped
        .chunks_exact(NUM_CUES)
        .map(|c| std::array::from_fn(|i| c[i] / total))
        .collect();
    ChiSquareModel::learned(rows)
}

/// The `n_scales * 4` χ² distances at one pixel and orientation.
pub fn chi_square_features(image: &PreparedImage, cfg: &ScaleConfig, x: usize, y: usize, o: usize) -> Result<Vec<f64>> {
    let bins = image.cues.bins;
    let mut out = Vec::with_capacity(cfg.n_scales() * NUM_CUES);
    for &r in &cfg.radii {
        let shape = HalfDiskShape::new(r, cfg.orientation(o));
        let (u, v) = half_disk_counts(&image.cues, x, y, &shape);
        let (u, v) = normalize_pair(&u, &v);
        for c in 0..NUM_CUES {
            let sl = bins.slice(c);
            out.push(chi_square(&u[sl.clone()], &v[sl])?);
        }
    }
    Ok(out)
}

/// Fits the fusion weights on annotated pixels (positives) against random
/// pixels away from any annotation (negatives).
pub fn fit_chi_square_weights(
    images: &[PreparedImage],
    cfg: &ScaleConfig,
    tolerance: Tolerance,
    seed: u64,
) -> Result<ChiSquareModel> {
    if images.is_empty() {
        return Err(Error::Dataset("no images to fit χ² weights on".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut rows, mut labels) = (Vec::new(), Vec::new());
    for im in images {
        let tol = tolerance.pixels(im.width(), im.height());
        for p in bootstrap_pixels(&im.annotations, tol, cfg.n_orient, &mut rng)? {
            rows.push(chi_square_features(im, cfg, p.x, p.y, p.orientation)?);
            labels.push(p.positive);
        }
    }
    let theta = logistic_regression(&rows, &labels)?;
    weights_from_coefficients(&theta[1..], cfg.n_scales())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn one_informative_feature_dominates() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (mut rows, mut labels) = (Vec::new(), Vec::new());
        for i in 0..2000 {
            let y = i % 2 == 0;
            let mut row: Vec<f64> = (0..16).map(|_| rng.random_range(0.0..0.5)).collect();
            row[0] = if y { rng.random_range(0.3..0.8) } else { rng.random_range(0.0..0.4) };
            rows.push(row);
            labels.push(y);
        }
        let theta = logistic_regression(&rows, &labels).unwrap();
        let w = weights_from_coefficients(&theta[1..], 4).unwrap();
        assert!(w.weights[0][0] > 0.5, "{:?}", w.weights);
        let total: f64 = w.weights.iter().flatten().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_features_get_similar_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let noise = Normal::new(0.0, 0.15).unwrap();
        let (mut rows, mut labels) = (Vec::new(), Vec::new());
        for i in 0..8000 {
            let y = i % 2 == 0;
            let mean = if y { 0.4 } else { 0.3 };
            rows.push((0..16).map(|_| mean + noise.sample(&mut rng)).collect());
            labels.push(y);
        }
        let theta = logistic_regression(&rows, &labels).unwrap();
        let w = weights_from_coefficients(&theta[1..], 4).unwrap();
        let flat: Vec<f64> = w.weights.iter().flatten().copied().collect();
        let (lo, hi) = flat.iter().fold((f64::MAX, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(hi / lo < 1.5, "{flat:?}");
    }

    #[test]
    fn single_class_is_an_error() {
        let rows = vec![vec![0.1; 16]; 10];
        assert!(matches!(logistic_regression(&rows, &[true; 10]), Err(Error::Dataset(_))));
    }

    #[test]
    fn solver_matches_known_system() {
        let x = solve(vec![vec![2.0, 1.0], vec![1.0, 3.0]], vec![3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] - 1.4).abs() < 1e-12);
    }
}
