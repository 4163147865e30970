//! Labelled half-disk histogram pairs drawn from detections or annotations.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::error::{Error, Result};
use crate::eval::{match_boundaries, BinaryMap};
use crate::features::{half_disk_histograms, CueStack, ScaleConfig};
use crate::postproc::BoundaryMap;

/// Where a sample was taken.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleOrigin {
    pub image: String,
    pub x: usize,
    pub y: usize,
    pub orientation: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSample {
    /// `(U_s, V_s)` for every model scale, in model order.
    pub pairs: Vec<(Vec<f64>, Vec<f64>)>,
    pub positive: bool,
    pub origin: SampleOrigin,
}

/// A detection pixel with its match outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LabeledPixel {
    pub x: usize,
    pub y: usize,
    pub orientation: usize,
    pub positive: bool,
}

/// Thinned detections at or above `threshold`, labelled positive when
/// matched to at least one annotation within `tolerance` pixels.
pub fn label_detections(
    thin: &BoundaryMap,
    annotations: &[BinaryMap],
    tolerance: f64,
    threshold: f64,
) -> Result<Vec<LabeledPixel>> {
    if annotations.is_empty() {
        return Err(Error::InvalidParameter("no annotations to label detections against".into()));
    }
    let (w, h) = (thin.width, thin.height);
    let det = BinaryMap::from_threshold(&thin.strength, w, h, threshold.max(f64::MIN_POSITIVE));
    let mut matched = vec![false; w * h];
    for gt in annotations {
        let r = match_boundaries(&det, gt, tolerance)?;
        for (m, &hit) in matched.iter_mut().zip(&r.matched_candidate) {
            *m |= hit;
        }
    }
    Ok((0..w * h)
        .filter(|&i| det.data[i])
        .map(|i| LabeledPixel {
            x: i % w,
            y: i / w,
            orientation: thin.orientation[i] as usize,
            positive: matched[i],
        })
        .collect())
}

/// Cue stack of one image plus the scales a model uses.
#[derive(Clone, Copy, Debug)]
pub struct SampleContext<'a> {
    pub image: &'a str,
    pub cues: &'a CueStack,
    pub scales: &'a ScaleConfig,
    /// Radius indices, one per model scale.
    pub scale_indices: &'a [usize],
}

impl SampleContext<'_> {
    pub fn sample(&self, px: LabeledPixel) -> Result<TrainingSample> {
        let pairs = self
            .scale_indices
            .iter()
            .map(|&s| {
                half_disk_histograms(self.cues, px.x, px.y, px.orientation, s, self.scales).map(|p| (p.u, p.v))
            })
            .collect::<Result<_>>()?;
        Ok(TrainingSample {
            pairs,
            positive: px.positive,
            origin: SampleOrigin {
                image: self.image.to_string(),
                x: px.x,
                y: px.y,
                orientation: px.orientation,
            },
        })
    }
}

/// Randomly drops negatives until they number no more than the positives.
pub fn balance(pixels: Vec<LabeledPixel>, rng: &mut impl Rng) -> Vec<LabeledPixel> {
    let (pos, mut neg): (Vec<_>, Vec<_>) = pixels.into_iter().partition(|p| p.positive);
    if neg.len() > pos.len() {
        neg.shuffle(rng);
        neg.truncate(pos.len());
    }
    pos.into_iter().chain(neg).collect()
}

/// Labelled, class-balanced samples from one detection pass.
pub fn generate_samples(
    ctx: &SampleContext<'_>,
    thin: &BoundaryMap,
    annotations: &[BinaryMap],
    tolerance: f64,
    threshold: f64,
    rng: &mut impl Rng,
) -> Result<Vec<TrainingSample>> {
    let labeled = label_detections(thin, annotations, tolerance, threshold)?;
    balance(labeled, rng).into_iter().map(|p| ctx.sample(p)).collect()
}

/// Orientation index whose diameter best follows the annotation around
/// `(x, y)` (principal axis of annotated pixels within 2 px).
pub fn annotation_orientation(gt: &BinaryMap, x: usize, y: usize, n_orient: usize) -> usize {
    let (mut sxx, mut syy, mut sxy, mut n) = (0.0, 0.0, 0.0, 0.0);
    let (mut mx, mut my) = (0.0, 0.0);
    let mut pts = Vec::new();
    for dy in -2i64..=2 {
        for dx in -2i64..=2 {
            let (px, py) = (x as i64 + dx, y as i64 + dy);
            if px >= 0 && py >= 0 && (px as usize) < gt.width && (py as usize) < gt.height && gt.get(px as usize, py as usize) {
                pts.push((dx as f64, dy as f64));
                mx += dx as f64;
                my += dy as f64;
                n += 1.0;
            }
        }
    }
    if n < 2.0 {
        return 0;
    }
    mx /= n;
    my /= n;
    for (px, py) in pts {
        sxx += (px - mx) * (px - mx);
        syy += (py - my) * (py - my);
        sxy += (px - mx) * (py - my);
    }
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let step = std::f64::consts::PI / n_orient as f64;
    ((angle / step).round() as i64).rem_euclid(n_orient as i64) as usize
}

fn near_annotation(union: &BinaryMap, x: usize, y: usize, tolerance: f64) -> bool {
    let r = tolerance.ceil() as i64;
    let t2 = tolerance * tolerance;
    for dy in -r..=r {
        for dx in -r..=r {
            let (px, py) = (x as i64 + dx, y as i64 + dy);
            if (dx * dx + dy * dy) as f64 <= t2
                && px >= 0
                && py >= 0
                && (px as usize) < union.width
                && (py as usize) < union.height
                && union.get(px as usize, py as usize)
            {
                return true;
            }
        }
    }
    false
}

/// Cold-start pixels: every annotated pixel as a positive (oriented along
/// the annotation), and as many random pixels farther than `tolerance` from
/// any annotation, at random orientations, as negatives.
pub fn bootstrap_pixels(
    annotations: &[BinaryMap],
    tolerance: f64,
    n_orient: usize,
    rng: &mut impl Rng,
) -> Result<Vec<LabeledPixel>> {
    let first = annotations
        .first()
        .ok_or_else(|| Error::InvalidParameter("no annotations to bootstrap from".into()))?;
    let (w, h) = (first.width, first.height);
    let mut union = BinaryMap::empty(w, h);
    for a in annotations {
        if (a.width, a.height) != (w, h) {
            return Err(Error::Dimension("annotations differ in size".into()));
        }
        for (u, &v) in union.data.iter_mut().zip(&a.data) {
            *u |= v;
        }
    }
    let mut pixels = Vec::new();
    for a in annotations {
        for i in (0..w * h).filter(|&i| a.data[i]) {
            let (x, y) = (i % w, i / w);
            pixels.push(LabeledPixel {
                x,
                y,
                orientation: annotation_orientation(a, x, y, n_orient),
                positive: true,
            });
        }
    }
    let n_pos = pixels.len();
    let free: Vec<usize> = (0..w * h)
        .filter(|&i| !near_annotation(&union, i % w, i / w, tolerance))
        .collect();
    for &i in free.choose_multiple(rng, n_pos.min(free.len())) {
        pixels.push(LabeledPixel {
            x: i % w,
            y: i / w,
            orientation: rng.random_range(0..n_orient),
            positive: false,
        });
    }
    Ok(pixels)
}

/// [`bootstrap_pixels`] turned into samples.
pub fn bootstrap_samples(
    ctx: &SampleContext<'_>,
    annotations: &[BinaryMap],
    tolerance: f64,
    rng: &mut impl Rng,
) -> Result<Vec<TrainingSample>> {
    bootstrap_pixels(annotations, tolerance, ctx.scales.n_orient, rng)?
        .into_iter()
        .map(|p| ctx.sample(p))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::BinConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn map(w: usize, h: usize, on: &[(usize, usize)], value: f64) -> BoundaryMap {
        let mut strength = vec![0.0; w * h];
        for &(x, y) in on {
            strength[y * w + x] = value;
        }
        BoundaryMap {
            width: w,
            height: h,
            n_orient: 8,
            strength,
            orientation: vec![4; w * h],
            thinned: true,
        }
    }

    fn column(w: usize, h: usize, x: usize) -> BinaryMap {
        BinaryMap::new(w, h, (0..w * h).map(|i| i % w == x).collect()).unwrap()
    }

    #[test]
    fn perfect_detector_gives_only_positives() {
        let gt = column(12, 10, 5);
        let det = map(12, 10, &(0..10).map(|y| (5, y)).collect::<Vec<_>>(), 0.9);
        let l = label_detections(&det, &[gt], 1.0, 0.3).unwrap();
        assert_eq!(l.len(), 10);
        assert!(l.iter().all(|p| p.positive && p.orientation == 4));
    }

    #[test]
    fn threshold_and_empty_cases() {
        let gt = column(12, 10, 5);
        let weak = map(12, 10, &[(5, 3)], 0.2);
        assert!(label_detections(&weak, &[gt.clone()], 1.0, 0.3).unwrap().is_empty());
        assert!(label_detections(&weak, &[], 1.0, 0.3).is_err());
        let far = map(12, 10, &[(9, 3), (5, 4)], 0.5);
        let l = label_detections(&far, &[gt], 1.0, 0.3).unwrap();
        assert_eq!(l.iter().filter(|p| p.positive).count(), 1);
    }

    #[test]
    fn balancing_keeps_all_positives() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let px = |i: usize, positive| LabeledPixel {
            x: i,
            y: 0,
            orientation: 0,
            positive,
        };
        let pixels: Vec<_> = (0..3).map(|i| px(i, true)).chain((3..20).map(|i| px(i, false))).collect();
        let b = balance(pixels, &mut rng);
        assert_eq!(b.iter().filter(|p| p.positive).count(), 3);
        assert_eq!(b.len(), 6);
    }

    #[test]
    fn annotation_orientation_follows_lines() {
        let vertical = column(9, 9, 4);
        assert_eq!(annotation_orientation(&vertical, 4, 4, 8), 4);
        let horizontal = BinaryMap::new(9, 9, (0..81).map(|i| i / 9 == 4).collect()).unwrap();
        assert_eq!(annotation_orientation(&horizontal, 4, 4, 8), 0);
        let diag = BinaryMap::new(9, 9, (0..81).map(|i| i % 9 == i / 9).collect()).unwrap();
        assert_eq!(annotation_orientation(&diag, 4, 4, 8), 2);
    }

    #[test]
    fn bootstrap_is_balanced_and_clear_of_annotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bins = BinConfig([3, 3, 3, 3]);
        let cues = CueStack::new(16, 12, bins, vec![[0; 4]; 16 * 12]).unwrap();
        let scales = ScaleConfig::new(vec![2, 3], 8).unwrap();
        let ctx = SampleContext {
            image: "x",
            cues: &cues,
            scales: &scales,
            scale_indices: &[0, 1],
        };
        let gt = column(16, 12, 7);
        let s = bootstrap_samples(&ctx, &[gt], 2.0, &mut rng).unwrap();
        assert_eq!(s.len(), 24);
        for t in &s {
            assert_eq!(t.pairs.len(), 2);
            if t.positive {
                assert_eq!((t.origin.x, t.origin.orientation), (7, 4));
            } else {
                assert!(t.origin.x.abs_diff(7) > 2);
            }
        }
    }
}
