//! Half-disk histogram pooling.
//!
//! [`half_disk_histograms`] is the per-pixel definition. [`HalfDiskPooler`]
//! produces the same counts for whole rows by sliding each half-disk one
//! pixel at a time, touching only the two ends of every row span.

use rayon::prelude::*;

use crate::error::{Error, Result};

use super::cues::{BinConfig, CueStack, NUM_CUES};
use super::geometry::{shapes_for, HalfDiskShape, RowSpan, ScaleConfig, Side};

const PAD_LABEL: u16 = u16::MAX;

/// Pair of concatenated, per-cue L1-normalized histograms for one
/// `(pixel, orientation, scale)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfDiskPair {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub x: usize,
    pub y: usize,
    pub orientation: usize,
    pub scale: usize,
}

/// Raw bin counts of one half-disk; `n` is the number of in-image pixels pooled.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HalfCounts {
    pub counts: Vec<u32>,
    pub n: u32,
}

impl HalfCounts {
    fn zeros(m: usize) -> Self {
        HalfCounts {
            counts: vec![0; m],
            n: 0,
        }
    }

    /// Every cue slice is divided by the pooled pixel count, so each slice
    /// sums to one.
    pub fn normalized(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

/// Normalizes a pair of counts. A half with no in-image pixels takes the
/// other half's histogram, so image borders never look like boundaries.
pub fn normalize_pair(u: &HalfCounts, v: &HalfCounts) -> (Vec<f64>, Vec<f64>) {
    match (u.n, v.n) {
        (0, 0) => panic!("half-disk pair with no pixels"),
        (0, _) => {
            let v = v.normalized();
            (v.clone(), v)
        }
        (_, 0) => {
            let u = u.normalized();
            (u.clone(), u)
        }
        _ => (u.normalized(), v.normalized()),
    }
}

fn check_indices(cfg: &ScaleConfig, orient: usize, scale: usize) -> Result<()> {
    if orient >= cfg.n_orient {
        return Err(Error::OutOfRange(format!(
            "orientation {orient} >= {}",
            cfg.n_orient
        )));
    }
    if scale >= cfg.n_scales() {
        return Err(Error::OutOfRange(format!(
            "scale {scale} >= {}",
            cfg.n_scales()
        )));
    }
    Ok(())
}

fn accumulate_spans(
    cues: &CueStack,
    offsets: &[usize; NUM_CUES],
    x: usize,
    y: usize,
    spans: &[RowSpan],
    out: &mut HalfCounts,
) {
    let (w, h) = (cues.width as i64, cues.height as i64);
    for span in spans {
        let py = y as i64 + span.dy as i64;
        if py < 0 || py >= h {
            continue;
        }
        let lo = (x as i64 + span.lo as i64).max(0);
        let hi = (x as i64 + span.hi as i64).min(w - 1);
        for px in lo..=hi {
            let l = cues.labels[(py * w + px) as usize];
            for c in 0..NUM_CUES {
                out.counts[offsets[c] + l[c] as usize] += 1;
            }
            out.n += 1;
        }
    }
}

/// Raw counts of the U and V halves at one pixel.
pub fn half_disk_counts(
    cues: &CueStack,
    x: usize,
    y: usize,
    shape: &HalfDiskShape,
) -> (HalfCounts, HalfCounts) {
    let m = cues.bins.total();
    let offsets = cues.bins.offsets();
    let mut u = HalfCounts::zeros(m);
    let mut v = HalfCounts::zeros(m);
    accumulate_spans(cues, &offsets, x, y, &shape.u, &mut u);
    accumulate_spans(cues, &offsets, x, y, &shape.v, &mut v);
    (u, v)
}

/// Histogram pair pooled over the two half-disks at `(x, y)`.
pub fn half_disk_histograms(
    cues: &CueStack,
    x: usize,
    y: usize,
    orient: usize,
    scale: usize,
    cfg: &ScaleConfig,
) -> Result<HalfDiskPair> {
    cfg.validate()?;
    check_indices(cfg, orient, scale)?;
    if x >= cues.width || y >= cues.height {
        return Err(Error::OutOfRange(format!(
            "pixel ({x}, {y}) outside {}x{}",
            cues.width, cues.height
        )));
    }
    let shape = HalfDiskShape::new(cfg.radii[scale], cfg.orientation(orient));
    let (u, v) = half_disk_counts(cues, x, y, &shape);
    let (u, v) = normalize_pair(&u, &v);
    Ok(HalfDiskPair {
        u,
        v,
        x,
        y,
        orientation: orient,
        scale,
    })
}

/// Row-sliding half-disk pooler over a padded copy of the cue labels.
pub struct HalfDiskPooler<'a> {
    cues: &'a CueStack,
    cfg: ScaleConfig,
    shapes: Vec<Vec<HalfDiskShape>>,
    pad: usize,
    pw: usize,
    padded: Vec<[u16; NUM_CUES]>,
}

impl<'a> HalfDiskPooler<'a> {
    pub fn new(cues: &'a CueStack, cfg: &ScaleConfig) -> Result<Self> {
        cfg.validate()?;
        let pad = cfg.max_radius() as usize;
        let (w, h) = (cues.width, cues.height);
        let pw = w + 2 * pad;
        let ph = h + 2 * pad;
        let offsets = cues.bins.offsets();
        let mut padded = vec![[PAD_LABEL; NUM_CUES]; pw * ph];
        for y in 0..h {
            for x in 0..w {
                let l = cues.labels[y * w + x];
                padded[(y + pad) * pw + x + pad] =
                    std::array::from_fn(|c| (offsets[c] + l[c] as usize) as u16);
            }
        }
        Ok(HalfDiskPooler {
            cues,
            cfg: cfg.clone(),
            shapes: shapes_for(cfg),
            pad,
            pw,
            padded,
        })
    }

    pub fn config(&self) -> &ScaleConfig {
        &self.cfg
    }

    pub fn bins(&self) -> BinConfig {
        self.cues.bins
    }

    pub fn shape(&self, orient: usize, scale: usize) -> &HalfDiskShape {
        &self.shapes[orient][scale]
    }

    #[inline]
    fn add(&self, counts: &mut HalfCounts, px: usize, py: usize) {
        let l = &self.padded[py * self.pw + px];
        if l[0] != PAD_LABEL {
            for &b in l {
                counts.counts[b as usize] += 1;
            }
            counts.n += 1;
        }
    }

    #[inline]
    fn remove(&self, counts: &mut HalfCounts, px: usize, py: usize) {
        let l = &self.padded[py * self.pw + px];
        if l[0] != PAD_LABEL {
            for &b in l {
                counts.counts[b as usize] -= 1;
            }
            counts.n -= 1;
        }
    }

    /// Calls `visit(x, u, v)` for every pixel of row `y`, left to right.
    pub fn scan_row(
        &self,
        y: usize,
        orient: usize,
        scale: usize,
        mut visit: impl FnMut(usize, &HalfCounts, &HalfCounts),
    ) {
        let shape = &self.shapes[orient][scale];
        let m = self.cues.bins.total();
        let mut u = HalfCounts::zeros(m);
        let mut v = HalfCounts::zeros(m);
        let cy = (y + self.pad) as i64;
        let cx0 = self.pad as i64;
        for (side, acc) in [(Side::U, &mut u), (Side::V, &mut v)] {
            for span in shape.spans(side) {
                let py = (cy + span.dy as i64) as usize;
                for dx in span.lo..=span.hi {
                    self.add(acc, (cx0 + dx as i64) as usize, py);
                }
            }
        }
        visit(0, &u, &v);
        for x in 1..self.cues.width {
            let cx = cx0 + x as i64;
            for (side, acc) in [(Side::U, &mut u), (Side::V, &mut v)] {
                for span in shape.spans(side) {
                    let py = (cy + span.dy as i64) as usize;
                    self.remove(acc, (cx - 1 + span.lo as i64) as usize, py);
                    self.add(acc, (cx + span.hi as i64) as usize, py);
                }
            }
            visit(x, &u, &v);
        }
    }
}

/// Counts for every `(pixel, orientation, scale)`, normalized on access.
#[derive(Clone, Debug)]
pub struct FeatureStack {
    pub width: usize,
    pub height: usize,
    pub cfg: ScaleConfig,
    pub bins: BinConfig,
    // per record: u counts (m), v counts (m), nu, nv
    records: Vec<u16>,
}

impl FeatureStack {
    fn record_len(&self) -> usize {
        2 * self.bins.total() + 2
    }

    fn record_index(&self, x: usize, y: usize, orient: usize, scale: usize) -> usize {
        ((y * self.width + x) * self.cfg.n_orient + orient) * self.cfg.n_scales() + scale
    }

    /// Number of stored pairs: width * height * n_orient * n_scales.
    pub fn len(&self) -> usize {
        self.records.len() / self.record_len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn counts(&self, x: usize, y: usize, orient: usize, scale: usize) -> (HalfCounts, HalfCounts) {
        let m = self.bins.total();
        let start = self.record_index(x, y, orient, scale) * self.record_len();
        let rec = &self.records[start..start + self.record_len()];
        let half = |counts: &[u16], n: u16| HalfCounts {
            counts: counts.iter().map(|&c| c as u32).collect(),
            n: n as u32,
        };
        (
            half(&rec[..m], rec[2 * m]),
            half(&rec[m..2 * m], rec[2 * m + 1]),
        )
    }

    pub fn pair(&self, x: usize, y: usize, orient: usize, scale: usize) -> Result<HalfDiskPair> {
        check_indices(&self.cfg, orient, scale)?;
        if x >= self.width || y >= self.height {
            return Err(Error::OutOfRange(format!("pixel ({x}, {y})")));
        }
        let (u, v) = self.counts(x, y, orient, scale);
        let (u, v) = normalize_pair(&u, &v);
        Ok(HalfDiskPair {
            u,
            v,
            x,
            y,
            orientation: orient,
            scale,
        })
    }
}

/// Pools half-disk histograms at every pixel, orientation and scale.
pub fn extract_feature_stack(cues: &CueStack, cfg: &ScaleConfig) -> Result<FeatureStack> {
    if cfg.max_radius() > 140 {
        return Err(Error::InvalidParameter(format!(
            "radius {} too large for a stored feature stack",
            cfg.max_radius()
        )));
    }
    let pooler = HalfDiskPooler::new(cues, cfg)?;
    let m = cues.bins.total();
    let rec = 2 * m + 2;
    let (w, no, ns) = (cues.width, cfg.n_orient, cfg.n_scales());
    let rows: Vec<Vec<u16>> = (0..cues.height)
        .into_par_iter()
        .map(|y| {
            let mut row = vec![0u16; w * no * ns * rec];
            for o in 0..no {
                for s in 0..ns {
                    pooler.scan_row(y, o, s, |x, u, v| {
                        let start = ((x * no + o) * ns + s) * rec;
                        let r = &mut row[start..start + rec];
                        for (dst, &c) in r[..m].iter_mut().zip(&u.counts) {
                            *dst = c as u16;
                        }
                        for (dst, &c) in r[m..2 * m].iter_mut().zip(&v.counts) {
                            *dst = c as u16;
                        }
                        r[2 * m] = u.n as u16;
                        r[2 * m + 1] = v.n as u16;
                    });
                }
            }
            row
        })
        .collect();
    Ok(FeatureStack {
        width: cues.width,
        height: cues.height,
        cfg: cfg.clone(),
        bins: cues.bins,
        records: rows.concat(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cues(w: usize, h: usize, bins: BinConfig, seed: u64) -> CueStack {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels = (0..w * h)
            .map(|_| std::array::from_fn(|c| rng.random_range(0..bins.0[c]) as u16))
            .collect();
        CueStack::new(w, h, bins, labels).unwrap()
    }

    fn constant_cues(w: usize, h: usize, label: [u16; 4]) -> CueStack {
        CueStack::new(w, h, BinConfig::default(), vec![label; w * h]).unwrap()
    }

    #[test]
    fn homogeneous_region_gives_identical_indicators() {
        let cues = constant_cues(16, 16, [3, 4, 5, 6]);
        let cfg = ScaleConfig::default();
        let p = half_disk_histograms(&cues, 8, 8, 2, 1, &cfg).unwrap();
        assert_eq!(p.u, p.v);
        let offs = cues.bins.offsets();
        for (c, &l) in [3usize, 4, 5, 6].iter().enumerate() {
            assert_eq!(p.u[offs[c] + l], 1.0);
        }
        assert_eq!(p.u.iter().sum::<f64>(), 4.0);
    }

    #[test]
    fn vertical_step_separates_halves() {
        // labels 1 for x < 8, 2 for x >= 8; pixel x = 7 sits on the edge
        let (w, h) = (16, 16);
        let labels = (0..w * h)
            .map(|i| if i % w < 8 { [1, 1, 1, 1] } else { [2, 2, 2, 2] })
            .collect();
        let cues = CueStack::new(w, h, BinConfig::default(), labels).unwrap();
        let cfg = ScaleConfig::new(vec![3], 8).unwrap();
        // orientation 4 = pi/2, a vertical diameter
        let p = half_disk_histograms(&cues, 7, 8, 4, 0, &cfg).unwrap();
        for c in 0..4 {
            let s = cues.bins.slice(c);
            assert_eq!(p.u[s.start + 1], 1.0);
            assert_eq!(p.v[s.start + 2], 1.0);
        }
    }

    #[test]
    fn slices_sum_to_one_near_borders() {
        let cues = random_cues(12, 9, BinConfig([5, 4, 3, 6]), 2);
        let cfg = ScaleConfig::new(vec![2, 4, 7], 6).unwrap();
        for &(x, y) in &[(0, 0), (11, 8), (0, 8), (5, 4), (11, 0)] {
            for o in 0..6 {
                for s in 0..3 {
                    let p = half_disk_histograms(&cues, x, y, o, s, &cfg).unwrap();
                    for c in 0..4 {
                        let r = cues.bins.slice(c);
                        assert!((p.u[r.clone()].iter().sum::<f64>() - 1.0).abs() < 1e-12);
                        assert!((p.v[r].iter().sum::<f64>() - 1.0).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn top_row_with_horizontal_diameter_mirrors_u() {
        // V lies entirely above the image at y = 0, orientation 0
        let cues = random_cues(10, 10, BinConfig([4, 4, 4, 4]), 5);
        let cfg = ScaleConfig::new(vec![3], 4).unwrap();
        let p = half_disk_histograms(&cues, 4, 0, 0, 0, &cfg).unwrap();
        assert_eq!(p.u, p.v);
    }

    #[test]
    fn index_errors() {
        let cues = random_cues(5, 5, BinConfig([2, 2, 2, 2]), 1);
        let cfg = ScaleConfig::new(vec![2], 4).unwrap();
        assert!(half_disk_histograms(&cues, 0, 0, 4, 0, &cfg).is_err());
        assert!(half_disk_histograms(&cues, 0, 0, 0, 1, &cfg).is_err());
        assert!(half_disk_histograms(&cues, 5, 0, 0, 0, &cfg).is_err());
    }

    #[test]
    fn stack_is_complete_and_consistent() {
        let cues = random_cues(8, 8, BinConfig::default(), 9);
        let cfg = ScaleConfig::default();
        let stack = extract_feature_stack(&cues, &cfg).unwrap();
        assert_eq!(stack.len(), 8 * 8 * 8 * 4);
        for y in 0..8 {
            for x in 0..8 {
                for o in 0..8 {
                    for s in 0..4 {
                        let a = stack.pair(x, y, o, s).unwrap();
                        let b = half_disk_histograms(&cues, x, y, o, s, &cfg).unwrap();
                        assert_eq!(a, b);
                    }
                }
            }
        }
    }
}
