//! Boundary benchmark: tolerance matching against several annotations,
//! precision/recall over a threshold sweep, and ODS / OIS / AP summaries.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io_util::write_atomic;

/// Binary raster in row-major order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMap {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl BinaryMap {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Dimension(format!(
                "{} pixels for a {width}x{height} map",
                data.len()
            )));
        }
        Ok(BinaryMap {
            width,
            height,
            data,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        BinaryMap {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Pixels at or above `threshold`.
    pub fn from_threshold(values: &[f64], width: usize, height: usize, threshold: f64) -> Self {
        BinaryMap {
            width,
            height,
            data: values.iter().map(|&v| v >= threshold).collect(),
        }
    }

    /// Loads an annotation raster; any nonzero pixel is a boundary.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let img = crate::imgproc::load_image(path.as_ref())?;
        let gray = img.to_gray();
        Ok(BinaryMap {
            width: gray.width(),
            height: gray.height(),
            data: gray.data().iter().map(|&v| v > 0.0).collect(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::imgproc::save_binary(&self.data, self.width, self.height, path)
    }
}

/// Matching tolerance policy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Tolerance {
    /// Fraction of the image diagonal, never below one pixel.
    Relative(f64),
    Pixels(f64),
}

/// Fraction of the image diagonal used as the default matching radius.
pub const DEFAULT_RELATIVE_TOLERANCE: f64 = 0.0075;

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::Relative(DEFAULT_RELATIVE_TOLERANCE)
    }
}

impl Tolerance {
    pub fn pixels(self, width: usize, height: usize) -> f64 {
        match self {
            Tolerance::Relative(f) => (f * ((width * width + height * height) as f64).sqrt()).max(1.0),
            Tolerance::Pixels(p) => p,
        }
    }
}

/// One-to-one correspondence between candidate and ground-truth pixels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchResult {
    pub matched_candidate: Vec<bool>,
    pub matched_gt: Vec<bool>,
    pub count: usize,
}

/// Matches candidate to ground-truth pixels within `tolerance` (Euclidean).
///
/// Pairs are first taken greedily by increasing distance, ties broken by
/// row-major candidate then ground-truth index; augmenting paths then grow
/// the matching to maximum cardinality.
pub fn match_boundaries(candidate: &BinaryMap, gt: &BinaryMap, tolerance: f64) -> Result<MatchResult> {
    if candidate.width != gt.width || candidate.height != gt.height {
        return Err(Error::Dimension(format!(
            "candidate {}x{} vs ground truth {}x{}",
            candidate.width, candidate.height, gt.width, gt.height
        )));
    }
    if !(tolerance >= 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tolerance}")));
    }
    let (w, h) = (gt.width, gt.height);
    let cands: Vec<usize> = (0..w * h).filter(|&i| candidate.data[i]).collect();
    let mut gt_slot = vec![usize::MAX; w * h];
    let mut gts = Vec::new();
    for i in (0..w * h).filter(|&i| gt.data[i]) {
        gt_slot[i] = gts.len();
        gts.push(i);
    }

    let reach = tolerance.floor() as isize;
    let tol2 = tolerance * tolerance;
    // adjacency per candidate, sorted by (distance, gt index)
    let mut adj: Vec<Vec<(u64, usize)>> = Vec::with_capacity(cands.len());
    for &ci in &cands {
        let (cx, cy) = ((ci % w) as isize, (ci / w) as isize);
        let mut list = Vec::new();
        for dy in -reach..=reach {
            let y = cy + dy;
            if y < 0 || y >= h as isize {
                continue;
            }
            for dx in -reach..=reach {
                let x = cx + dx;
                if x < 0 || x >= w as isize {
                    continue;
                }
                let d2 = (dx * dx + dy * dy) as u64;
                if d2 as f64 > tol2 {
                    continue;
                }
                let slot = gt_slot[y as usize * w + x as usize];
                if slot != usize::MAX {
                    list.push((d2, slot));
                }
            }
        }
        list.sort_unstable();
        adj.push(list);
    }

    let mut edges: Vec<(u64, usize, usize)> = adj
        .iter()
        .enumerate()
        .flat_map(|(c, l)| l.iter().map(move |&(d2, g)| (d2, c, g)))
        .collect();
    edges.sort_unstable();
    let mut match_c: Vec<Option<usize>> = vec![None; cands.len()];
    let mut match_g: Vec<Option<usize>> = vec![None; gts.len()];
    for (_, c, g) in edges {
        if match_c[c].is_none() && match_g[g].is_none() {
            match_c[c] = Some(g);
            match_g[g] = Some(c);
        }
    }

    let adj: Vec<Vec<usize>> = adj.into_iter().map(|l| l.into_iter().map(|(_, g)| g).collect()).collect();
    let mut visited = vec![false; gts.len()];
    loop {
        let mut improved = false;
        for c in 0..cands.len() {
            if match_c[c].is_some() || adj[c].is_empty() {
                continue;
            }
            if augment(c, &adj, &mut match_c, &mut match_g, &mut visited) {
                improved = true;
                visited.iter_mut().for_each(|v| *v = false);
            }
        }
        if !improved {
            break;
        }
        visited.iter_mut().for_each(|v| *v = false);
    }

    let mut matched_candidate = vec![false; w * h];
    let mut matched_gt = vec![false; w * h];
    let mut count = 0;
    for (c, m) in match_c.iter().enumerate() {
        if let Some(g) = m {
            matched_candidate[cands[c]] = true;
            matched_gt[gts[*g]] = true;
            count += 1;
        }
    }
    Ok(MatchResult {
        matched_candidate,
        matched_gt,
        count,
    })
}

/// Iterative augmenting-path search from a free candidate.
fn augment(
    start: usize,
    adj: &[Vec<usize>],
    match_c: &mut [Option<usize>],
    match_g: &mut [Option<usize>],
    visited: &mut [bool],
) -> bool {
    let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
    // via[k]: gt pixel leading from stack[k] to stack[k + 1]
    let mut via: Vec<usize> = Vec::new();
    while let Some(top) = stack.last_mut() {
        let (c, next) = *top;
        if next == adj[c].len() {
            stack.pop();
            via.pop();
            continue;
        }
        top.1 += 1;
        let g = adj[c][next];
        if visited[g] {
            continue;
        }
        visited[g] = true;
        via.push(g);
        match match_g[g] {
            None => {
                for (k, &(cc, _)) in stack.iter().enumerate() {
                    match_c[cc] = Some(via[k]);
                    match_g[via[k]] = Some(cc);
                }
                return true;
            }
            Some(c2) => stack.push((c2, 0)),
        }
    }
    false
}

/// Zhang-Suen thinning of a binary map to one-pixel-wide curves.
pub fn thin_binary(map: &BinaryMap) -> BinaryMap {
    let (w, h) = (map.width, map.height);
    let mut img = map.data.clone();
    let at = |img: &[bool], x: isize, y: isize| -> bool {
        x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && img[y as usize * w + x as usize]
    };
    loop {
        let mut changed = false;
        for pass in 0..2 {
            let mut remove = Vec::new();
            for y in 0..h as isize {
                for x in 0..w as isize {
                    if !img[y as usize * w + x as usize] {
                        continue;
                    }
                    // P2..P9 clockwise from north
                    let p = [
                        at(&img, x, y - 1),
                        at(&img, x + 1, y - 1),
                        at(&img, x + 1, y),
                        at(&img, x + 1, y + 1),
                        at(&img, x, y + 1),
                        at(&img, x - 1, y + 1),
                        at(&img, x - 1, y),
                        at(&img, x - 1, y - 1),
                    ];
                    let b = p.iter().filter(|&&v| v).count();
                    if !(2..=6).contains(&b) {
                        continue;
                    }
                    let a = (0..8).filter(|&i| !p[i] && p[(i + 1) % 8]).count();
                    if a != 1 {
                        continue;
                    }
                    let (n, e, s, wst) = (p[0], p[2], p[4], p[6]);
                    let ok = if pass == 0 {
                        !(n && e && s) && !(e && s && wst)
                    } else {
                        !(n && e && wst) && !(n && s && wst)
                    };
                    if ok {
                        remove.push(y as usize * w + x as usize);
                    }
                }
            }
            if !remove.is_empty() {
                changed = true;
                for i in remove {
                    img[i] = false;
                }
            }
        }
        if !changed {
            break;
        }
    }
    BinaryMap {
        width: w,
        height: h,
        data: img,
    }
}

/// Raw counts at one threshold for one image (or summed over a dataset).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrCounts {
    /// Candidate pixels matched to at least one annotation.
    pub matched_det: usize,
    pub total_det: usize,
    /// Ground-truth pixels matched, summed over annotations.
    pub matched_gt: usize,
    pub total_gt: usize,
}

impl PrCounts {
    /// Precision, defined as 1 when there are no detections.
    pub fn precision(&self) -> f64 {
        if self.total_det == 0 {
            1.0
        } else {
            self.matched_det as f64 / self.total_det as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.total_gt == 0 {
            0.0
        } else {
            self.matched_gt as f64 / self.total_gt as f64
        }
    }

    pub fn f_measure(&self) -> f64 {
        f_measure(self.precision(), self.recall())
    }

    fn add(&mut self, other: &PrCounts) {
        self.matched_det += other.matched_det;
        self.total_det += other.total_det;
        self.matched_gt += other.matched_gt;
        self.total_gt += other.total_gt;
    }
}

/// Harmonic mean, 0 when both inputs are 0.
pub fn f_measure(p: f64, r: f64) -> f64 {
    if p + r <= 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
    pub counts: PrCounts,
}

impl PrPoint {
    pub fn from_counts(threshold: f64, counts: PrCounts) -> Self {
        PrPoint {
            threshold,
            precision: counts.precision(),
            recall: counts.recall(),
            f: counts.f_measure(),
            counts,
        }
    }
}

/// Counts of one detection against all of its annotations at one threshold.
pub fn evaluate_binary(candidate: &BinaryMap, annotations: &[BinaryMap], tolerance: f64) -> Result<PrCounts> {
    if annotations.is_empty() {
        return Err(Error::Dataset("image has no annotations".into()));
    }
    let mut any = vec![false; candidate.data.len()];
    let mut counts = PrCounts {
        total_det: candidate.count(),
        ..Default::default()
    };
    for gt in annotations {
        let m = match_boundaries(candidate, gt, tolerance)?;
        for (a, &b) in any.iter_mut().zip(&m.matched_candidate) {
            *a |= b;
        }
        counts.matched_gt += m.count;
        counts.total_gt += gt.count();
    }
    counts.matched_det = any.iter().filter(|&&b| b).count();
    Ok(counts)
}

/// `n` evenly spaced thresholds strictly inside `(0, 1)`.
pub fn default_thresholds(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
}

/// Default threshold sweep length.
pub const DEFAULT_THRESHOLDS: usize = 33;

/// Per-image and dataset-level PR tables.
#[derive(Clone, Debug, PartialEq)]
pub struct PrTables {
    pub thresholds: Vec<f64>,
    /// `per_image[i][t]`
    pub per_image: Vec<Vec<PrCounts>>,
    pub dataset: Vec<PrPoint>,
}

/// PR counts of one real-valued thinned map over a threshold sweep.
pub fn image_pr(
    strength: &[f64],
    width: usize,
    height: usize,
    annotations: &[BinaryMap],
    thresholds: &[f64],
    tolerance: Tolerance,
) -> Result<Vec<PrCounts>> {
    if thresholds.is_empty() {
        return Err(Error::InvalidParameter("empty threshold list".into()));
    }
    for a in annotations {
        if a.width != width || a.height != height {
            return Err(Error::Dimension(format!(
                "annotation {}x{} for a {width}x{height} map",
                a.width, a.height
            )));
        }
    }
    let tol = tolerance.pixels(width, height);
    thresholds
        .iter()
        .map(|&t| {
            let cand = thin_binary(&BinaryMap::from_threshold(strength, width, height, t));
            evaluate_binary(&cand, annotations, tol)
        })
        .collect()
}

/// One entry per image: the thinned strength map and its annotations.
pub struct EvalImage<'a> {
    pub strength: &'a [f64],
    pub width: usize,
    pub height: usize,
    pub annotations: &'a [BinaryMap],
}

pub fn pr_curve(images: &[EvalImage<'_>], thresholds: &[f64], tolerance: Tolerance) -> Result<PrTables> {
    use rayon::prelude::*;
    if thresholds.is_empty() {
        return Err(Error::InvalidParameter("empty threshold list".into()));
    }
    let per_image: Vec<Vec<PrCounts>> = images
        .par_iter()
        .map(|im| image_pr(im.strength, im.width, im.height, im.annotations, thresholds, tolerance))
        .collect::<Result<_>>()?;
    Ok(tables_from_counts(thresholds, per_image))
}

pub fn tables_from_counts(thresholds: &[f64], per_image: Vec<Vec<PrCounts>>) -> PrTables {
    let dataset = thresholds
        .iter()
        .enumerate()
        .map(|(t, &thr)| {
            let mut total = PrCounts::default();
            for img in &per_image {
                total.add(&img[t]);
            }
            PrPoint::from_counts(thr, total)
        })
        .collect();
    PrTables {
        thresholds: thresholds.to_vec(),
        per_image,
        dataset,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub tables: PrTables,
    pub ods: f64,
    pub ods_threshold: f64,
    pub ois: f64,
    pub ap: f64,
}

/// ODS: best dataset F over thresholds. OIS: mean of per-image best F.
/// AP: trapezoidal area under the dataset points sorted by recall.
pub fn summarize(tables: PrTables) -> Result<EvalReport> {
    if tables.dataset.is_empty() {
        return Err(Error::InvalidParameter("empty PR table".into()));
    }
    let (mut ods, mut ods_threshold) = (0.0, tables.dataset[0].threshold);
    for p in &tables.dataset {
        if p.f > ods {
            ods = p.f;
            ods_threshold = p.threshold;
        }
    }
    let ois = if tables.per_image.is_empty() {
        0.0
    } else {
        tables
            .per_image
            .iter()
            .map(|img| img.iter().map(PrCounts::f_measure).fold(0.0, f64::max))
            .sum::<f64>()
            / tables.per_image.len() as f64
    };
    let mut pts: Vec<(f64, f64)> = tables.dataset.iter().map(|p| (p.recall, p.precision)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    let ap = pts
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum();
    Ok(EvalReport {
        tables,
        ods,
        ods_threshold,
        ois,
        ap,
    })
}

impl EvalReport {
    /// `threshold,precision,recall,f` rows for the dataset curve.
    pub fn pr_csv(&self) -> String {
        let mut s = String::from("threshold,precision,recall,f\n");
        for p in &self.tables.dataset {
            let _ = writeln!(s, "{:.6},{:.6},{:.6},{:.6}", p.threshold, p.precision, p.recall, p.f);
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        format!(
            "ods,ods_threshold,ois,ap\n{:.6},{:.6},{:.6},{:.6}\n",
            self.ods, self.ods_threshold, self.ois, self.ap
        )
    }

    pub fn summary_text(&self, label: &str) -> String {
        format!(
            "{label}: ODS {:.4} (t={:.3})  OIS {:.4}  AP {:.4}  images {}",
            self.ods,
            self.ods_threshold,
            self.ois,
            self.ap,
            self.tables.per_image.len()
        )
    }

    /// Writes `<prefix>_pr.csv` and `<prefix>_summary.csv` into `dir`.
    pub fn write(&self, dir: &Path, prefix: &str) -> Result<()> {
        write_atomic(&dir.join(format!("{prefix}_pr.csv")), self.pr_csv().as_bytes())?;
        write_atomic(&dir.join(format!("{prefix}_summary.csv")), self.summary_csv().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(w: usize, h: usize, on: &[(usize, usize)]) -> BinaryMap {
        let mut m = BinaryMap::empty(w, h);
        for &(x, y) in on {
            m.data[y * w + x] = true;
        }
        m
    }

    #[test]
    fn identical_maps_match_fully() {
        let gt = map(6, 6, &[(1, 1), (2, 2), (3, 3), (5, 0)]);
        let m = match_boundaries(&gt, &gt, 1.0).unwrap();
        assert_eq!(m.count, 4);
        let c = evaluate_binary(&gt, std::slice::from_ref(&gt), 1.0).unwrap();
        assert_eq!((c.precision(), c.recall()), (1.0, 1.0));
    }

    #[test]
    fn empty_candidate_conventions() {
        let gt = map(4, 4, &[(1, 1)]);
        let c = evaluate_binary(&BinaryMap::empty(4, 4), &[gt], 1.0).unwrap();
        assert_eq!(c.recall(), 0.0);
        assert_eq!(c.precision(), 1.0);
        assert_eq!(c.f_measure(), 0.0);
    }

    #[test]
    fn one_to_one_within_tolerance() {
        // two candidates compete for one gt pixel
        let cand = map(5, 1, &[(1, 0), (3, 0)]);
        let gt = map(5, 1, &[(2, 0)]);
        let m = match_boundaries(&cand, &gt, 1.0).unwrap();
        assert_eq!(m.count, 1);
        assert!(m.matched_candidate[1]);
        assert!(!match_boundaries(&cand, &gt, 0.5).unwrap().matched_gt[2]);
    }

    #[test]
    fn augmenting_beats_plain_greedy() {
        // greedy takes (c1,g1) at distance 0, stranding c0 whose only option is g1;
        // the optimum pairs c0-g1 and c1-g2
        let cand = map(4, 1, &[(0, 0), (2, 0)]);
        let gt = map(4, 1, &[(2, 0), (3, 0)]);
        let m = match_boundaries(&cand, &gt, 2.0).unwrap();
        assert_eq!(m.count, 2);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(match_boundaries(&BinaryMap::empty(2, 2), &BinaryMap::empty(3, 2), 1.0).is_err());
    }

    #[test]
    fn f_measure_examples() {
        assert!((f_measure(0.71, 0.71) - 0.71).abs() < 1e-15);
        assert!((f_measure(0.75, 0.69) - 0.71875).abs() < 1e-12);
        assert_eq!(f_measure(0.0, 0.0), 0.0);
    }

    #[test]
    fn tolerance_policy() {
        assert!((Tolerance::default().pixels(96, 96) - 0.0075 * 96.0 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(Tolerance::default().pixels(10, 10), 1.0);
        assert!((Tolerance::default().pixels(481, 321) - 4.3372).abs() < 1e-3);
        assert_eq!(Tolerance::Pixels(2.0).pixels(5, 5), 2.0);
    }

    #[test]
    fn thinning_reduces_thick_line() {
        let mut on = Vec::new();
        for y in 1..9 {
            for x in 3..6 {
                on.push((x, y));
            }
        }
        let t = thin_binary(&map(9, 10, &on));
        for y in 0..10 {
            let row: usize = (0..9).filter(|&x| t.get(x, y)).count();
            assert!(row <= 1, "row {y}");
        }
        assert!(t.count() >= 4);
        // already thin lines are untouched
        let line = map(9, 9, &(0..9).map(|y| (4, y)).collect::<Vec<_>>());
        assert_eq!(thin_binary(&line), line);
    }

    #[test]
    fn summarize_known_table() {
        let thresholds = vec![0.25, 0.5, 0.75];
        let per_image = vec![
            vec![
                PrCounts { matched_det: 5, total_det: 10, matched_gt: 8, total_gt: 10 },
                PrCounts { matched_det: 6, total_det: 8, matched_gt: 6, total_gt: 10 },
                PrCounts { matched_det: 2, total_det: 2, matched_gt: 2, total_gt: 10 },
            ],
            vec![
                PrCounts { matched_det: 1, total_det: 4, matched_gt: 3, total_gt: 4 },
                PrCounts { matched_det: 2, total_det: 2, matched_gt: 2, total_gt: 4 },
                PrCounts { matched_det: 0, total_det: 0, matched_gt: 0, total_gt: 4 },
            ],
        ];
        let r = summarize(tables_from_counts(&thresholds, per_image)).unwrap();
        // dataset: t=.25 P=6/14 R=11/14; t=.5 P=8/10 R=8/14; t=.75 P=1 R=2/14
        let f = |p: f64, r: f64| 2.0 * p * r / (p + r);
        let fs = [f(6.0 / 14.0, 11.0 / 14.0), f(0.8, 8.0 / 14.0), f(1.0, 2.0 / 14.0)];
        let ods = fs.iter().copied().fold(0.0, f64::max);
        assert!((r.ods - ods).abs() < 1e-12);
        assert_eq!(r.ods_threshold, 0.5);
        let img0 = [f(0.5, 0.8), f(0.75, 0.6), f(1.0, 0.2)].into_iter().fold(0.0, f64::max);
        let img1 = [f(0.25, 0.75), f(1.0, 0.5), 0.0].into_iter().fold(0.0, f64::max);
        assert!((r.ois - (img0 + img1) / 2.0).abs() < 1e-12);
        let pts = [(2.0 / 14.0, 1.0), (8.0 / 14.0, 0.8), (11.0 / 14.0, 6.0 / 14.0)];
        let ap = (pts[1].0 - pts[0].0) * (pts[0].1 + pts[1].1) / 2.0
            + (pts[2].0 - pts[1].0) * (pts[1].1 + pts[2].1) / 2.0;
        assert!((r.ap - ap).abs() < 1e-12);
        assert!(r.pr_csv().starts_with("threshold,precision,recall,f\n0.250000,"));
    }

    #[test]
    fn threshold_sweep_shape() {
        let t = default_thresholds(33);
        assert_eq!(t.len(), 33);
        assert!(t[0] > 0.0 && t[32] < 1.0);
        assert!(image_pr(&[0.5], 1, 1, &[map(1, 1, &[(0, 0)])], &[], Tolerance::Pixels(1.0)).is_err());
    }
}
