//! Image to boundary map: cue preparation, the two distance stages (χ² over
//! full histograms, and the learned metric over pooled projections) and
//! post-processing.

use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{
    quantize_cues, BinConfig, CueStack, HalfCounts, HalfDiskPooler, HalfDiskShape, ScaleConfig, NUM_CUES,
};
use crate::imgproc::textons::{texton_descriptors, DEFAULT_TEXTONS, MAX_KMEANS_SAMPLES};
use crate::imgproc::{compute_textons, default_filter_bank, rgb_to_lab, ColorSpace, MultiChannelImage, TextonCodebook};
use crate::metric::{ChiSquareModel, DistanceKernel, MetricModel};
use crate::postproc::{postprocess, BoundaryMap, OrientedResponses, DEFAULT_SMOOTH_RADIUS};

/// Histogram and geometry settings shared by both metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub bins: BinConfig,
    pub scales: ScaleConfig,
    pub n_textons: usize,
    pub seed: u64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            bins: BinConfig::default(),
            scales: ScaleConfig::default(),
            n_textons: DEFAULT_TEXTONS,
            seed: 0,
        }
    }
}

fn as_rgb(img: &MultiChannelImage) -> Result<MultiChannelImage> {
    match img.color_space() {
        ColorSpace::Rgb => Ok(img.clone()),
        ColorSpace::Gray => img.gray_to_rgb(),
        other => Err(Error::ColorSpace {
            expected: "Rgb or Gray",
            actual: other.name(),
        }),
    }
}

/// Quantized L, a, b and texton labels of an RGB or gray image. Without a
/// codebook, textons are clustered on this image alone.
pub fn prepare_cues(img: &MultiChannelImage, codebook: Option<&TextonCodebook>, cfg: &FeatureConfig) -> Result<CueStack> {
    let rgb = as_rgb(img)?;
    let lab = rgb_to_lab(&rgb)?;
    let gray = rgb.to_gray();
    let bank = default_filter_bank();
    let textons = match codebook {
        Some(cb) => cb.texton_map(&gray, &bank)?,
        None => compute_textons(&gray, &bank, cfg.n_textons, cfg.seed)?,
    };
    quantize_cues(&lab, &textons, cfg.bins)
}

/// One codebook for a whole image collection, fit on an even random share
/// of every image's descriptors.
pub fn fit_codebook(images: &[MultiChannelImage], k: usize, seed: u64) -> Result<TextonCodebook> {
    if images.is_empty() {
        return Err(Error::InvalidParameter("no images to fit textons on".into()));
    }
    let bank = default_filter_bank();
    let per_image = (MAX_KMEANS_SAMPLES / images.len()).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool = Vec::new();
    for img in images {
        let gray = as_rgb(img)?.to_gray();
        let mut desc = texton_descriptors(&gray, &bank)?;
        if desc.len() > per_image {
            let mut keep: Vec<usize> = sample(&mut rng, desc.len(), per_image).into_vec();
            keep.sort_unstable();
            desc = keep.into_iter().map(|i| std::mem::take(&mut desc[i])).collect();
        }
        pool.extend(desc);
    }
    TextonCodebook::fit(&pool, k, seed)
}

/// Per-cue χ² between two raw count vectors, each normalized by its own
/// pixel count. An empty half means distance zero.
fn chi_square_counts(u: &HalfCounts, v: &HalfCounts, bins: &BinConfig, out: &mut [f64; NUM_CUES]) {
    if u.n == 0 || v.n == 0 {
        *out = [0.0; NUM_CUES];
        return;
    }
    let (iu, iv) = (1.0 / u.n as f64, 1.0 / v.n as f64);
    let mut start = 0;
    for (c, &b) in bins.0.iter().enumerate() {
        let mut acc = 0.0;
        for (&cu, &cv) in u.counts[start..start + b].iter().zip(&v.counts[start..start + b]) {
            if cu | cv != 0 {
                let (a, bb) = (cu as f64 * iu, cv as f64 * iv);
                let d = a - bb;
                acc += d * d / (a + bb);
            }
        }
        out[c] = 0.5 * acc;
        start += b;
    }
}

/// Per-pixel, per-orientation χ² distances for every (scale, cue):
/// layout `[pixel][orientation][scale][cue]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChiSquareField {
    pub width: usize,
    pub height: usize,
    pub n_orient: usize,
    pub n_scales: usize,
    pub values: Vec<[f64; NUM_CUES]>,
}

impl ChiSquareField {
    pub fn at(&self, x: usize, y: usize, o: usize) -> &[[f64; NUM_CUES]] {
        let start = ((y * self.width + x) * self.n_orient + o) * self.n_scales;
        &self.values[start..start + self.n_scales]
    }
}

fn chi_square_rows<T: Send>(
    cues: &CueStack,
    cfg: &ScaleConfig,
    per_row: impl Fn(usize, &[[f64; NUM_CUES]]) -> T + Sync,
) -> Result<Vec<T>> {
    let pooler = HalfDiskPooler::new(cues, cfg)?;
    let (w, no, ns) = (cues.width, cfg.n_orient, cfg.n_scales());
    let bins = cues.bins;
    Ok((0..cues.height)
        .into_par_iter()
        .map(|y| {
            let mut row = vec![[0.0; NUM_CUES]; w * no * ns];
            for o in 0..no {
                for s in 0..ns {
                    pooler.scan_row(y, o, s, |x, u, v| {
                        chi_square_counts(u, v, &bins, &mut row[(x * no + o) * ns + s]);
                    });
                }
            }
            per_row(y, &row)
        })
        .collect())
}

/// All χ² distances of an image (memory grows with 16 values per pixel and orientation).
pub fn chi_square_field(cues: &CueStack, cfg: &ScaleConfig) -> Result<ChiSquareField> {
    let rows = chi_square_rows(cues, cfg, |_, row| row.to_vec())?;
    Ok(ChiSquareField {
        width: cues.width,
        height: cues.height,
        n_orient: cfg.n_orient,
        n_scales: cfg.n_scales(),
        values: rows.concat(),
    })
}

/// χ² distance stage: weighted sum over scales and cues per orientation.
pub fn chi_square_responses(cues: &CueStack, cfg: &ScaleConfig, model: &ChiSquareModel) -> Result<OrientedResponses> {
    if model.n_scales() != cfg.n_scales() {
        return Err(Error::Dimension(format!(
            "{} weight rows for {} scales",
            model.n_scales(),
            cfg.n_scales()
        )));
    }
    let (no, ns) = (cfg.n_orient, cfg.n_scales());
    let rows = chi_square_rows(cues, cfg, |_, row| {
        row.chunks_exact(ns)
            .map(|d| {
                d.iter()
                    .zip(&model.weights)
                    .map(|(dc, wc)| dc.iter().zip(wc).map(|(a, b)| a * b).sum::<f64>())
                    .sum::<f64>()
                    .clamp(0.0, 1.0)
            })
            .collect::<Vec<f64>>()
    })?;
    debug_assert!(rows.iter().all(|r| r.len() == cues.width * no));
    OrientedResponses::new(cues.width, cues.height, no, rows.concat())
}

const EXP_MAGIC: f64 = 6_755_399_441_055_744.0; // 1.5 * 2^52
const LN2_HI: f64 = 6.931_471_803_691_238_2e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;

/// `exp` for |x| <= 700 with about 1e-15 relative error, written so the
/// compiler can vectorize it over slices.
#[inline(always)]
fn exp_approx(x: f64) -> f64 {
    let x = x.clamp(-700.0, 700.0);
    let t = x * std::f64::consts::LOG2_E + EXP_MAGIC;
    let k = t - EXP_MAGIC;
    let r = (x - k * LN2_HI) - k * LN2_LO;
    let mut p = 1.0 / 39_916_800.0;
    p = p * r + 1.0 / 3_628_800.0;
    p = p * r + 1.0 / 362_880.0;
    p = p * r + 1.0 / 40_320.0;
    p = p * r + 1.0 / 5_040.0;
    p = p * r + 1.0 / 720.0;
    p = p * r + 1.0 / 120.0;
    p = p * r + 1.0 / 24.0;
    p = p * r + 1.0 / 6.0;
    p = p * r + 0.5;
    p = p * r + 1.0;
    p = p * r + 1.0;
    let scale = f64::from_bits(t.to_bits().wrapping_add(1023) << 52);
    p * scale
}

/// Width of the fixed-size blocks the learned-metric stage works on; `N`
/// is padded up to a multiple of this with zero parameters.
const LANES: usize = 16;
type Lane = [f64; LANES];

#[inline(always)]
fn sigmoid_lane(z: &mut Lane) {
    for v in z.iter_mut() {
        *v = 1.0 / (1.0 + exp_approx(-*v));
    }
}

/// One U half expressed against the disk rows: a contiguous range of row
/// indices whose ends default to the disk boundary, plus the rows where the
/// diameter cuts the span instead.
struct HalfPlan {
    first: usize,
    last: usize,
    /// `(row index, R index offset)` for rows whose right end is the diameter.
    right_cuts: Vec<(usize, i32)>,
    /// Same for rows whose left end is the diameter.
    left_cuts: Vec<(usize, i32)>,
}

/// Precomputed per-scale data of the learned metric.
struct LbmScalePlan {
    radius: usize,
    alpha: Vec<Lane>,
    /// Column `m` of `beta` as `blocks` lanes, so one pixel's projection is
    /// a sum of four columns.
    columns: Vec<Lane>,
    /// Disk half-width per row, rows `-r..=r`.
    half: Vec<i32>,
    halves: Vec<HalfPlan>,
}

impl LbmScalePlan {
    fn new(radius: u32, cfg: &ScaleConfig, alpha: Vec<Lane>, columns: Vec<Lane>) -> Self {
        let r = radius as i32;
        let half: Vec<i32> = (-r..=r)
            .map(|dy| {
                let mut h = 0;
                while (h + 1) * (h + 1) + dy * dy <= r * r {
                    h += 1;
                }
                h
            })
            .collect();
        let halves = (0..cfg.n_orient)
            .map(|o| {
                let shape = HalfDiskShape::new(radius, cfg.orientation(o));
                let rows: Vec<usize> = shape.u.iter().map(|sp| (sp.dy + r) as usize).collect();
                let mut plan = HalfPlan {
                    first: rows[0],
                    last: *rows.last().expect("U half is never empty"),
                    right_cuts: Vec::new(),
                    left_cuts: Vec::new(),
                };
                debug_assert!(rows.windows(2).all(|w| w[1] == w[0] + 1));
                for sp in &shape.u {
                    let i = (sp.dy + r) as usize;
                    if sp.hi != half[i] {
                        plan.right_cuts.push((i, sp.hi + 1));
                    }
                    if sp.lo != -half[i] {
                        plan.left_cuts.push((i, sp.lo));
                    }
                }
                plan
            })
            .collect();
        LbmScalePlan {
            radius: radius as usize,
            alpha,
            columns,
            half,
            halves,
        }
    }
}

/// Row prefix sums of per-pixel projections over a zero-padded grid:
/// `sums[row][j]` is the sum over padded columns `< j`.
struct ProjectionGrid {
    pw: usize,
    blocks: usize,
    sums: Vec<Lane>,
    counts: Vec<u32>,
}

fn projection_grid(cues: &CueStack, plan: &LbmScalePlan, blocks: usize) -> ProjectionGrid {
    let (w, h) = (cues.width, cues.height);
    let r = plan.radius;
    let pw = w + 2 * r + 1;
    let ph = h + 2 * r;
    let offsets = cues.bins.offsets();
    let mut sums = vec![[0.0; LANES]; pw * ph * blocks];
    let mut counts = vec![0u32; pw * ph];
    sums.par_chunks_mut(pw * blocks)
        .zip(counts.par_chunks_mut(pw))
        .enumerate()
        .for_each(|(py, (srow, crow))| {
            let y = py as isize - r as isize;
            if y < 0 || y >= h as isize {
                return;
            }
            let mut acc = vec![[0.0; LANES]; blocks];
            let mut c = 0u32;
            for px in 1..pw {
                let x = px as isize - 1 - r as isize;
                if x >= 0 && x < w as isize {
                    let l = cues.labels[y as usize * w + x as usize];
                    for (cue, &lab) in l.iter().enumerate() {
                        let col = &plan.columns[(offsets[cue] + lab as usize) * blocks..][..blocks];
                        for (a, cl) in acc.iter_mut().zip(col) {
                            for k in 0..LANES {
                                a[k] += cl[k];
                            }
                        }
                    }
                    c += 1;
                }
                srow[px * blocks..(px + 1) * blocks].copy_from_slice(&acc);
                crow[px] = c;
            }
        });
    ProjectionGrid {
        pw,
        blocks,
        sums,
        counts,
    }
}

struct StripJob<'a> {
    plan: &'a LbmScalePlan,
    grid: &'a ProjectionGrid,
    kernel: DistanceKernel,
    sigma: f64,
    n: usize,
}

#[inline(always)]
fn lane_add<const NB: usize>(acc: &mut [Lane; NB], a: &[Lane; NB]) {
    for (x, y) in acc.iter_mut().zip(a) {
        let (xv, yv) = (*x, *y);
        *x = std::array::from_fn(|k| xv[k] + yv[k]);
    }
}

#[inline(always)]
fn lane_sub<const NB: usize>(acc: &mut [Lane; NB], a: &[Lane; NB]) {
    for (x, y) in acc.iter_mut().zip(a) {
        let (xv, yv) = (*x, *y);
        *x = std::array::from_fn(|k| xv[k] - yv[k]);
    }
}

/// Distances for columns `x0..x1` of every row; output layout
/// `[y][x - x0][orientation]`.
#[inline(always)]
fn lbm_strip_impl<const NB: usize>(job: &StripJob<'_>, x0: usize, x1: usize, out: &mut [f64]) {
    let plan = job.plan;
    let grid = job.grid;
    let pw = grid.pw;
    let no = plan.halves.len();
    let sw = x1 - x0;
    let h = out.len() / (sw * no);
    let r = plan.radius;
    let rows = 2 * r + 1;
    let inv_two_sigma2 = 1.0 / (2.0 * job.sigma * job.sigma);
    let sums: &[[Lane; NB]] = grid.sums.as_chunks::<NB>().0;
    let at = |row: usize, j: usize| -> &[Lane; NB] { &sums[row * pw + j] };
    let count = |row: usize, j: usize| grid.counts[row * pw + j] as i64;
    let alpha: &[Lane; NB] = plan.alpha.as_slice().try_into().expect("alpha has NB lanes");
    // cumulative right (A) and left (B) disk-boundary prefix values over
    // rows; entry i covers disk rows < i
    let mut cum_a = vec![[[0.0; LANES]; NB]; rows + 1];
    let mut cum_b = vec![[[0.0; LANES]; NB]; rows + 1];
    let mut cnt_a = vec![0i64; rows + 1];
    let mut cnt_b = vec![0i64; rows + 1];
    for y in 0..h {
        for x in x0..x1 {
            let cx = (x + r) as i32;
            for i in 0..rows {
                let row = y + i;
                let hw = plan.half[i];
                let (ja, jb) = ((cx + hw + 1) as usize, (cx - hw) as usize);
                let mut va = cum_a[i];
                lane_add(&mut va, at(row, ja));
                cum_a[i + 1] = va;
                let mut vb = cum_b[i];
                lane_add(&mut vb, at(row, jb));
                cum_b[i + 1] = vb;
                cnt_a[i + 1] = cnt_a[i] + count(row, ja);
                cnt_b[i + 1] = cnt_b[i] + count(row, jb);
            }
            let mut dsum = cum_a[rows];
            lane_sub(&mut dsum, &cum_b[rows]);
            let dn = cnt_a[rows] - cnt_b[rows];
            for (o, hp) in plan.halves.iter().enumerate() {
                let (i0, i1) = (hp.first, hp.last + 1);
                let mut usum = cum_a[i1];
                lane_sub(&mut usum, &cum_a[i0]);
                lane_sub(&mut usum, &cum_b[i1]);
                lane_add(&mut usum, &cum_b[i0]);
                let mut un = cnt_a[i1] - cnt_a[i0] - cnt_b[i1] + cnt_b[i0];
                for &(i, off) in &hp.right_cuts {
                    let row = y + i;
                    let (j, ja) = ((cx + off) as usize, (cx + plan.half[i] + 1) as usize);
                    lane_add(&mut usum, at(row, j));
                    lane_sub(&mut usum, at(row, ja));
                    un += count(row, j) - count(row, ja);
                }
                for &(i, off) in &hp.left_cuts {
                    let row = y + i;
                    let (j, jb) = ((cx + off) as usize, (cx - plan.half[i]) as usize);
                    lane_sub(&mut usum, at(row, j));
                    lane_add(&mut usum, at(row, jb));
                    un -= count(row, j) - count(row, jb);
                }
                let vn = dn - un;
                let slot = &mut out[(y * sw + x - x0) * no + o];
                if un == 0 || vn == 0 {
                    // one half outside the image: distance zero
                    *slot = 0.0;
                    continue;
                }
                let (iu, iv) = (1.0 / un as f64, 1.0 / vn as f64);
                let mut q = 0.0;
                let mut l1 = 0.0;
                for b in 0..NB {
                    let (a, us, ds) = (alpha[b], usum[b], dsum[b]);
                    let mut zu: Lane = std::array::from_fn(|k| a[k] + us[k] * iu);
                    let mut zv: Lane = std::array::from_fn(|k| a[k] + (ds[k] - us[k]) * iv);
                    sigmoid_lane(&mut zu);
                    sigmoid_lane(&mut zv);
                    for k in 0..LANES {
                        let d = zu[k] - zv[k];
                        q += d * d;
                        l1 += d.abs();
                    }
                }
                *slot = match job.kernel {
                    DistanceKernel::Rbf => 1.0 - (-q * inv_two_sigma2).exp(),
                    DistanceKernel::Linear => l1 / job.n as f64,
                };
            }
        }
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn lbm_strip_avx2<const NB: usize>(job: &StripJob<'_>, x0: usize, x1: usize, out: &mut [f64]) {
    lbm_strip_impl::<NB>(job, x0, x1, out)
}

fn lbm_strip_nb<const NB: usize>(job: &StripJob<'_>, x0: usize, x1: usize, out: &mut [f64]) {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: the required CPU feature was detected at runtime.
        unsafe { lbm_strip_avx2::<NB>(job, x0, x1, out) };
        return;
    }
    lbm_strip_impl::<NB>(job, x0, x1, out)
}

fn lbm_strip(job: &StripJob<'_>, x0: usize, x1: usize, out: &mut [f64]) {
    match job.grid.blocks {
        1 => lbm_strip_nb::<1>(job, x0, x1, out),
        2 => lbm_strip_nb::<2>(job, x0, x1, out),
        3 => lbm_strip_nb::<3>(job, x0, x1, out),
        4 => lbm_strip_nb::<4>(job, x0, x1, out),
        b => unreachable!("{b} lane blocks"),
    }
}

/// Largest transform dimension the learned-metric stage accepts.
pub const MAX_STAGE_N: usize = 4 * LANES;
/// Column strip width; keeps the prefix rows a strip touches cache resident.
const STRIP: usize = 32;

/// Learned-metric distance stage. Each pixel's histogram contribution is
/// projected onto `N` dimensions (the transform is affine in the
/// histogram), half-disks pool only those projections through row prefix
/// sums, and the V half is the full disk minus U.
pub fn lbm_responses(cues: &CueStack, model: &MetricModel) -> Result<OrientedResponses> {
    model.validate()?;
    if cues.bins != model.features.bins {
        return Err(Error::Incompatible(format!(
            "cue bins {:?} vs model bins {:?}",
            cues.bins.0, model.features.bins.0
        )));
    }
    if model.n > MAX_STAGE_N {
        return Err(Error::InvalidParameter(format!(
            "N = {} exceeds the detection limit {MAX_STAGE_N}",
            model.n
        )));
    }
    let cfg = model.features.scale_config();
    cfg.validate()?;
    let (w, h, n, no) = (cues.width, cues.height, model.n, cfg.n_orient);
    let blocks = n.div_ceil(LANES);
    let mut out = vec![0.0; w * h * no];
    let weight = 1.0 / model.scales.len() as f64;
    let strips: Vec<(usize, usize)> = (0..w).step_by(STRIP).map(|x0| (x0, (x0 + STRIP).min(w))).collect();
    for p in &model.scales {
        let mut alpha = vec![[0.0; LANES]; blocks];
        let mut columns = vec![[0.0; LANES]; model.m * blocks];
        for (row, chunk) in p.beta.chunks_exact(model.m).enumerate() {
            alpha[row / LANES][row % LANES] = p.alpha[row];
            for (m, &b) in chunk.iter().enumerate() {
                columns[m * blocks + row / LANES][row % LANES] = b;
            }
        }
        let plan = LbmScalePlan::new(cfg.radii[p.scale_index], &cfg, alpha, columns);
        let grid = projection_grid(cues, &plan, blocks);
        let job = StripJob {
            plan: &plan,
            grid: &grid,
            kernel: model.kernel,
            sigma: model.sigma,
            n,
        };
        let parts: Vec<Vec<f64>> = strips
            .par_iter()
            .map(|&(x0, x1)| {
                let mut buf = vec![0.0; h * (x1 - x0) * no];
                lbm_strip(&job, x0, x1, &mut buf);
                buf
            })
            .collect();
        for (&(x0, x1), buf) in strips.iter().zip(&parts) {
            let sw = x1 - x0;
            for y in 0..h {
                let dst = &mut out[(y * w + x0) * no..(y * w + x1) * no];
                for (d, v) in dst.iter_mut().zip(&buf[y * sw * no..(y + 1) * sw * no]) {
                    *d += v * weight;
                }
            }
        }
    }
    out.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    OrientedResponses::new(w, h, no, out)
}

/// Named metric choices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricMode {
    Chi2Learned,
    Chi2Equal,
    LbmRbf,
    LbmLinear,
}

impl MetricMode {
    pub const ALL: [MetricMode; 4] = [
        MetricMode::Chi2Learned,
        MetricMode::Chi2Equal,
        MetricMode::LbmRbf,
        MetricMode::LbmLinear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricMode::Chi2Learned => "chi2-learned",
            MetricMode::Chi2Equal => "chi2-equal",
            MetricMode::LbmRbf => "lbm-rbf",
            MetricMode::LbmLinear => "lbm-linear",
        }
    }

    pub fn is_lbm(self) -> bool {
        matches!(self, MetricMode::LbmRbf | MetricMode::LbmLinear)
    }

    pub fn kernel(self) -> Option<DistanceKernel> {
        match self {
            MetricMode::LbmRbf => Some(DistanceKernel::Rbf),
            MetricMode::LbmLinear => Some(DistanceKernel::Linear),
            _ => None,
        }
    }
}

impl FromStr for MetricMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricMode::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "unknown mode '{s}' (expected one of chi2-learned, chi2-equal, lbm-rbf, lbm-linear)"
            ))
        })
    }
}

/// Default scale for single-scale detection (radius 5 with the default radii).
pub const DEFAULT_SINGLE_SCALE: usize = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScaleMode {
    #[default]
    Multi,
    Single(usize),
}

impl FromStr for ScaleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multi" => Ok(ScaleMode::Multi),
            "single" => Ok(ScaleMode::Single(DEFAULT_SINGLE_SCALE)),
            _ => s
                .strip_prefix("single:")
                .and_then(|i| i.parse().ok())
                .map(ScaleMode::Single)
                .ok_or_else(|| Error::InvalidParameter(format!("scale mode '{s}' (expected multi, single or single:<index>)"))),
        }
    }
}

impl std::fmt::Display for ScaleMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScaleMode::Multi => write!(f, "multi"),
            ScaleMode::Single(s) => write!(f, "single:{s}"),
        }
    }
}

/// Which distance stage a detector runs.
#[derive(Clone, Debug, PartialEq)]
pub enum DistanceModel {
    ChiSquare(ChiSquareModel),
    Lbm(MetricModel),
}

/// Raw (fused, smoothed) and thinned boundary maps of one image.
#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    pub raw: BoundaryMap,
    pub thin: BoundaryMap,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTimes {
    pub features: Duration,
    pub distance: Duration,
    pub postproc: Duration,
}

#[derive(Clone, Debug)]
pub struct Detector {
    pub features: FeatureConfig,
    pub model: DistanceModel,
    pub codebook: Option<TextonCodebook>,
    pub smooth_radius: f64,
}

impl Detector {
    pub fn chi_square(features: FeatureConfig, weights: ChiSquareModel, codebook: Option<TextonCodebook>) -> Self {
        Detector {
            features,
            model: DistanceModel::ChiSquare(weights),
            codebook,
            smooth_radius: DEFAULT_SMOOTH_RADIUS,
        }
    }

    /// A learned-metric detector; features and codebook come from the model.
    pub fn lbm(model: MetricModel, seed: u64) -> Self {
        let features = FeatureConfig {
            bins: model.features.bins,
            scales: model.features.scale_config(),
            n_textons: model.textons.as_ref().map_or(DEFAULT_TEXTONS, TextonCodebook::k),
            seed,
        };
        Detector {
            features,
            codebook: model.textons.clone(),
            model: DistanceModel::Lbm(model),
            smooth_radius: DEFAULT_SMOOTH_RADIUS,
        }
    }

    /// Restricts detection to one scale. χ² keeps that scale's weight row,
    /// rescaled to sum to one; the learned metric keeps that scale's parameters.
    pub fn with_scale_mode(mut self, mode: ScaleMode) -> Result<Self> {
        let ScaleMode::Single(s) = mode else {
            return Ok(self);
        };
        let n_scales = self.features.scales.n_scales();
        if s >= n_scales {
            return Err(Error::OutOfRange(format!("single scale {s} with {n_scales} scales")));
        }
        match &mut self.model {
            DistanceModel::ChiSquare(m) => {
                let row = m.weights[s];
                let total: f64 = row.iter().sum();
                let row = if total > 0.0 {
                    row.map(|v| v / total)
                } else {
                    [1.0 / NUM_CUES as f64; NUM_CUES]
                };
                m.weights = vec![row];
                self.features.scales = ScaleConfig::new(vec![self.features.scales.radii[s]], self.features.scales.n_orient)?;
            }
            DistanceModel::Lbm(m) => {
                m.scales.retain(|p| p.scale_index == s);
                if m.scales.is_empty() {
                    return Err(Error::OutOfRange(format!("model has no parameters for scale {s}")));
                }
            }
        }
        Ok(self)
    }

    pub fn cues(&self, img: &MultiChannelImage) -> Result<CueStack> {
        prepare_cues(img, self.codebook.as_ref(), &self.features)
    }

    pub fn responses(&self, cues: &CueStack) -> Result<OrientedResponses> {
        match &self.model {
            DistanceModel::ChiSquare(m) => chi_square_responses(cues, &self.features.scales, m),
            DistanceModel::Lbm(m) => lbm_responses(cues, m),
        }
    }

    pub fn detect(&self, img: &MultiChannelImage) -> Result<Detection> {
        self.detect_timed(img).map(|(d, _)| d)
    }

    pub fn detect_cues(&self, cues: &CueStack) -> Result<Detection> {
        let (raw, thin) = postprocess(&self.responses(cues)?, self.smooth_radius);
        Ok(Detection { raw, thin })
    }

    pub fn detect_timed(&self, img: &MultiChannelImage) -> Result<(Detection, StageTimes)> {
        let t0 = Instant::now();
        let cues = self.cues(img)?;
        let t1 = Instant::now();
        let resp = self.responses(&cues)?;
        let t2 = Instant::now();
        let (raw, thin) = postprocess(&resp, self.smooth_radius);
        let t3 = Instant::now();
        Ok((
            Detection { raw, thin },
            StageTimes {
                features: t1 - t0,
                distance: t2 - t1,
                postproc: t3 - t2,
            },
        ))
    }
}
