//! Seeded synthetic corpora with known region borders.
//!
//! Every image is a small set of labelled regions. The ground truth marks the
//! pixels that have a 4-neighbour with a higher label, thinned to one pixel.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{thin_binary, BinaryMap};
use crate::imgproc::color::{linear_to_srgb, srgb_to_linear, LUMINANCE};
use crate::imgproc::{add_gaussian_noise, save_image_u8, ColorSpace, MultiChannelImage};
use crate::io_util::write_atomic;

use super::dataset::{load_dataset, DatasetItem, Split};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SynthKind {
    BrightnessStep,
    ColorStep,
    Texture,
    Mixed,
}

impl SynthKind {
    pub const ALL: [SynthKind; 4] = [
        SynthKind::BrightnessStep,
        SynthKind::ColorStep,
        SynthKind::Texture,
        SynthKind::Mixed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SynthKind::BrightnessStep => "brightness",
            SynthKind::ColorStep => "color",
            SynthKind::Texture => "texture",
            SynthKind::Mixed => "mixed",
        }
    }

    pub fn valid_names() -> String {
        SynthKind::ALL.map(SynthKind::name).join(", ")
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SynthKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "unknown corpus kind '{s}' (valid kinds: {})",
                SynthKind::valid_names()
            ))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitCounts {
    pub fn get(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Val => self.val,
            Split::Test => self.test,
        }
    }

    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }
}

/// Noise variance of the default corpus (standard deviation about 8/255).
pub const DEFAULT_CORPUS_NOISE: f64 = 0.001;

/// Corpus description. Kinds are assigned round-robin within each split.
#[derive(Clone, Debug, PartialEq)]
pub struct CorpusSpec {
    pub kinds: Vec<SynthKind>,
    pub counts: SplitCounts,
    pub width: usize,
    pub height: usize,
    /// Nominal fill contrast in `[0, 1]`.
    pub contrast: f64,
    /// Gaussian noise variance added to every image (0 disables it). The
    /// default, [`DEFAULT_CORPUS_NOISE`], is mild sensor-like noise.
    pub noise: f64,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            kinds: SynthKind::ALL.to_vec(),
            counts: SplitCounts {
                train: 50,
                val: 20,
                test: 20,
            },
            width: 96,
            height: 96,
            contrast: 0.3,
            noise: DEFAULT_CORPUS_NOISE,
            seed: 0,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    kinds: Option<Vec<String>>,
    counts: Option<SplitCounts>,
    size: Option<[usize; 2]>,
    contrast: Option<f64>,
    noise: Option<f64>,
    seed: Option<u64>,
}

impl CorpusSpec {
    /// Parses the TOML form; omitted keys keep their defaults.
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: SpecFile =
            toml::from_str(text).map_err(|e| Error::InvalidParameter(format!("corpus spec: {e}")))?;
        let d = CorpusSpec::default();
        let kinds = match file.kinds {
            Some(k) => k.iter().map(|s| s.parse()).collect::<Result<Vec<_>>>()?,
            None => d.kinds,
        };
        let [width, height] = file.size.unwrap_or([d.width, d.height]);
        let spec = CorpusSpec {
            kinds,
            counts: file.counts.unwrap_or(d.counts),
            width,
            height,
            contrast: file.contrast.unwrap_or(d.contrast),
            noise: file.noise.unwrap_or(d.noise),
            seed: file.seed.unwrap_or(d.seed),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        let file = SpecFile {
            kinds: Some(self.kinds.iter().map(|k| k.name().to_string()).collect()),
            counts: Some(self.counts),
            size: Some([self.width, self.height]),
            contrast: Some(self.contrast),
            noise: Some(self.noise),
            seed: Some(self.seed),
        };
        toml::to_string(&file).expect("plain data serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(format!("corpus spec: {m}")));
        if self.kinds.is_empty() {
            return bad(format!("kinds is empty (valid kinds: {})", SynthKind::valid_names()));
        }
        if self.width < 16 || self.height < 16 {
            return bad(format!("size {}x{} is below 16x16", self.width, self.height));
        }
        if !(self.contrast > 0.0 && self.contrast <= 1.0) {
            return bad(format!("contrast {} is outside (0, 1]", self.contrast));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad(format!("noise {} must be finite and >= 0", self.noise));
        }
        if self.counts.total() == 0 {
            return bad("all split counts are zero".into());
        }
        Ok(())
    }

    /// Image id of the `index`-th item of a split.
    pub fn item_id(split: Split, index: usize) -> String {
        format!("{}_{index:03}", split.name())
    }
}

/// One generated image and its single annotation.
#[derive(Clone, Debug)]
pub struct SynthSample {
    pub kind: SynthKind,
    pub image: MultiChannelImage,
    pub labels: Vec<u8>,
    pub gt: BinaryMap,
}

#[derive(Clone, Copy, Debug)]
enum Fill {
    Flat([f64; 3]),
    Grating {
        mean: f64,
        amplitude: f64,
        period: f64,
        angle: f64,
        phase: f64,
    },
}

impl Fill {
    fn at(&self, x: f64, y: f64) -> [f64; 3] {
        match *self {
            Fill::Flat(c) => c,
            Fill::Grating {
                mean,
                amplitude,
                period,
                angle,
                phase,
            } => {
                let t = x * angle.cos() + y * angle.sin();
                let v = mean + amplitude * (2.0 * PI * t / period + phase).sin();
                [v; 3]
            }
        }
    }
}

/// A straight or bent line through `(cx, cy)`; label 1 lies on its positive side.
#[derive(Clone, Copy, Debug)]
struct Border {
    cx: f64,
    cy: f64,
    theta: f64,
    slopes: [f64; 2],
}

impl Border {
    fn random(rng: &mut impl Rng, w: usize, h: usize) -> Self {
        let cx = rng.random_range(0.3..0.7) * w as f64;
        let cy = rng.random_range(0.3..0.7) * h as f64;
        let theta = rng.random_range(0.0..PI);
        let slopes = if rng.random_bool(0.5) {
            [0.0, 0.0]
        } else {
            [rng.random_range(-0.7..0.7), rng.random_range(-0.7..0.7)]
        };
        Border { cx, cy, theta, slopes }
    }

    fn label(&self, x: f64, y: f64) -> u8 {
        let (s, c) = self.theta.sin_cos();
        let (dx, dy) = (x - self.cx, y - self.cy);
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        let g = if u < 0.0 { self.slopes[0] * u } else { self.slopes[1] * u };
        u8::from(v > g)
    }
}

fn gray(v: f64) -> [f64; 3] {
    [v; 3]
}

/// A unit direction in linear RGB with zero luminance change.
fn chroma_direction(rng: &mut impl Rng) -> [f64; 3] {
    let a = rng.random_range(0.0..2.0 * PI);
    // Orthonormal basis of the plane orthogonal to LUMINANCE.
    let n = LUMINANCE.iter().map(|v| v * v).sum::<f64>().sqrt();
    let l = LUMINANCE.map(|v| v / n);
    let e1 = {
        let v = [l[1], -l[0], 0.0];
        let m = (v[0] * v[0] + v[1] * v[1]).sqrt();
        v.map(|x| x / m)
    };
    let e2 = [
        l[1] * e1[2] - l[2] * e1[1],
        l[2] * e1[0] - l[0] * e1[2],
        l[0] * e1[1] - l[1] * e1[0],
    ];
    let (s, c) = a.sin_cos();
    [0, 1, 2].map(|i| c * e1[i] + s * e2[i])
}

/// Grey `level` shifted by `offset` (linear units) along chroma direction
/// `d`. The shift is capped so no channel clips, which keeps the luminance
/// (and L*) of the grey.
fn chroma_shift(level: f64, offset: f64, d: [f64; 3]) -> [f64; 3] {
    let lin = srgb_to_linear(level);
    let reach = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cap = lin.min(1.0 - lin) / reach;
    let t = offset.clamp(-cap, cap);
    d.map(|v| linear_to_srgb(lin + t * v))
}

fn two_fills(kind: SynthKind, contrast: f64, rng: &mut impl Rng) -> [Fill; 2] {
    let c = contrast * rng.random_range(0.7..1.0);
    let m = rng.random_range(0.35..0.65);
    match kind {
        SynthKind::BrightnessStep => {
            let (a, b) = (m - c / 2.0, m + c / 2.0);
            if rng.random_bool(0.5) {
                [Fill::Flat(gray(a)), Fill::Flat(gray(b))]
            } else {
                [Fill::Flat(gray(b)), Fill::Flat(gray(a))]
            }
        }
        SynthKind::ColorStep => {
            let d = chroma_direction(rng);
            [Fill::Flat(chroma_shift(m, c, d)), Fill::Flat(chroma_shift(m, -c, d))]
        }
        SynthKind::Texture | SynthKind::Mixed => {
            let period = rng.random_range(4.0..7.0);
            let angle = rng.random_range(0.0..PI);
            let amplitude = c / 2.0;
            let g = |angle: f64, phase: f64| Fill::Grating {
                mean: m,
                amplitude,
                period,
                angle,
                phase,
            };
            [
                g(angle, rng.random_range(0.0..2.0 * PI)),
                g(angle + PI / 2.0, rng.random_range(0.0..2.0 * PI)),
            ]
        }
    }
}

/// Fills for a Voronoi partition: each region gets its own grey level, and
/// some regions carry a grating or a colour shift on top.
fn region_fills(n: usize, contrast: f64, rng: &mut impl Rng) -> Vec<Fill> {
    let mut levels: Vec<f64> = (0..n)
        .map(|i| 0.5 + contrast * (i as f64 / (n - 1) as f64 - 0.5))
        .collect();
    for i in (1..n).rev() {
        levels.swap(i, rng.random_range(0..=i));
    }
    levels
        .into_iter()
        .map(|m| match rng.random_range(0..3) {
            0 => Fill::Flat(gray(m)),
            1 => {
                Fill::Flat(chroma_shift(m, 0.5 * contrast, chroma_direction(rng)))
            }
            _ => Fill::Grating {
                mean: m,
                amplitude: contrast / 2.0,
                period: rng.random_range(4.0..7.0),
                angle: rng.random_range(0.0..PI),
                phase: rng.random_range(0.0..2.0 * PI),
            },
        })
        .collect()
}

fn voronoi_labels(w: usize, h: usize, rng: &mut impl Rng) -> Vec<u8> {
    let n = rng.random_range(3..=4);
    let min_area = w * h / 12;
    let mut labels = vec![0u8; w * h];
    for _ in 0..200 {
        let seeds: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.random_range(0.0..w as f64), rng.random_range(0.0..h as f64)))
            .collect();
        let mut area = vec![0usize; n];
        for y in 0..h {
            for x in 0..w {
                let (xf, yf) = (x as f64, y as f64);
                let k = (0..n)
                    .min_by(|&a, &b| {
                        let da = (seeds[a].0 - xf).powi(2) + (seeds[a].1 - yf).powi(2);
                        let db = (seeds[b].0 - xf).powi(2) + (seeds[b].1 - yf).powi(2);
                        da.total_cmp(&db)
                    })
                    .expect("n >= 3");
                labels[y * w + x] = k as u8;
                area[k] += 1;
            }
        }
        if area.iter().all(|&a| a >= min_area) {
            break;
        }
    }
    labels
}

/// Marks pixels with a 4-neighbour of higher label, then thins.
pub fn border_from_labels(labels: &[u8], width: usize, height: usize) -> BinaryMap {
    let mut data = vec![false; width * height];
    for y in 0..height {
        for x in 0..width {
            let l = labels[y * width + x];
            let higher = (x > 0 && labels[y * width + x - 1] > l)
                || (x + 1 < width && labels[y * width + x + 1] > l)
                || (y > 0 && labels[(y - 1) * width + x] > l)
                || (y + 1 < height && labels[(y + 1) * width + x] > l);
            data[y * width + x] = higher;
        }
    }
    thin_binary(&BinaryMap::new(width, height, data).expect("sized"))
}

fn render(labels: &[u8], fills: &[Fill], w: usize, h: usize) -> MultiChannelImage {
    let mut data = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            let c = fills[labels[y * w + x] as usize].at(x as f64, y as f64);
            data.extend(c.map(|v| v.clamp(0.0, 1.0)));
        }
    }
    MultiChannelImage::new(w, h, 3, data, ColorSpace::Rgb).expect("sized")
}

/// Draws one image of the given kind.
pub fn synth_sample(
    kind: SynthKind,
    width: usize,
    height: usize,
    contrast: f64,
    noise: f64,
    rng: &mut impl Rng,
) -> Result<SynthSample> {
    let (labels, fills) = match kind {
        SynthKind::Mixed => {
            let labels = voronoi_labels(width, height, rng);
            let n = *labels.iter().max().expect("non-empty") as usize + 1;
            (labels, region_fills(n.max(2), contrast, rng))
        }
        _ => {
            let border = Border::random(rng, width, height);
            let labels = (0..width * height)
                .map(|i| border.label((i % width) as f64, (i / width) as f64))
                .collect();
            (labels, two_fills(kind, contrast, rng).to_vec())
        }
    };
    let mut image = render(&labels, &fills, width, height);
    if noise > 0.0 {
        image = add_gaussian_noise(&image, noise, rng.random())?;
    }
    let gt = border_from_labels(&labels, width, height);
    Ok(SynthSample {
        kind,
        image,
        labels,
        gt,
    })
}

/// A vertical grey step: columns `< column` at `0.5 - contrast/2`, the rest
/// at `0.5 + contrast/2`.
pub fn vertical_step(width: usize, height: usize, column: usize, contrast: f64) -> SynthSample {
    let labels: Vec<u8> = (0..width * height).map(|i| u8::from(i % width >= column)).collect();
    let fills = [
        Fill::Flat(gray(0.5 - contrast / 2.0)),
        Fill::Flat(gray(0.5 + contrast / 2.0)),
    ];
    SynthSample {
        kind: SynthKind::BrightnessStep,
        image: render(&labels, &fills, width, height),
        gt: border_from_labels(&labels, width, height),
        labels,
    }
}

/// Per-item generator; independent of how many items other splits hold.
fn item_rng(seed: u64, split: Split, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = match split {
        Split::Train => 0u64,
        Split::Val => 1,
        Split::Test => 2,
    };
    rng.set_stream((s << 32) | index as u64);
    rng
}

/// Generates a sample in memory exactly as [`synth_generate`] would write it.
pub fn synth_item(spec: &CorpusSpec, seed: u64, split: Split, index: usize) -> Result<SynthSample> {
    let kind = spec.kinds[index % spec.kinds.len()];
    let mut rng = item_rng(seed, split, index);
    synth_sample(kind, spec.width, spec.height, spec.contrast, spec.noise, &mut rng)
}

/// Writes the corpus under `root` in the dataset layout and returns its items.
/// `seed` overrides `spec.seed`; the effective spec is saved as `corpus.toml`.
pub fn synth_generate(spec: &CorpusSpec, seed: u64, root: impl AsRef<Path>) -> Result<Vec<DatasetItem>> {
    spec.validate()?;
    let root = root.as_ref();
    for split in Split::ALL {
        let n = spec.counts.get(split);
        if n == 0 {
            continue;
        }
        let img_dir = root.join("images").join(split.name());
        let gt_dir = root.join("groundTruth").join(split.name());
        for d in [&img_dir, &gt_dir] {
            std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
        }
        for index in 0..n {
            let sample = synth_item(spec, seed, split, index)?;
            let id = CorpusSpec::item_id(split, index);
            save_image_u8(&sample.image, img_dir.join(format!("{id}.png")))?;
            sample.gt.save(gt_dir.join(format!("{id}_0.png")))?;
        }
    }
    let effective = CorpusSpec {
        seed,
        ..spec.clone()
    };
    write_atomic(&root.join("corpus.toml"), effective.to_toml().as_bytes())?;
    load_dataset(root)
}
