//! From oriented responses to a single-pixel-wide boundary map: orientation
//! fusion, Gaussian noise reduction and oriented non-maximum suppression.

use std::path::Path;

use crate::error::{Error, Result};
use crate::imgproc::save_gray16;

/// Per-pixel, per-orientation boundary responses, layout `[pixel][orientation]`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrientedResponses {
    pub width: usize,
    pub height: usize,
    pub n_orient: usize,
    pub values: Vec<f64>,
}

impl OrientedResponses {
    pub fn new(width: usize, height: usize, n_orient: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height * n_orient || n_orient == 0 {
            return Err(Error::Dimension(format!(
                "{} responses for {width}x{height}x{n_orient}",
                values.len()
            )));
        }
        Ok(Self {
            width,
            height,
            n_orient,
            values,
        })
    }

    pub fn at(&self, x: usize, y: usize, o: usize) -> f64 {
        self.values[(y * self.width + x) * self.n_orient + o]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryMap {
    pub width: usize,
    pub height: usize,
    pub n_orient: usize,
    /// Row-major strengths in `[0, 1]`.
    pub strength: Vec<f64>,
    /// Row-major argmax orientation indices.
    pub orientation: Vec<u16>,
    pub thinned: bool,
}

impl BoundaryMap {
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.strength[y * self.width + x]
    }

    pub fn max_strength(&self) -> f64 {
        self.strength.iter().copied().fold(0.0, f64::max)
    }

    /// Diameter angle of the orientation stored at pixel index `i`.
    pub fn angle(&self, i: usize) -> f64 {
        self.orientation[i] as f64 * std::f64::consts::PI / self.n_orient as f64
    }

    /// Multiplies every strength by `factor`.
    pub fn scaled(&self, factor: f64) -> BoundaryMap {
        let mut m = self.clone();
        m.strength.iter_mut().for_each(|v| *v *= factor);
        m
    }

    /// Writes strengths as a 16-bit grayscale PNG.
    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        save_gray16(&self.strength, self.width, self.height, path)
    }
}

/// Maximum over orientations; ties keep the lowest orientation index.
pub fn fuse_orientations(responses: &OrientedResponses) -> BoundaryMap {
    let no = responses.n_orient;
    let mut strength = Vec::with_capacity(responses.width * responses.height);
    let mut orientation = Vec::with_capacity(strength.capacity());
    for px in responses.values.chunks_exact(no) {
        let mut best = 0;
        for (o, &v) in px.iter().enumerate().skip(1) {
            if v > px[best] {
                best = o;
            }
        }
        strength.push(px[best].clamp(0.0, 1.0));
        orientation.push(best as u16);
    }
    BoundaryMap {
        width: responses.width,
        height: responses.height,
        n_orient: no,
        strength,
        orientation,
        thinned: false,
    }
}

fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let half = (3.0 * sigma).ceil() as isize;
    let taps: Vec<f64> = (-half..=half)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut i = i;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - i - 1;
        } else {
            return i as usize;
        }
    }
}

/// Separable Gaussian smoothing of the strengths with `sigma = radius / 2`
/// and symmetric borders. Orientations are left untouched.
pub fn smooth(map: &BoundaryMap, radius: f64) -> BoundaryMap {
    if radius <= 0.0 {
        return map.clone();
    }
    let taps = gaussian_taps(radius / 2.0);
    let half = (taps.len() / 2) as isize;
    let (w, h) = (map.width, map.height);
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let row = &map.strength[y * w..(y + 1) * w];
        for x in 0..w {
            tmp[y * w + x] = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * row[reflect(x as isize + k as isize - half, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let v: f64 = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * tmp[reflect(y as isize + k as isize - half, h) * w + x])
                .sum();
            out[y * w + x] = v.clamp(0.0, 1.0);
        }
    }
    BoundaryMap {
        strength: out,
        ..map.clone()
    }
}

/// Bilinear sample at real coordinates, clamping to the image.
pub fn bilinear(values: &[f64], w: usize, h: usize, x: f64, y: f64) -> f64 {
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    // weight form is monotone in both endpoints under rounding; equal
    // endpoints short-circuit so plateaus stay exact
    let lerp = |a: f64, b: f64, t: f64| if a == b { a } else { (1.0 - t) * a + t * b };
    let top = lerp(values[y0 * w + x0], values[y0 * w + x1], fx);
    let bot = lerp(values[y1 * w + x0], values[y1 * w + x1], fx);
    lerp(top, bot, fy)
}

/// The two interpolated neighbors one pixel away along the normal of the
/// orientation stored at `(x, y)`.
pub fn normal_neighbors(map: &BoundaryMap, x: usize, y: usize) -> (f64, f64) {
    let (sin, cos) = map.angle(y * map.width + x).sin_cos();
    // snap the cos(pi/2) residue so axis-aligned normals sample exact pixels
    let snap = |c: f64| if c.abs() < 1e-12 { 0.0 } else { c };
    let (nx, ny) = (snap(-sin), snap(cos));
    let (fx, fy) = (x as f64, y as f64);
    (
        bilinear(&map.strength, map.width, map.height, fx + nx, fy + ny),
        bilinear(&map.strength, map.width, map.height, fx - nx, fy - ny),
    )
}

/// Keeps a pixel only where its strength is at least both normal neighbors.
pub fn oriented_nms(map: &BoundaryMap) -> BoundaryMap {
    let (w, h) = (map.width, map.height);
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let s = map.strength[y * w + x];
            if s <= 0.0 {
                continue;
            }
            let (a, b) = normal_neighbors(map, x, y);
            if s >= a && s >= b {
                out[y * w + x] = s;
            }
        }
    }
    BoundaryMap {
        strength: out,
        thinned: true,
        ..map.clone()
    }
}

/// Number of retained pixels with a strictly greater interpolated normal neighbor.
pub fn thinning_violations(map: &BoundaryMap) -> usize {
    let mut n = 0;
    for y in 0..map.height {
        for x in 0..map.width {
            let s = map.get(x, y);
            if s > 0.0 {
                let (a, b) = normal_neighbors(map, x, y);
                if a > s || b > s {
                    n += 1;
                }
            }
        }
    }
    n
}

/// Default smoothing radius in pixels.
pub const DEFAULT_SMOOTH_RADIUS: f64 = 1.0;

/// Fuse, smooth and thin in one call, returning the raw (fused and smoothed)
/// and thinned maps.
pub fn postprocess(responses: &OrientedResponses, radius: f64) -> (BoundaryMap, BoundaryMap) {
    let raw = smooth(&fuse_orientations(responses), radius);
    let thin = oriented_nms(&raw);
    (raw, thin)
}
