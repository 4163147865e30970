//! Oriented Gaussian-derivative filter bank used to build texton descriptors.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};

use super::image::{ColorSpace, MultiChannelImage};

/// Ratio of the along-edge to across-edge Gaussian sigma for oriented kernels.
pub const ELONGATION: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelKind {
    /// Second derivative across the orientation.
    Even,
    /// First derivative across the orientation.
    Odd,
    /// Difference of Gaussians.
    CenterSurround,
}

/// Square kernel of odd side length, zero mean and unit L1 norm.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    pub size: usize,
    pub data: Vec<f64>,
    pub orientation: f64,
    pub scale: f64,
    pub kind: KernelKind,
}

impl Kernel {
    pub fn half(&self) -> usize {
        self.size / 2
    }

    /// Kernel rotated by pi, i.e. with both axes reversed.
    pub fn rotated_half_turn(&self) -> Kernel {
        let mut k = self.clone();
        k.data.reverse();
        k
    }

    fn from_fn(
        half: usize,
        orientation: f64,
        scale: f64,
        kind: KernelKind,
        f: impl Fn(f64, f64) -> f64,
    ) -> Kernel {
        let size = 2 * half + 1;
        let h = half as isize;
        let mut data = Vec::with_capacity(size * size);
        for y in -h..=h {
            for x in -h..=h {
                data.push(f(x as f64, y as f64));
            }
        }
        let mean = data.iter().sum::<f64>() / data.len() as f64;
        data.iter_mut().for_each(|v| *v -= mean);
        let l1: f64 = data.iter().map(|v| v.abs()).sum();
        data.iter_mut().for_each(|v| *v /= l1);
        Kernel {
            size,
            data,
            orientation,
            scale,
            kind,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterBank {
    pub kernels: Vec<Kernel>,
}

/// Builds even/odd pairs at every (orientation, scale) followed by one
/// center-surround kernel per scale: `2 * n_orient * scales.len() + scales.len()` kernels.
pub fn make_filter_bank(n_orient: usize, scales: &[f64]) -> Result<FilterBank> {
    if n_orient == 0 {
        return Err(Error::InvalidParameter("n_orient must be >= 1".into()));
    }
    if scales.is_empty() {
        return Err(Error::InvalidParameter("filter bank needs at least one scale".into()));
    }
    if let Some(s) = scales.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        return Err(Error::InvalidParameter(format!("scale {s} must be positive")));
    }
    let mut kernels = Vec::with_capacity(scales.len() * (2 * n_orient + 1));
    for &sigma in scales {
        let along = ELONGATION * sigma;
        let half = (3.0 * along).ceil() as usize;
        for k in 0..n_orient {
            let theta = k as f64 * PI / n_orient as f64;
            let (sin, cos) = theta.sin_cos();
            let gauss = move |x: f64, y: f64| {
                let u = x * cos + y * sin;
                let v = -x * sin + y * cos;
                let g = (-(u * u) / (2.0 * along * along) - (v * v) / (2.0 * sigma * sigma)).exp();
                (v, g)
            };
            kernels.push(Kernel::from_fn(half, theta, sigma, KernelKind::Even, |x, y| {
                let (v, g) = gauss(x, y);
                (v * v / (sigma * sigma) - 1.0) * g
            }));
            kernels.push(Kernel::from_fn(half, theta, sigma, KernelKind::Odd, |x, y| {
                let (v, g) = gauss(x, y);
                -v * g
            }));
        }
    }
    for &sigma in scales {
        let outer = sigma * std::f64::consts::SQRT_2;
        let half = (3.0 * outer).ceil() as usize;
        kernels.push(Kernel::from_fn(
            half,
            0.0,
            sigma,
            KernelKind::CenterSurround,
            |x, y| {
                let r2 = x * x + y * y;
                let inner = (-r2 / (2.0 * sigma * sigma)).exp() / (sigma * sigma);
                let surround = (-r2 / (2.0 * outer * outer)).exp() / (outer * outer);
                inner - surround
            },
        ));
    }
    Ok(FilterBank { kernels })
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

/// Symmetric-border padded copy of a single channel.
fn pad_reflect(values: &[f64], w: usize, h: usize, pad: usize) -> (Vec<f64>, usize) {
    let pw = w + 2 * pad;
    let ph = h + 2 * pad;
    let mut out = vec![0.0; pw * ph];
    for py in 0..ph {
        let sy = reflect(py as isize - pad as isize, h);
        for px in 0..pw {
            let sx = reflect(px as isize - pad as isize, w);
            out[py * pw + px] = values[sy * w + sx];
        }
    }
    (out, pw)
}

/// Correlates a single channel with `kernel` using symmetric borders.
pub fn convolve(values: &[f64], w: usize, h: usize, kernel: &Kernel) -> Vec<f64> {
    let half = kernel.half();
    let (padded, pw) = pad_reflect(values, w, h, half);
    convolve_padded(&padded, pw, half, w, h, kernel)
}

fn convolve_padded(
    padded: &[f64],
    pw: usize,
    pad: usize,
    w: usize,
    h: usize,
    kernel: &Kernel,
) -> Vec<f64> {
    let half = kernel.half();
    let size = kernel.size;
    let off = pad - half;
    let mut out = vec![0.0; w * h];
    for (y, row) in out.chunks_exact_mut(w).enumerate() {
        for ky in 0..size {
            let krow = &kernel.data[ky * size..(ky + 1) * size];
            let base = (y + off + ky) * pw + off;
            for (x, o) in row.iter_mut().enumerate() {
                let src = &padded[base + x..base + x + size];
                let mut acc = 0.0;
                for (a, b) in src.iter().zip(krow) {
                    acc += a * b;
                }
                *o += acc;
            }
        }
    }
    out
}

impl FilterBank {
    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn max_half(&self) -> usize {
        self.kernels.iter().map(Kernel::half).max().unwrap_or(0)
    }

    /// One response plane per kernel, in bank order.
    pub fn responses(&self, gray: &MultiChannelImage) -> Result<Vec<Vec<f64>>> {
        if gray.color_space() != ColorSpace::Gray {
            return Err(Error::ColorSpace {
                expected: "Gray",
                actual: gray.color_space().name(),
            });
        }
        let (w, h) = (gray.width(), gray.height());
        let pad = self.max_half();
        let (padded, pw) = pad_reflect(gray.data(), w, h, pad);
        Ok(self
            .kernels
            .par_iter()
            .map(|k| convolve_padded(&padded, pw, pad, w, h, k))
            .collect())
    }
}
