//! Histogram distances: the χ² difference with weighted cue fusion, and the
//! learned boundary metric (per-scale logistic transform followed by an RBF
//! or linear kernel distance).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{BinConfig, ScaleConfig, NUM_CUES};
use crate::imgproc::TextonCodebook;

/// Clamp applied to distances before they enter a log loss.
pub const DISTANCE_EPS: f64 = 1e-12;

/// χ² difference `½ Σ (u−v)² / (u+v)`, skipping bins where `u + v = 0`.
pub fn chi_square(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Dimension(format!(
            "histogram lengths {} and {}",
            u.len(),
            v.len()
        )));
    }
    if let Some(x) = u.iter().chain(v).find(|x| !(**x >= 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "histogram entry {x} is negative or NaN"
        )));
    }
    Ok(chi_square_unchecked(u, v))
}

#[inline]
pub(crate) fn chi_square_unchecked(u: &[f64], v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&a, &b) in u.iter().zip(v) {
        let s = a + b;
        if s > 0.0 {
            let d = a - b;
            acc += d * d / s;
        }
    }
    0.5 * acc
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    Learned,
    Equal,
}

/// Non-negative fusion weights for the per-(cue, scale) χ² distances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareModel {
    /// `weights[s][c]`, one row per scale in use.
    pub weights: Vec<[f64; NUM_CUES]>,
    pub mode: WeightMode,
}

impl ChiSquareModel {
    /// Equal weights summing to one over `n_scales * 4` distances.
    pub fn equal(n_scales: usize) -> Self {
        let w = 1.0 / (n_scales * NUM_CUES) as f64;
        ChiSquareModel {
            weights: vec![[w; NUM_CUES]; n_scales],
            mode: WeightMode::Equal,
        }
    }

    pub fn learned(weights: Vec<[f64; NUM_CUES]>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter("no χ² weights".into()));
        }
        if weights.iter().flatten().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter(
                "χ² weights must be finite and non-negative".into(),
            ));
        }
        Ok(ChiSquareModel {
            weights,
            mode: WeightMode::Learned,
        })
    }

    pub fn n_scales(&self) -> usize {
        self.weights.len()
    }
}

/// Weighted sum `Σ_s Σ_c w[s][c] d[s][c]`.
pub fn chi_square_combined(dists: &[[f64; NUM_CUES]], model: &ChiSquareModel) -> Result<f64> {
    if dists.len() != model.weights.len() {
        return Err(Error::Dimension(format!(
            "{} scales of distances for {} scales of weights",
            dists.len(),
            model.weights.len()
        )));
    }
    Ok(dists
        .iter()
        .zip(&model.weights)
        .map(|(d, w)| d.iter().zip(w).map(|(a, b)| a * b).sum::<f64>())
        .sum())
}

/// Numerically stable logistic function.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `Ũ_n = σ(α_n + Σ_m β_{n,m} U_m)` with `beta` row-major `N × M`.
pub fn logistic_transform(u: &[f64], alpha: &[f64], beta: &[f64]) -> Result<Vec<f64>> {
    let (n, m) = (alpha.len(), u.len());
    if beta.len() != n * m {
        return Err(Error::Dimension(format!(
            "beta has {} entries, expected {n}x{m}",
            beta.len()
        )));
    }
    Ok(logistic_transform_unchecked(u, alpha, beta))
}

pub(crate) fn logistic_transform_unchecked(u: &[f64], alpha: &[f64], beta: &[f64]) -> Vec<f64> {
    let m = u.len();
    alpha
        .iter()
        .zip(beta.chunks_exact(m))
        .map(|(a, row)| sigmoid(a + row.iter().zip(u).map(|(b, x)| b * x).sum::<f64>()))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceKernel {
    /// `1 − exp(−‖Ũ−Ṽ‖² / 2σ²)`
    Rbf,
    /// `(1/N) Σ |Ũ_n − Ṽ_n|`
    Linear,
}

impl DistanceKernel {
    pub fn name(self) -> &'static str {
        match self {
            DistanceKernel::Rbf => "rbf",
            DistanceKernel::Linear => "linear",
        }
    }
}

/// Distance between two transformed vectors.
pub fn kernel_distance(ut: &[f64], vt: &[f64], kernel: DistanceKernel, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma {sigma} must be > 0")));
    }
    if ut.len() != vt.len() || ut.is_empty() {
        return Err(Error::Dimension(format!(
            "transformed lengths {} and {}",
            ut.len(),
            vt.len()
        )));
    }
    Ok(kernel_distance_unchecked(ut, vt, kernel, sigma))
}

#[inline]
pub(crate) fn kernel_distance_unchecked(
    ut: &[f64],
    vt: &[f64],
    kernel: DistanceKernel,
    sigma: f64,
) -> f64 {
    match kernel {
        DistanceKernel::Rbf => {
            let q: f64 = ut.iter().zip(vt).map(|(a, b)| (a - b) * (a - b)).sum();
            1.0 - (-q / (2.0 * sigma * sigma)).exp()
        }
        DistanceKernel::Linear => {
            ut.iter().zip(vt).map(|(a, b)| (a - b).abs()).sum::<f64>() / ut.len() as f64
        }
    }
}

/// Arithmetic mean of per-scale distances.
pub fn lbm_combined(per_scale: &[f64]) -> Result<f64> {
    if per_scale.is_empty() {
        return Err(Error::InvalidParameter("no per-scale distances".into()));
    }
    Ok(per_scale.iter().sum::<f64>() / per_scale.len() as f64)
}

/// Logistic parameters of one scale: `alpha` (N) and row-major `beta` (N × M).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    /// Index into the feature configuration's radii.
    pub scale_index: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

/// Feature configuration the model was trained against.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureEcho {
    pub bins: BinConfig,
    pub radii: Vec<u32>,
    pub n_orient: usize,
}

impl FeatureEcho {
    pub fn new(bins: BinConfig, cfg: &ScaleConfig) -> Self {
        FeatureEcho {
            bins,
            radii: cfg.radii.clone(),
            n_orient: cfg.n_orient,
        }
    }

    pub fn scale_config(&self) -> ScaleConfig {
        ScaleConfig {
            radii: self.radii.clone(),
            n_orient: self.n_orient,
        }
    }
}

/// The learned boundary metric.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricModel {
    pub kernel: DistanceKernel,
    pub sigma: f64,
    /// Output dimension of the logistic transform.
    pub n: usize,
    /// Input dimension (concatenated histogram length).
    pub m: usize,
    pub scales: Vec<ScaleParams>,
    pub features: FeatureEcho,
    /// Texton codebook the cue histograms were built with, when fixed.
    pub textons: Option<TextonCodebook>,
}

impl MetricModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma {} must be > 0", self.sigma)));
        }
        if self.n == 0 || self.m == 0 {
            return Err(Error::InvalidParameter("N and M must be >= 1".into()));
        }
        if self.m != self.features.bins.total() {
            return Err(Error::Dimension(format!(
                "M = {} but bins {:?} sum to {}",
                self.m,
                self.features.bins.0,
                self.features.bins.total()
            )));
        }
        if self.scales.is_empty() {
            return Err(Error::InvalidParameter("model has no scales".into()));
        }
        for p in &self.scales {
            if p.scale_index >= self.features.radii.len() {
                return Err(Error::OutOfRange(format!(
                    "scale index {} with {} radii",
                    p.scale_index,
                    self.features.radii.len()
                )));
            }
            if p.alpha.len() != self.n || p.beta.len() != self.n * self.m {
                return Err(Error::Dimension(format!(
                    "scale {}: alpha {} / beta {} for N={} M={}",
                    p.scale_index,
                    p.alpha.len(),
                    p.beta.len(),
                    self.n,
                    self.m
                )));
            }
            if p.alpha.iter().chain(&p.beta).any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "scale {}: non-finite parameter",
                    p.scale_index
                )));
            }
        }
        Ok(())
    }

    pub fn n_scales(&self) -> usize {
        self.scales.len()
    }

    /// Transformed vector of one histogram under the parameters of model scale `s`.
    pub fn transform(&self, u: &[f64], s: usize) -> Result<Vec<f64>> {
        let p = self.scale(s)?;
        if u.len() != self.m {
            return Err(Error::Dimension(format!("histogram length {} != M={}", u.len(), self.m)));
        }
        logistic_transform(u, &p.alpha, &p.beta)
    }

    fn scale(&self, s: usize) -> Result<&ScaleParams> {
        self.scales
            .get(s)
            .ok_or_else(|| Error::OutOfRange(format!("model scale {s} of {}", self.scales.len())))
    }

    /// Learned distance at model scale `s` (position in `self.scales`).
    pub fn lbm_distance(&self, u: &[f64], v: &[f64], s: usize) -> Result<f64> {
        let ut = self.transform(u, s)?;
        let vt = self.transform(v, s)?;
        kernel_distance(&ut, &vt, self.kernel, self.sigma)
    }

    /// Mean learned distance over all model scales; `pairs[s]` is `(U_s, V_s)`.
    pub fn lbm_multi(&self, pairs: &[(&[f64], &[f64])]) -> Result<f64> {
        if pairs.len() != self.scales.len() {
            return Err(Error::Dimension(format!(
                "{} histogram pairs for {} scales",
                pairs.len(),
                self.scales.len()
            )));
        }
        let d: Vec<f64> = pairs
            .iter()
            .enumerate()
            .map(|(s, (u, v))| self.lbm_distance(u, v, s))
            .collect::<Result<_>>()?;
        lbm_combined(&d)
    }
}
