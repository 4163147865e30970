//! Versioned TOML model files for both metrics.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{BinConfig, ScaleConfig};
use crate::imgproc::TextonCodebook;
use crate::io_util::write_atomic;
use crate::metric::{ChiSquareModel, DistanceKernel, FeatureEcho, MetricModel, ScaleParams};

pub const MODEL_VERSION: u32 = 1;
const LBM_FORMAT: &str = "edgemetric-lbm";
const CHI2_FORMAT: &str = "edgemetric-chi2";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LbmFile {
    format: String,
    version: u32,
    kernel: DistanceKernel,
    sigma: f64,
    n: usize,
    m: usize,
    features: FeatureEcho,
    scales: Vec<ScaleParams>,
    textons: Option<TextonCodebook>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Chi2File {
    format: String,
    version: u32,
    model: ChiSquareModel,
    features: FeatureEcho,
    textons: Option<TextonCodebook>,
}

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
}

/// Fitted χ² weights with the feature setup they belong to.
#[derive(Clone, Debug, PartialEq)]
pub struct ChiSquareBundle {
    pub model: ChiSquareModel,
    pub features: FeatureEcho,
    pub textons: Option<TextonCodebook>,
}

/// Any model file.
#[derive(Clone, Debug, PartialEq)]
pub enum SavedModel {
    Lbm(MetricModel),
    ChiSquare(ChiSquareBundle),
}

fn format_err(path: &Path, msg: impl std::fmt::Display) -> Error {
    Error::ModelFormat(format!("{}: {msg}", path.display()))
}

pub fn model_to_toml(model: &MetricModel) -> Result<String> {
    model.validate()?;
    let file = LbmFile {
        format: LBM_FORMAT.into(),
        version: MODEL_VERSION,
        kernel: model.kernel,
        sigma: model.sigma,
        n: model.n,
        m: model.m,
        features: model.features.clone(),
        scales: model.scales.clone(),
        textons: model.textons.clone(),
    };
    toml::to_string(&file).map_err(|e| Error::ModelFormat(e.to_string()))
}

pub fn save_model(model: &MetricModel, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), model_to_toml(model)?.as_bytes())
}

pub fn save_chi_square(bundle: &ChiSquareBundle, path: impl AsRef<Path>) -> Result<()> {
    if bundle.model.n_scales() != bundle.features.radii.len() {
        return Err(Error::Dimension(format!(
            "{} weight rows for {} radii",
            bundle.model.n_scales(),
            bundle.features.radii.len()
        )));
    }
    let file = Chi2File {
        format: CHI2_FORMAT.into(),
        version: MODEL_VERSION,
        model: bundle.model.clone(),
        features: bundle.features.clone(),
        textons: bundle.textons.clone(),
    };
    let text = toml::to_string(&file).map_err(|e| Error::ModelFormat(e.to_string()))?;
    write_atomic(path.as_ref(), text.as_bytes())
}

fn check_features(path: &Path, f: &FeatureEcho, textons: Option<&TextonCodebook>) -> Result<()> {
    f.bins.validate().map_err(|e| format_err(path, e))?;
    f.scale_config().validate().map_err(|e| format_err(path, e))?;
    if let Some(cb) = textons {
        if cb.k() != f.bins.0[3] {
            return Err(format_err(
                path,
                format!("{} textons but {} texton bins", cb.k(), f.bins.0[3]),
            ));
        }
    }
    Ok(())
}

pub fn parse_model(text: &str, path: &Path) -> Result<SavedModel> {
    let header: Header = toml::from_str(text).map_err(|e| format_err(path, e))?;
    if header.version != MODEL_VERSION {
        return Err(format_err(
            path,
            format!("version {} is not supported (expected {MODEL_VERSION})", header.version),
        ));
    }
    match header.format.as_str() {
        LBM_FORMAT => {
            let f: LbmFile = toml::from_str(text).map_err(|e| format_err(path, e))?;
            check_features(path, &f.features, f.textons.as_ref())?;
            let model = MetricModel {
                kernel: f.kernel,
                sigma: f.sigma,
                n: f.n,
                m: f.m,
                scales: f.scales,
                features: f.features,
                textons: f.textons,
            };
            model.validate().map_err(|e| format_err(path, e))?;
            Ok(SavedModel::Lbm(model))
        }
        CHI2_FORMAT => {
            let f: Chi2File = toml::from_str(text).map_err(|e| format_err(path, e))?;
            check_features(path, &f.features, f.textons.as_ref())?;
            if f.model.n_scales() != f.features.radii.len() {
                return Err(format_err(
                    path,
                    format!("{} weight rows for {} radii", f.model.n_scales(), f.features.radii.len()),
                ));
            }
            Ok(SavedModel::ChiSquare(ChiSquareBundle {
                model: f.model,
                features: f.features,
                textons: f.textons,
            }))
        }
        other => Err(format_err(path, format!("unknown format '{other}'"))),
    }
}

pub fn load_any(path: impl AsRef<Path>) -> Result<SavedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text, path)
}

/// Loads a learned-metric model file.
pub fn load_model(path: impl AsRef<Path>) -> Result<MetricModel> {
    let path = path.as_ref();
    match load_any(path)? {
        SavedModel::Lbm(m) => Ok(m),
        SavedModel::ChiSquare(_) => Err(format_err(path, "holds χ² weights, not a learned metric")),
    }
}

/// Errors unless the model was built for exactly these bins and scales.
pub fn check_compatible(model: &MetricModel, bins: BinConfig, scales: &ScaleConfig) -> Result<()> {
    let f = &model.features;
    if f.bins != bins {
        return Err(Error::Incompatible(format!(
            "model bins {:?}, features use {:?}",
            f.bins.0, bins.0
        )));
    }
    if f.radii != scales.radii || f.n_orient != scales.n_orient {
        return Err(Error::Incompatible(format!(
            "model radii {:?} x {} orientations, features use {:?} x {}",
            f.radii, f.n_orient, scales.radii, scales.n_orient
        )));
    }
    Ok(())
}
