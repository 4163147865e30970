//! Detects boundaries in a synthetic color step with equal-weight χ² and
//! scores the thinned map against its ground truth.
//!
//! `cargo run --release --example detect_image [out_dir]`

use edgemetric::data::synth_sample;
use edgemetric::data::SynthKind;
use edgemetric::detect::{Detector, FeatureConfig};
use edgemetric::eval::{default_thresholds, image_pr, Tolerance};
use edgemetric::metric::ChiSquareModel;
use rand::SeedableRng;

fn main() -> edgemetric::Result<()> {
    let out = std::path::PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let s = synth_sample(SynthKind::ColorStep, 96, 96, 0.3, 0.0, &mut rng)?;
    let features = FeatureConfig::default();
    let det = Detector::chi_square(features, ChiSquareModel::equal(4), None);
    let (d, times) = det.detect_timed(&s.image)?;
    println!("stages: {times:?}");
    std::fs::create_dir_all(&out).map_err(|e| edgemetric::Error::Io { path: out.clone(), source: e })?;
    d.raw.save_png(out.join("step_raw.png"))?;
    d.thin.save_png(out.join("step_thin.png"))?;
    let thresholds = default_thresholds(33);
    let pr = image_pr(&d.thin.strength, 96, 96, &[s.gt], &thresholds, Tolerance::default())?;
    let best = pr.iter().map(|c| c.f_measure()).fold(0.0, f64::max);
    println!("best F on this image: {best:.3}");
    Ok(())
}
