//! Equal-weight against fitted χ² weights on a small synthetic corpus,
//! with and without added noise.
//!
//! `cargo run --release --example evaluate_corpus`

use edgemetric::data::{load_split, synth_generate, CorpusSpec, Split, SplitCounts};
use edgemetric::detect::{Detector, FeatureConfig};
use edgemetric::eval::Tolerance;
use edgemetric::imgproc::DEFAULT_NOISE_VARIANCE;
use edgemetric::metric::ChiSquareModel;
use edgemetric::pipeline::{corpus_codebook, evaluate_detector, prepare_images};
use edgemetric::training::fit_chi_square_weights;

fn main() -> edgemetric::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let spec = CorpusSpec {
        counts: SplitCounts { train: 12, val: 0, test: 8 },
        ..CorpusSpec::default()
    };
    let items = synth_generate(&spec, 5, dir.path())?;
    let features = FeatureConfig::default();
    let train = load_split(&items, Split::Train)?;
    let test = load_split(&items, Split::Test)?;
    let codebook = corpus_codebook(&train, &features)?;
    let tr = prepare_images(&train, Some(&codebook), &features, 0.0, 0)?;
    let clean = prepare_images(&test, Some(&codebook), &features, 0.0, 0)?;
    let noisy = prepare_images(&test, Some(&codebook), &features, DEFAULT_NOISE_VARIANCE, 1)?;

    let fitted = fit_chi_square_weights(&tr, &features.scales, Tolerance::default(), 0)?;
    println!("fitted weights (rows = scales, columns = L a b tex):");
    for row in &fitted.weights {
        println!("  {:.3?}", row);
    }
    for (name, weights) in [("chi2-equal", ChiSquareModel::equal(4)), ("chi2-learned", fitted)] {
        let det = Detector::chi_square(features.clone(), weights, Some(codebook.clone()));
        let a = evaluate_detector(&det, &clean, Tolerance::default())?;
        let b = evaluate_detector(&det, &noisy, Tolerance::default())?;
        println!("{}", a.summary_text(name));
        println!("{}", b.summary_text(&format!("{name} + noise")));
    }
    Ok(())
}
