//! Generates the default synthetic corpus, trains the learned metric on it
//! and compares it with equal-weight χ² on the test split.
//!
//! `cargo run --release --example train_synthetic [seed]`

use std::time::Instant;

use edgemetric::data::{load_split, synth_generate, CorpusSpec, Split};
use edgemetric::detect::{Detector, FeatureConfig};
use edgemetric::eval::Tolerance;
use edgemetric::metric::{ChiSquareModel, FeatureEcho};
use edgemetric::pipeline::{corpus_codebook, evaluate_detector, prepare_images};
use edgemetric::training::{init_model, train, TrainConfig};

fn main() -> edgemetric::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let t0 = Instant::now();
    let dir = tempfile::tempdir().expect("temp dir");
    let spec = CorpusSpec::default();
    let items = synth_generate(&spec, seed, dir.path())?;
    let features = FeatureConfig::default();
    let train_items = load_split(&items, Split::Train)?;
    let val_items = load_split(&items, Split::Val)?;
    let test_items = load_split(&items, Split::Test)?;
    let codebook = corpus_codebook(&train_items, &features)?;
    let prep = |it| prepare_images(it, Some(&codebook), &features, 0.0, 0);
    let (tr, va, te) = (prep(&train_items)?, prep(&val_items)?, prep(&test_items)?);
    println!("corpus and cues ready in {:.1?}", t0.elapsed());

    let chi = Detector::chi_square(features.clone(), ChiSquareModel::equal(features.scales.n_scales()), Some(codebook.clone()));
    let chi_report = evaluate_detector(&chi, &te, Tolerance::default())?;
    println!("chi2-equal test ODS {:.4} OIS {:.4} AP {:.4}", chi_report.ods, chi_report.ois, chi_report.ap);

    let cfg = TrainConfig {
        seed,
        ..TrainConfig::default()
    };
    let init = init_model(&cfg, FeatureEcho::new(features.bins, &features.scales), Some(codebook))?;
    let t1 = Instant::now();
    let out = train(&tr, &va, init, &cfg)?;
    for e in &out.log.epochs {
        let loss = e.mean_loss.map_or("-".to_string(), |l| format!("{l:.4}"));
        println!("epoch {:>3} loss {loss} val F {:.4} samples {}", e.epoch, e.val_f, e.samples);
    }
    println!(
        "trained in {:.1?}; best epoch {} val F {:.4}; smoothed loss drop {}",
        t1.elapsed(),
        out.log.best_epoch,
        out.log.best_f(),
        out.log.loss_decrease(100).map_or("n/a".to_string(), |d| format!("{:.1}%", d * 100.0))
    );
    let lbm = Detector::lbm(out.model, seed);
    let lbm_report = evaluate_detector(&lbm, &te, Tolerance::default())?;
    println!("lbm-rbf test ODS {:.4} OIS {:.4} AP {:.4}", lbm_report.ods, lbm_report.ois, lbm_report.ap);
    println!("total {:.1?}", t0.elapsed());
    Ok(())
}
