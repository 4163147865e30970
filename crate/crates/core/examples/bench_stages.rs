//! Median stage times of both metrics on a 481x321 synthetic image.
//!
//! `cargo run --release --example bench_stages`

use std::time::Duration;

use edgemetric::data::{synth_sample, SynthKind};
use edgemetric::detect::{Detector, FeatureConfig};
use edgemetric::metric::{ChiSquareModel, FeatureEcho};
use edgemetric::training::{init_model, TrainConfig};
use rand::SeedableRng;

fn main() -> edgemetric::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let img = synth_sample(SynthKind::Mixed, 481, 321, 0.3, 0.0, &mut rng)?.image;
    let f = FeatureConfig::default();
    let model = init_model(&TrainConfig::default(), FeatureEcho::new(f.bins, &f.scales), None)?;
    let chi = Detector::chi_square(f.clone(), ChiSquareModel::equal(4), None);
    let lbm = Detector::lbm(model, 0);
    // cues are shared so the comparison isolates the distance stage
    let cues = chi.cues(&img)?;
    let median = |d: &Detector| -> edgemetric::Result<Duration> {
        let mut t = Vec::new();
        for _ in 0..5 {
            let t0 = std::time::Instant::now();
            d.responses(&cues)?;
            t.push(t0.elapsed());
        }
        t.sort();
        Ok(t[2])
    };
    let (c, l) = (median(&chi)?, median(&lbm)?);
    println!("distance stage: chi2 {c:.2?}  lbm {l:.2?}  ratio {:.2}", c.as_secs_f64() / l.as_secs_f64());
    Ok(())
}
