//! Orientation fusion, smoothing and oriented non-maximum suppression on a
//! vertical step, with the thinning invariant checked on the result.
//!
//! `cargo run --release --example thinning`

use edgemetric::data::vertical_step;
use edgemetric::detect::{chi_square_responses, prepare_cues, FeatureConfig};
use edgemetric::metric::ChiSquareModel;
use edgemetric::postproc::{postprocess, thinning_violations};

fn main() -> edgemetric::Result<()> {
    let cfg = FeatureConfig::default();
    let step = vertical_step(48, 32, 24, 0.5);
    let cues = prepare_cues(&step.image, None, &cfg)?;
    let responses = chi_square_responses(&cues, &cfg.scales, &ChiSquareModel::equal(cfg.scales.n_scales()))?;
    for radius in [0.0, 1.0, 2.0] {
        let (raw, thin) = postprocess(&responses, radius);
        let nonzero = |v: &[f64]| v.iter().filter(|&&s| s > 0.05).count();
        let y = 16;
        let profile: Vec<String> = (20..29).map(|x| format!("{:.2}", thin.get(x, y))).collect();
        println!(
            "smoothing {radius:.0} px: {} raw pixels above 0.05, {} thinned, {} violations; row {y}, x 20..28: {}",
            nonzero(&raw.strength),
            nonzero(&thin.strength),
            thinning_violations(&thin),
            profile.join(" ")
        );
    }
    Ok(())
}
