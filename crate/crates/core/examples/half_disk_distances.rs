//! Half-disk histograms at one pixel and the distances both metrics give them.
//!
//! `cargo run --release --example half_disk_distances`

use edgemetric::data::vertical_step;
use edgemetric::detect::{prepare_cues, FeatureConfig};
use edgemetric::features::{half_disk_histograms, NUM_CUES};
use edgemetric::metric::{chi_square, FeatureEcho};
use edgemetric::training::{init_model, TrainConfig};

fn main() -> edgemetric::Result<()> {
    let s = vertical_step(48, 48, 24, 0.4);
    let cfg = FeatureConfig::default();
    let cues = prepare_cues(&s.image, None, &cfg)?;
    let model = init_model(&TrainConfig::default(), FeatureEcho::new(cfg.bins, &cfg.scales), None)?;
    let vertical = cfg.scales.n_orient / 2;
    for (x, label) in [(24, "on the step"), (10, "flat region")] {
        println!("pixel ({x}, 24), {label}:");
        for s in 0..cfg.scales.n_scales() {
            let p = half_disk_histograms(&cues, x, 24, vertical, s, &cfg.scales)?;
            let chi: Vec<String> = (0..NUM_CUES)
                .map(|c| {
                    let sl = cfg.bins.slice(c);
                    chi_square(&p.u[sl.clone()], &p.v[sl]).map(|d| format!("{d:.3}"))
                })
                .collect::<edgemetric::Result<_>>()?;
            let lbm = model.lbm_distance(&p.u, &p.v, s)?;
            println!("  r={:>2}  chi2 per cue [L a b tex] {:?}  untrained lbm {lbm:.3}", cfg.scales.radii[s], chi);
        }
    }
    Ok(())
}
