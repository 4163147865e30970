//! Analytic log-loss gradient against central finite differences on one
//! random sample.
//!
//! `cargo run --release --example gradient_check`

use edgemetric::detect::{prepare_cues, FeatureConfig};
use edgemetric::data::vertical_step;
use edgemetric::metric::{DistanceKernel, FeatureEcho};
use edgemetric::training::{gradients, init_model, sample_loss, LabeledPixel, Objective, SampleContext, TrainConfig};

fn main() -> edgemetric::Result<()> {
    let cfg = FeatureConfig::default();
    let s = vertical_step(40, 40, 20, 0.5);
    let cues = prepare_cues(&s.image, None, &cfg)?;
    let scale_indices = [0, 1, 2, 3];
    let ctx = SampleContext {
        image: "step",
        cues: &cues,
        scales: &cfg.scales,
        scale_indices: &scale_indices,
    };
    let sample = ctx.sample(LabeledPixel { x: 20, y: 20, orientation: 4, positive: true })?;
    for kernel in [DistanceKernel::Rbf, DistanceKernel::Linear] {
        let tc = TrainConfig { kernel, ..TrainConfig::default() };
        let mut model = init_model(&tc, FeatureEcho::new(cfg.bins, &cfg.scales), None)?;
        let g = gradients(&model, &sample, Objective::PerScale)?;
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for k in 0..model.n {
            let orig = model.scales[1].alpha[k];
            model.scales[1].alpha[k] = orig + h;
            let up = sample_loss(&model, &sample, Objective::PerScale)?;
            model.scales[1].alpha[k] = orig - h;
            let down = sample_loss(&model, &sample, Objective::PerScale)?;
            model.scales[1].alpha[k] = orig;
            let fd = (up - down) / (2.0 * h);
            let a = g.alpha[1][k];
            worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()).max(1e-8));
        }
        println!("{}: worst relative error over alpha of scale 1: {worst:.2e}", kernel.name());
    }
    Ok(())
}
