//! Saves a learned-metric model, reads it back and checks it against a
//! feature setup.
//!
//! `cargo run --release --example model_files`

use edgemetric::detect::FeatureConfig;
use edgemetric::features::{BinConfig, ScaleConfig};
use edgemetric::metric::FeatureEcho;
use edgemetric::training::{check_compatible, init_model, load_model, save_model, TrainConfig};

fn main() -> edgemetric::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("model.toml");
    let cfg = FeatureConfig::default();
    let model = init_model(&TrainConfig::default(), FeatureEcho::new(cfg.bins, &cfg.scales), None)?;
    save_model(&model, &path)?;
    let back = load_model(&path)?;
    assert_eq!(back, model);
    let text = std::fs::read_to_string(&path).expect("readable");
    println!("{} bytes; header:", text.len());
    for line in text.lines().take(8) {
        println!("  {line}");
    }
    check_compatible(&back, cfg.bins, &cfg.scales)?;
    let other = check_compatible(&back, BinConfig([16, 16, 16, 32]), &ScaleConfig::default());
    println!("different bins: {}", other.unwrap_err());
    Ok(())
}
