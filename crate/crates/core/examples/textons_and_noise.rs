//! Texton labels on two gratings, Lab conversion of a few colours, and the
//! measured variance of injected Gaussian noise.
//!
//! `cargo run --release --example textons_and_noise`

use edgemetric::imgproc::color::srgb_to_lab;
use edgemetric::imgproc::{add_gaussian_noise, compute_textons, default_filter_bank, ColorSpace, MultiChannelImage};

fn main() -> edgemetric::Result<()> {
    // vertical stripes on the left, horizontal on the right, equal mean
    let (w, h) = (64, 64);
    let data: Vec<f64> = (0..w * h)
        .map(|i| {
            let (x, y) = (i % w, i / w);
            let phase = if x < w / 2 { x } else { y };
            if phase % 6 < 3 { 0.2 } else { 0.8 }
        })
        .collect();
    let gray = MultiChannelImage::new(w, h, 1, data, ColorSpace::Gray)?;
    let t = compute_textons(&gray, &default_filter_bank(), 2, 0)?;
    for (name, xs) in [("left", 8..w / 2 - 10), ("right", w / 2 + 10..w - 8)] {
        let mut counts = [0usize; 2];
        for y in 8..h - 8 {
            for x in xs.clone() {
                counts[t.labels[y * w + x] as usize] += 1;
            }
        }
        println!("{name} grating texton counts {counts:?}");
    }

    for rgb in [[0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]] {
        let [l, a, b] = srgb_to_lab(rgb);
        println!("sRGB {rgb:?} -> L {l:.1} a {a:.1} b {b:.1}");
    }

    let flat = MultiChannelImage::filled(128, 128, ColorSpace::Gray, 1, 0.5)?;
    let noisy = add_gaussian_noise(&flat, 0.01, 7)?;
    let v: Vec<f64> = (0..128 * 128).map(|i| noisy.get(i % 128, i / 128, 0)).collect();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / v.len() as f64;
    println!("noise variance 0.01 -> measured mean {mean:.4} variance {var:.4}");
    Ok(())
}
