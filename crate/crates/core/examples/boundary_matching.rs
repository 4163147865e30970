//! One-to-one boundary matching at several tolerances, then precision and
//! recall against two annotators.
//!
//! `cargo run --release --example boundary_matching`

use edgemetric::eval::{evaluate_binary, match_boundaries, BinaryMap};

fn map(w: usize, h: usize, pts: impl IntoIterator<Item = (usize, usize)>) -> BinaryMap {
    let mut m = BinaryMap::empty(w, h);
    for (x, y) in pts {
        m.data[y * w + x] = true;
    }
    m
}

fn main() -> edgemetric::Result<()> {
    let (w, h) = (24, 24);
    // a diagonal annotation; the detection sits one pixel to the right and has
    // three stray pixels
    let gt = map(w, h, (2..22).map(|i| (i, i)));
    let det = map(w, h, (2..22).map(|i| (i + 1, i)).chain([(20, 3), (21, 4), (3, 20)]));
    for tol in [0.0, 1.0, 1.5, 2.0] {
        let m = match_boundaries(&det, &gt, tol)?;
        println!("tolerance {tol:.1} px: {} of 23 detections matched", m.count);
    }

    let second = map(w, h, (2usize..22).map(|i| (i.saturating_sub(4), i)));
    let pr = evaluate_binary(&det, &[gt, second], 1.5)?;
    println!(
        "two annotators at 1.5 px: detections {}/{} matched, annotation pixels {}/{} matched",
        pr.matched_det, pr.total_det, pr.matched_gt, pr.total_gt
    );
    println!("P {:.3} R {:.3} F {:.3}", pr.precision(), pr.recall(), pr.f_measure());
    Ok(())
}
