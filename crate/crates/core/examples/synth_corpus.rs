//! Writes a small synthetic corpus and reports what was generated.
//!
//! `cargo run --release --example synth_corpus [out_dir]`

use edgemetric::data::{load_dataset, synth_generate, CorpusSpec, Split, SplitCounts};

fn main() -> edgemetric::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "synthetic_demo".into());
    let spec = CorpusSpec {
        counts: SplitCounts { train: 8, val: 4, test: 4 },
        ..CorpusSpec::default()
    };
    let items = synth_generate(&spec, 7, &out)?;
    for split in Split::ALL {
        let n = items.iter().filter(|i| i.split == split).count();
        println!("{split}: {n} images");
    }
    // the corpus description is stored next to the images
    let reread = load_dataset(&out)?;
    assert_eq!(reread.len(), items.len());
    println!("spec:\n{}", spec.to_toml());
    Ok(())
}
