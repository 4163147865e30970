//! Dataset layout on disk and the synthetic corpus generator.

pub mod dataset;
pub mod synth;

pub use dataset::{load_dataset, load_split, DatasetItem, LoadedItem, Split};
pub use synth::{synth_generate, DEFAULT_CORPUS_NOISE, synth_item, synth_sample, vertical_step, CorpusSpec, SplitCounts, SynthKind, SynthSample};
