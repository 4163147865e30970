//! Cue quantization and half-disk histogram features.

pub mod cues;
pub mod geometry;
pub mod pooling;

pub use cues::{quantize_cues, quantize_value, BinConfig, CueStack, NUM_CUES};
pub use geometry::{half_disk_side, HalfDiskShape, RowSpan, ScaleConfig, Side};
pub use pooling::{
    extract_feature_stack, half_disk_counts, half_disk_histograms, normalize_pair, FeatureStack,
    HalfCounts, HalfDiskPair, HalfDiskPooler,
};
