//! Image decoding, color conversion, filter banks, textons and noise injection.

pub mod color;
pub mod filters;
pub mod image;
pub mod noise;
pub mod textons;

pub use color::rgb_to_lab;
pub use filters::{make_filter_bank, FilterBank, Kernel, KernelKind};
pub use image::{load_image, save_binary, save_gray16, save_image_u8, ColorSpace, MultiChannelImage};
pub use noise::{add_gaussian_noise, DEFAULT_NOISE_VARIANCE};
pub use textons::{compute_textons, TextonCodebook, TextonMap, DEFAULT_TEXTONS};

/// Filter-bank orientations used for textons.
pub const TEXTON_ORIENTATIONS: usize = 8;
/// Filter-bank scales (Gaussian sigma, pixels) used for textons.
pub const TEXTON_SCALES: [f64; 2] = [1.4, 2.8];

/// The default texton filter bank: 8 orientations at sigma 1.4 and 2.8.
pub fn default_filter_bank() -> FilterBank {
    make_filter_bank(TEXTON_ORIENTATIONS, &TEXTON_SCALES).expect("static configuration is valid")
}
