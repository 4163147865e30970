//! The floating-point raster shared by every stage, plus PNG input and output.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma, Rgb};

use crate::error::{Error, Result};
use crate::io_util::write_atomic;

/// Semantics of the channels of a [`MultiChannelImage`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColorSpace {
    Rgb,
    Lab,
    Gray,
    Generic,
}

impl ColorSpace {
    pub fn name(self) -> &'static str {
        match self {
            ColorSpace::Rgb => "RGB",
            ColorSpace::Lab => "Lab",
            ColorSpace::Gray => "Gray",
            ColorSpace::Generic => "Generic",
        }
    }
}

/// Row-major raster with interleaved real-valued channels.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiChannelImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
    color_space: ColorSpace,
}

impl MultiChannelImage {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f64>,
        color_space: ColorSpace,
    ) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::Dimension(format!(
                "image must be non-empty, got {width}x{height}x{channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::Dimension(format!(
                "{} values for a {width}x{height}x{channels} image",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite pixel value {v}")));
        }
        let expected_channels = match color_space {
            ColorSpace::Rgb | ColorSpace::Lab => Some(3),
            ColorSpace::Gray => Some(1),
            ColorSpace::Generic => None,
        };
        if let Some(c) = expected_channels {
            if c != channels {
                return Err(Error::Dimension(format!(
                    "{} image needs {c} channels, got {channels}",
                    color_space.name()
                )));
            }
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
            color_space,
        })
    }

    /// Image with every value set to `value`.
    pub fn filled(
        width: usize,
        height: usize,
        color_space: ColorSpace,
        channels: usize,
        value: f64,
    ) -> Result<Self> {
        Self::new(
            width,
            height,
            channels,
            vec![value; width * height * channels],
            color_space,
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn color_space(&self) -> ColorSpace {
        self.color_space
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Values of a single channel in row-major order.
    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.data
            .iter()
            .skip(c)
            .step_by(self.channels)
            .copied()
            .collect()
    }

    /// Luminance-style grayscale (Rec. 601 weights for RGB, the L channel for Lab).
    pub fn to_gray(&self) -> MultiChannelImage {
        let data = match self.color_space {
            ColorSpace::Gray => self.data.clone(),
            ColorSpace::Rgb => self
                .data
                .chunks_exact(3)
                .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
                .collect(),
            ColorSpace::Lab => self.channel(0),
            ColorSpace::Generic => self
                .data
                .chunks_exact(self.channels)
                .map(|p| p.iter().sum::<f64>() / self.channels as f64)
                .collect(),
        };
        MultiChannelImage {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
            color_space: ColorSpace::Gray,
        }
    }

    /// Replicates a grayscale image into three identical RGB channels.
    pub fn gray_to_rgb(&self) -> Result<MultiChannelImage> {
        if self.color_space != ColorSpace::Gray {
            return Err(Error::ColorSpace {
                expected: "Gray",
                actual: self.color_space.name(),
            });
        }
        let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
        MultiChannelImage::new(self.width, self.height, 3, data, ColorSpace::Rgb)
    }
}

/// Reads an 8- or 16-bit grayscale or RGB PNG, scaling values to `[0, 1]`.
pub fn load_image(path: impl AsRef<Path>) -> Result<MultiChannelImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = image::load_from_memory(&bytes).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(buf) => {
            let data = buf.into_raw().into_iter().map(|v| v as f64 / 255.0).collect();
            MultiChannelImage::new(w, h, 1, data, ColorSpace::Gray)
        }
        DynamicImage::ImageLuma16(buf) => {
            let data = buf
                .into_raw()
                .into_iter()
                .map(|v| v as f64 / 65535.0)
                .collect();
            MultiChannelImage::new(w, h, 1, data, ColorSpace::Gray)
        }
        DynamicImage::ImageRgb8(buf) => {
            let data = buf.into_raw().into_iter().map(|v| v as f64 / 255.0).collect();
            MultiChannelImage::new(w, h, 3, data, ColorSpace::Rgb)
        }
        DynamicImage::ImageRgb16(buf) => {
            let data = buf
                .into_raw()
                .into_iter()
                .map(|v| v as f64 / 65535.0)
                .collect();
            MultiChannelImage::new(w, h, 3, data, ColorSpace::Rgb)
        }
        other => Err(Error::UnsupportedLayout {
            path: path.to_path_buf(),
            layout: format!("{:?}", other.color()),
        }),
    }
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn encode_png<P, C>(buf: &ImageBuffer<P, C>) -> Result<Vec<u8>>
where
    P: image::Pixel + image::PixelWithColorType,
    [P::Subpixel]: image::EncodableLayout,
    C: std::ops::Deref<Target = [P::Subpixel]>,
{
    let mut out = Cursor::new(Vec::new());
    buf.write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::InvalidParameter(format!("png encoding failed: {e}")))?;
    Ok(out.into_inner())
}

/// Writes an RGB or grayscale image as an 8-bit PNG.
pub fn save_image_u8(img: &MultiChannelImage, path: impl AsRef<Path>) -> Result<()> {
    let (w, h) = (img.width as u32, img.height as u32);
    let bytes = match img.color_space {
        ColorSpace::Gray => {
            let raw: Vec<u8> = img.data.iter().map(|&v| to_u8(v)).collect();
            let buf: ImageBuffer<Luma<u8>, _> = ImageBuffer::from_raw(w, h, raw).expect("sized");
            encode_png(&buf)?
        }
        ColorSpace::Rgb => {
            let raw: Vec<u8> = img.data.iter().map(|&v| to_u8(v)).collect();
            let buf: ImageBuffer<Rgb<u8>, _> = ImageBuffer::from_raw(w, h, raw).expect("sized");
            encode_png(&buf)?
        }
        other => {
            return Err(Error::ColorSpace {
                expected: "RGB or Gray",
                actual: other.name(),
            })
        }
    };
    write_atomic(path.as_ref(), &bytes)
}

/// Writes per-pixel values in `[0, 1]` as a 16-bit grayscale PNG (`round(v * 65535)`).
pub fn save_gray16(
    values: &[f64],
    width: usize,
    height: usize,
    path: impl AsRef<Path>,
) -> Result<()> {
    if values.len() != width * height {
        return Err(Error::Dimension(format!(
            "{} values for a {width}x{height} map",
            values.len()
        )));
    }
    let raw: Vec<u16> = values
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 65535.0).round() as u16)
        .collect();
    let buf: ImageBuffer<Luma<u16>, _> =
        ImageBuffer::from_raw(width as u32, height as u32, raw).expect("sized");
    write_atomic(path.as_ref(), &encode_png(&buf)?)
}

/// Writes a binary map as an 8-bit PNG with 255 for set pixels.
pub fn save_binary(mask: &[bool], width: usize, height: usize, path: impl AsRef<Path>) -> Result<()> {
    if mask.len() != width * height {
        return Err(Error::Dimension(format!(
            "{} values for a {width}x{height} mask",
            mask.len()
        )));
    }
    let raw: Vec<u8> = mask.iter().map(|&b| if b { 255 } else { 0 }).collect();
    let buf: ImageBuffer<Luma<u8>, _> =
        ImageBuffer::from_raw(width as u32, height as u32, raw).expect("sized");
    write_atomic(path.as_ref(), &encode_png(&buf)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn black_rgb_loads_as_zeros() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("black.png");
        let buf: ImageBuffer<Rgb<u8>, _> = ImageBuffer::from_raw(2, 2, vec![0u8; 12]).unwrap();
        buf.save(&p).unwrap();
        let img = load_image(&p).unwrap();
        assert_eq!(img.color_space(), ColorSpace::Rgb);
        assert_eq!((img.width(), img.height(), img.channels()), (2, 2, 3));
        assert!(img.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn eight_bit_scaling() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.png");
        let buf: ImageBuffer<Luma<u8>, _> = ImageBuffer::from_raw(2, 1, vec![255u8, 128]).unwrap();
        buf.save(&p).unwrap();
        let img = load_image(&p).unwrap();
        assert_eq!(img.color_space(), ColorSpace::Gray);
        assert_eq!(img.get(0, 0, 0), 1.0);
        assert!((img.get(1, 0, 0) - 0.50196).abs() < 1e-5);
        assert_eq!(img.get(1, 0, 0), 128.0 / 255.0);
    }

    #[test]
    fn sixteen_bit_scaling() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g16.png");
        save_gray16(&[0.0, 1.0, 0.5], 3, 1, &p).unwrap();
        let img = load_image(&p).unwrap();
        assert_eq!(img.get(0, 0, 0), 0.0);
        assert_eq!(img.get(1, 0, 0), 1.0);
        assert_eq!(img.get(2, 0, 0), 32768.0 / 65535.0);
    }

    #[test]
    fn missing_and_garbage_files_are_distinct_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_image(dir.path().join("nope.png")),
            Err(Error::Io { .. })
        ));
        let p = dir.path().join("junk.png");
        std::fs::write(&p, b"not a png").unwrap();
        assert!(matches!(load_image(&p), Err(Error::Decode { .. })));
    }

    #[test]
    fn alpha_layout_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rgba.png");
        let buf: ImageBuffer<image::Rgba<u8>, _> =
            ImageBuffer::from_raw(1, 1, vec![1u8, 2, 3, 4]).unwrap();
        buf.save(&p).unwrap();
        assert!(matches!(
            load_image(&p),
            Err(Error::UnsupportedLayout { .. })
        ));
    }

    #[test]
    fn constructor_rejects_bad_shapes() {
        assert!(MultiChannelImage::new(0, 1, 1, vec![], ColorSpace::Gray).is_err());
        assert!(MultiChannelImage::new(1, 1, 1, vec![f64::NAN], ColorSpace::Gray).is_err());
        assert!(MultiChannelImage::new(1, 1, 1, vec![0.0], ColorSpace::Rgb).is_err());
    }
}
