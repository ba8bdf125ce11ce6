//! 8-bit quantization and PNG/JPEG file boundaries.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageFormat, RgbImage};

use super::{AlphaMask, Image, PairedSample};
use crate::error::{Error, Result};

/// 8-bit integer pixel buffer, same layout as [`Image`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantizedImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<u8>,
}

/// `s -> round(s * 255)` with round-half-away-from-zero, clamped to `[0, 255]`.
pub fn quantize_sample(s: f32) -> u8 {
    (s as f64 * 255.0).round().clamp(0.0, 255.0) as u8
}

pub fn dequantize_sample(v: u8) -> f32 {
    v as f32 / 255.0
}

pub fn quantize(img: &Image) -> QuantizedImage {
    QuantizedImage {
        width: img.width(),
        height: img.height(),
        channels: img.channels(),
        data: img.data().iter().map(|&s| quantize_sample(s)).collect(),
    }
}

pub fn dequantize(buf: &QuantizedImage) -> Result<Image> {
    Image::new(
        buf.width,
        buf.height,
        buf.channels,
        buf.data.iter().map(|&v| dequantize_sample(v)).collect(),
    )
}

fn from_dynamic(img: DynamicImage) -> Result<Image> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let q = if img.color().has_color() {
        QuantizedImage {
            width: w,
            height: h,
            channels: 3,
            data: img.into_rgb8().into_raw(),
        }
    } else {
        QuantizedImage {
            width: w,
            height: h,
            channels: 1,
            data: img.into_luma8().into_raw(),
        }
    };
    dequantize(&q)
}

/// Decodes an in-memory PNG or JPEG. Alpha channels are dropped; grayscale
/// sources stay single-channel.
pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    let mut reader = image::ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| Error::Decode(e.into()))?;
    if !matches!(reader.format(), Some(ImageFormat::Png | ImageFormat::Jpeg)) {
        return Err(Error::UnsupportedFormat);
    }
    reader.limits(decode_limits());
    from_dynamic(reader.decode()?)
}

fn decode_limits() -> image::Limits {
    let mut limits = image::Limits::default();
    limits.max_image_width = Some(1 << 15);
    limits.max_image_height = Some(1 << 15);
    limits
}

pub fn load_image(path: &Path) -> Result<Image> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes).map_err(|e| match e {
        Error::Decode(source) => Error::Image {
            path: path.to_owned(),
            source,
        },
        other => other,
    })
}

/// Loads both sides of a pair. A grayscale side is promoted to RGB when the
/// other side has color, so channel counts always agree.
pub fn load_pair(id: &str, input: &Path, target: &Path) -> Result<PairedSample> {
    let mut a = load_image(input)?;
    let mut b = load_image(target)?;
    if a.channels() != b.channels() {
        a = a.to_rgb();
        b = b.to_rgb();
    }
    PairedSample::new(id, a, b)
}

/// Encodes as 8-bit PNG (grayscale or RGB).
pub fn encode_png(img: &Image) -> Result<Vec<u8>> {
    let q = quantize(img);
    let (w, h) = (q.width as u32, q.height as u32);
    let dynamic = if q.channels == 1 {
        DynamicImage::ImageLuma8(GrayImage::from_raw(w, h, q.data).expect("length checked"))
    } else {
        DynamicImage::ImageRgb8(RgbImage::from_raw(w, h, q.data).expect("length checked"))
    };
    let mut out = Vec::new();
    dynamic.write_to(&mut Cursor::new(&mut out), ImageFormat::Png)?;
    Ok(out)
}

pub fn save_png(img: &Image, path: &Path) -> Result<()> {
    let bytes = encode_png(img)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Single-channel 8-bit PNG of the mask's alpha values.
pub fn save_mask_png(mask: &AlphaMask, path: &Path) -> Result<()> {
    let img = Image::new(mask.width(), mask.height(), 1, mask.alpha().to_vec())?;
    save_png(&img, path)
}

pub fn is_supported_extension(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
        .unwrap_or(false)
}
