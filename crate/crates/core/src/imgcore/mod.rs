//! Float pixel buffers, paired samples and the alpha blending kernel.
//!
//! Pixels live in normalized `[0, 1]` floating point for the whole pipeline and
//! are quantized to 8 bits only at file boundaries (see [`io`]).

pub mod io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major, channel-interleaved image with samples in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

fn check_geometry(width: usize, height: usize, channels: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Validation(vec![format!(
            "image must be at least 1x1, got {width}x{height}"
        )]));
    }
    if channels != 1 && channels != 3 {
        return Err(Error::Validation(vec![format!(
            "unsupported channel count {channels} (expected 1 or 3)"
        )]));
    }
    let expected = width * height * channels;
    if len != expected {
        return Err(Error::Shape {
            axis: "data length",
            left: len,
            right: expected,
        });
    }
    Ok(())
}

fn in_unit_range(s: f32) -> bool {
    (0.0..=1.0).contains(&s)
}

impl Image {
    /// Builds an image, enforcing every invariant including the sample range.
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        let img = Self::from_raw(width, height, channels, data)?;
        if let Some((i, s)) = img.data.iter().enumerate().find(|(_, s)| !in_unit_range(**s)) {
            return Err(Error::Validation(vec![format!(
                "sample {i} = {s} outside [0, 1]"
            )]));
        }
        Ok(img)
    }

    /// Builds an image checking only geometry. Sample range is left to
    /// [`validate_pair`]; use this for buffers from untrusted sources that
    /// should be reported on rather than rejected outright.
    pub fn from_raw(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        check_geometry(width, height, channels, data.len())?;
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Builds an image from a per-(x, y, c) generator. Values are clamped to `[0, 1]`.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c).clamp(0.0, 1.0));
                }
            }
        }
        Self::new(width, height, channels, data)
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

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Checks that `other` has the same width, height and channel count.
    pub fn ensure_same_shape(&self, other: &Image) -> Result<()> {
        for (axis, l, r) in [
            ("width", self.width, other.width),
            ("height", self.height, other.height),
            ("channels", self.channels, other.channels),
        ] {
            if l != r {
                return Err(Error::Shape {
                    axis,
                    left: l,
                    right: r,
                });
            }
        }
        Ok(())
    }

    pub(crate) fn ensure_mask_shape(&self, mask: &AlphaMask) -> Result<()> {
        if self.width != mask.width {
            return Err(Error::Shape {
                axis: "width",
                left: self.width,
                right: mask.width,
            });
        }
        if self.height != mask.height {
            return Err(Error::Shape {
                axis: "height",
                left: self.height,
                right: mask.height,
            });
        }
        Ok(())
    }

    /// Same geometry with new sample values. The caller guarantees the range.
    pub(crate) fn with_data(&self, data: Vec<f32>) -> Image {
        debug_assert_eq!(data.len(), self.data.len());
        debug_assert!(data.iter().all(|s| in_unit_range(*s)));
        Image {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data,
        }
    }

    /// Replicates a single-channel image into three identical channels.
    pub fn to_rgb(&self) -> Image {
        if self.channels == 3 {
            return self.clone();
        }
        let data = self.data.iter().flat_map(|&s| [s, s, s]).collect();
        Image {
            width: self.width,
            height: self.height,
            channels: 3,
            data,
        }
    }
}

/// Per-pixel blend coefficients, one per spatial location, broadcast over channels.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaMask {
    width: usize,
    height: usize,
    alpha: Vec<f32>,
}

impl AlphaMask {
    pub fn new(width: usize, height: usize, alpha: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Validation(vec![format!(
                "mask must be at least 1x1, got {width}x{height}"
            )]));
        }
        if alpha.len() != width * height {
            return Err(Error::Shape {
                axis: "mask length",
                left: alpha.len(),
                right: width * height,
            });
        }
        if let Some((i, a)) = alpha.iter().enumerate().find(|(_, a)| !in_unit_range(**a)) {
            return Err(Error::Validation(vec![format!(
                "alpha {i} = {a} outside [0, 1]"
            )]));
        }
        Ok(Self {
            width,
            height,
            alpha,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            alpha: vec![0.0; width * height],
        }
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn alpha(&self) -> &[f32] {
        &self.alpha
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.alpha[y * self.width + x]
    }

    pub(crate) fn alpha_mut(&mut self) -> &mut [f32] {
        &mut self.alpha
    }

    /// `1 - alpha` at every pixel.
    pub fn complement(&self) -> AlphaMask {
        AlphaMask {
            width: self.width,
            height: self.height,
            alpha: self.alpha.iter().map(|a| 1.0 - a).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.alpha.iter().all(|&a| a == 0.0)
    }
}

/// A registered (degraded input, clean target) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedSample {
    pub id: String,
    pub input: Image,
    pub target: Image,
}

impl PairedSample {
    /// Builds a pair, rejecting it if [`validate_pair`] reports any violation.
    pub fn new(id: impl Into<String>, input: Image, target: Image) -> Result<Self> {
        let sample = Self {
            id: id.into(),
            input,
            target,
        };
        validate_pair(&sample)?;
        Ok(sample)
    }
}

/// Structured outcome of [`validate_pair`], serialized by the `validate` command.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub id: String,
    pub violations: Vec<String>,
}

impl PairReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every dimension, channel and range violation of a pair.
pub fn inspect_pair(sample: &PairedSample) -> PairReport {
    let mut violations = Vec::new();
    let (a, b) = (&sample.input, &sample.target);
    if (a.width, a.height) != (b.width, b.height) {
        violations.push(format!(
            "dimension mismatch: input {}x{} vs target {}x{}",
            a.width, a.height, b.width, b.height
        ));
    }
    if a.channels != b.channels {
        violations.push(format!(
            "channel mismatch: input {} vs target {}",
            a.channels, b.channels
        ));
    }
    for (role, img) in [("input", a), ("target", b)] {
        let bad: Vec<_> = img
            .data
            .iter()
            .enumerate()
            .filter(|(_, s)| !in_unit_range(**s))
            .collect();
        if let Some((i, s)) = bad.first() {
            violations.push(format!(
                "{role} has {} sample(s) outside [0, 1] (first at index {i}: {s})",
                bad.len()
            ));
        }
    }
    PairReport {
        id: sample.id.clone(),
        violations,
    }
}

/// Confirms dimension, channel and value-range agreement of a pair.
pub fn validate_pair(sample: &PairedSample) -> Result<()> {
    let report = inspect_pair(sample);
    if report.is_ok() {
        Ok(())
    } else {
        Err(Error::Validation(report.violations))
    }
}

#[inline]
fn mix(base: f32, other: f32, alpha: f32) -> f32 {
    // Products of two f32 values are exact in f64, so the only rounding is the
    // final sum and the narrowing cast, both monotone. This keeps the result
    // inside [min(base, other), max(base, other)].
    let a = alpha as f64;
    ((1.0 - a) * base as f64 + a * other as f64) as f32
}

/// Alpha blend: `(1 - alpha) * base + alpha * other`, per pixel, with the
/// single-channel mask broadcast over color channels.
pub fn blend(base: &Image, other: &Image, mask: &AlphaMask) -> Result<Image> {
    base.ensure_same_shape(other)?;
    base.ensure_mask_shape(mask)?;
    let ch = base.channels;
    let mut out = Vec::with_capacity(base.data.len());
    for ((b, o), &a) in base
        .data
        .chunks_exact(ch)
        .zip(other.data.chunks_exact(ch))
        .zip(&mask.alpha)
    {
        if a == 0.0 {
            out.extend_from_slice(b);
        } else if a == 1.0 {
            out.extend_from_slice(o);
        } else {
            out.extend(b.iter().zip(o).map(|(&x, &y)| mix(x, y, a)));
        }
    }
    Ok(base.with_data(out))
}
