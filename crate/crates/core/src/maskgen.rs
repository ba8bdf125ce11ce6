//! Seeded patch sampling and rasterization into alpha masks.
//!
//! A mask is built from two controls: `mp_max` bounds each patch side as a
//! fraction of the corresponding image side, and `beta_max` bounds the blend
//! intensity assigned to a patch.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::AlphaMask;

/// Upper bound on patches per mask; keeps rasterization cost bounded for
/// hostile configs.
pub const MAX_PATCHES: usize = 4096;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatchShape {
    #[default]
    Square,
    Rectangle,
    Circle,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntensityMode {
    /// Per-patch intensity uniform on `(0, beta_max]`.
    #[default]
    UniformRandom,
    /// Every patch gets exactly `beta_max`.
    Fixed,
}

/// One sampled patch. Centers are in continuous pixel coordinates (pixel `x`
/// covers `[x, x + 1)`); for circles both extents equal the diameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchSpec {
    pub center_x: f64,
    pub center_y: f64,
    pub extent_x: u32,
    pub extent_y: u32,
    pub shape: PatchShape,
    pub intensity: f32,
}

impl PatchSpec {
    /// Axis-aligned patch from its top-left pixel.
    pub fn from_corner(
        x: u32,
        y: u32,
        extent_x: u32,
        extent_y: u32,
        shape: PatchShape,
        intensity: f32,
    ) -> Self {
        Self {
            center_x: x as f64 + extent_x as f64 / 2.0,
            center_y: y as f64 + extent_y as f64 / 2.0,
            extent_x,
            extent_y,
            shape,
            intensity,
        }
    }

    fn check_bounds(&self, width: usize, height: usize) -> Result<()> {
        const EPS: f64 = 1e-9;
        let (hx, hy) = (self.extent_x as f64 / 2.0, self.extent_y as f64 / 2.0);
        let inside = self.center_x.is_finite()
            && self.center_y.is_finite()
            && self.extent_x >= 1
            && self.extent_y >= 1
            && self.center_x - hx >= -EPS
            && self.center_y - hy >= -EPS
            && self.center_x + hx <= width as f64 + EPS
            && self.center_y + hy <= height as f64 + EPS;
        if !inside {
            return Err(Error::Geometry(format!(
                "{:?} patch at ({}, {}) with extent {}x{} does not fit in {width}x{height}",
                self.shape, self.center_x, self.center_y, self.extent_x, self.extent_y
            )));
        }
        if !(self.intensity > 0.0 && self.intensity <= 1.0) {
            return Err(Error::Geometry(format!(
                "patch intensity {} outside (0, 1]",
                self.intensity
            )));
        }
        if self.shape == PatchShape::Circle && self.extent_x != self.extent_y {
            return Err(Error::Geometry(format!(
                "circle extents differ: {} vs {}",
                self.extent_x, self.extent_y
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskConfig {
    pub mp_max: f64,
    pub beta_max: f64,
    pub n_patches: usize,
    pub shape: PatchShape,
    pub intensity_mode: IntensityMode,
}

impl Default for MaskConfig {
    /// One square patch, side up to 0.2 of the image, intensity up to 1.
    fn default() -> Self {
        Self {
            mp_max: 0.2,
            beta_max: 1.0,
            n_patches: 1,
            shape: PatchShape::Square,
            intensity_mode: IntensityMode::UniformRandom,
        }
    }
}

impl MaskConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v.is_finite() && v > 0.0 && v <= 1.0;
        if !unit(self.mp_max) {
            return Err(Error::config(format!(
                "mask.mp_max must be in (0, 1], got {}",
                self.mp_max
            )));
        }
        if !unit(self.beta_max) {
            return Err(Error::config(format!(
                "mask.beta_max must be in (0, 1], got {}",
                self.beta_max
            )));
        }
        if self.n_patches > MAX_PATCHES {
            return Err(Error::config(format!(
                "mask.n_patches must be at most {MAX_PATCHES}, got {}",
                self.n_patches
            )));
        }
        Ok(())
    }

    /// Largest admissible extent along a dimension of `len` pixels.
    pub fn max_extent(&self, len: usize) -> u32 {
        // Tolerate products like 0.29 * 100 = 28.999999999999996.
        (self.mp_max * len as f64 + 1e-9).floor().min(u32::MAX as f64) as u32
    }
}

/// A ChaCha8 stream keyed by `(master_seed, stream_id)`.
///
/// ChaCha's output is specified bit-for-bit, so a given key replays the same
/// draws on every platform. Independent samples use distinct `stream_id`s.
#[derive(Clone, Debug)]
pub struct SeededRng {
    master_seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(stream_id);
        Self {
            master_seed,
            stream_id,
            inner,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform on `(0, 1]`.
    pub fn unit_open_closed(&mut self) -> f64 {
        1.0 - self.inner.random::<f64>()
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Draws exactly `cfg.n_patches` patches that fit inside a `width` x `height` image.
pub fn sample_patches(
    cfg: &MaskConfig,
    width: usize,
    height: usize,
    rng: &mut SeededRng,
) -> Result<Vec<PatchSpec>> {
    cfg.validate()?;
    let (max_x, max_y) = (cfg.max_extent(width), cfg.max_extent(height));
    if max_x < 1 || max_y < 1 {
        return Err(Error::config(format!(
            "mp_max {} leaves no room for a 1-pixel patch in {width}x{height}",
            cfg.mp_max
        )));
    }
    let (width, height) = (width as u32, height as u32);
    let mut patches = Vec::with_capacity(cfg.n_patches);
    for _ in 0..cfg.n_patches {
        let (ex, ey) = match cfg.shape {
            PatchShape::Square | PatchShape::Circle => {
                let e = rng.random_range(1..=max_x.min(max_y));
                (e, e)
            }
            PatchShape::Rectangle => (rng.random_range(1..=max_x), rng.random_range(1..=max_y)),
        };
        let x = rng.random_range(0..=width - ex);
        let y = rng.random_range(0..=height - ey);
        let intensity = match cfg.intensity_mode {
            IntensityMode::UniformRandom => (rng.unit_open_closed() * cfg.beta_max) as f32,
            IntensityMode::Fixed => cfg.beta_max as f32,
        };
        patches.push(PatchSpec::from_corner(x, y, ex, ey, cfg.shape, intensity));
    }
    Ok(patches)
}

/// Half-open pixel index range whose pixel centers fall in `[lo, hi)`.
fn covered_range(lo: f64, hi: f64, len: usize) -> std::ops::Range<usize> {
    let start = (lo - 0.5).ceil().max(0.0) as usize;
    let end = ((hi - 0.5).ceil().max(0.0) as usize).min(len);
    start..end.max(start)
}

/// Paints patches into a mask. Overlaps take the larger intensity.
pub fn rasterize(patches: &[PatchSpec], width: usize, height: usize) -> Result<AlphaMask> {
    let mut mask = AlphaMask::new(width, height, vec![0.0; width * height])?;
    for p in patches {
        p.check_bounds(width, height)?;
    }
    let alpha = mask.alpha_mut();
    for p in patches {
        let (hx, hy) = (p.extent_x as f64 / 2.0, p.extent_y as f64 / 2.0);
        let xs = covered_range(p.center_x - hx, p.center_x + hx, width);
        let ys = covered_range(p.center_y - hy, p.center_y + hy, height);
        for y in ys {
            let row = &mut alpha[y * width..(y + 1) * width];
            for x in xs.clone() {
                let inside = match p.shape {
                    PatchShape::Square | PatchShape::Rectangle => true,
                    PatchShape::Circle => {
                        let dx = x as f64 + 0.5 - p.center_x;
                        let dy = y as f64 + 0.5 - p.center_y;
                        dx * dx + dy * dy <= hx * hx
                    }
                };
                if inside && row[x] < p.intensity {
                    row[x] = p.intensity;
                }
            }
        }
    }
    Ok(mask)
}

/// Fraction of pixels with nonzero alpha.
pub fn coverage(mask: &AlphaMask) -> f64 {
    let hit = mask.alpha().iter().filter(|&&a| a > 0.0).count();
    hit as f64 / mask.alpha().len() as f64
}
