//! Full-reference quality metrics: PSNR and single-scale SSIM.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::Image;

/// Rec.601 luma weights used to reduce color images before SSIM.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    a.ensure_same_shape(b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    Ok(sum / a.data().len() as f64)
}

/// `10 log10(peak^2 / MSE)` in dB; `f64::INFINITY` for identical images.
pub fn psnr(a: &Image, b: &Image, peak: f64) -> Result<f64> {
    let err = mse(a, b)?;
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / err).log10())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    pub window_size: usize,
    pub window_sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window_size: 11,
            window_sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
        }
    }
}

impl SsimParams {
    pub fn validate(&self) -> Result<()> {
        if self.window_size < 3 || self.window_size.is_multiple_of(2) {
            return Err(Error::config(format!(
                "SSIM window must be odd and >= 3, got {}",
                self.window_size
            )));
        }
        if !(self.k1 > 0.0 && self.k2 > 0.0) {
            return Err(Error::config("SSIM k1 and k2 must be positive"));
        }
        if !(self.window_sigma > 0.0 && self.dynamic_range > 0.0) {
            return Err(Error::config("SSIM sigma and dynamic range must be positive"));
        }
        Ok(())
    }

    /// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
    pub fn kernel(&self) -> Vec<f64> {
        let r = (self.window_size / 2) as f64;
        let taps: Vec<f64> = (0..self.window_size)
            .map(|i| {
                let d = i as f64 - r;
                (-(d * d) / (2.0 * self.window_sigma * self.window_sigma)).exp()
            })
            .collect();
        let total: f64 = taps.iter().sum();
        taps.into_iter().map(|t| t / total).collect()
    }
}

/// Single-channel f64 plane: the image itself or its Rec.601 luma.
pub fn luma(img: &Image) -> Vec<f64> {
    match img.channels() {
        1 => img.data().iter().map(|&s| s as f64).collect(),
        _ => img
            .data()
            .chunks_exact(3)
            .map(|p| {
                LUMA_WEIGHTS[0] * p[0] as f64
                    + LUMA_WEIGHTS[1] * p[1] as f64
                    + LUMA_WEIGHTS[2] * p[2] as f64
            })
            .collect(),
    }
}

/// Separable "valid" correlation: output is `(w - k + 1) x (h - k + 1)`.
fn filter_valid(plane: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let k = kernel.len();
    let (ow, oh) = (w - k + 1, h - k + 1);
    let mut horiz = vec![0.0; ow * h];
    for y in 0..h {
        let row = &plane[y * w..(y + 1) * w];
        for x in 0..ow {
            horiz[y * ow + x] = kernel.iter().zip(&row[x..x + k]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = kernel
                .iter()
                .enumerate()
                .map(|(i, t)| t * horiz[(y + i) * ow + x])
                .sum();
        }
    }
    out
}

/// Mean SSIM over all fully-contained Gaussian windows.
pub fn ssim(a: &Image, b: &Image, p: &SsimParams) -> Result<f64> {
    p.validate()?;
    a.ensure_same_shape(b)?;
    let (w, h) = (a.width(), a.height());
    if w.min(h) < p.window_size {
        return Err(Error::Shape {
            axis: "min(width, height) vs SSIM window",
            left: w.min(h),
            right: p.window_size,
        });
    }
    let (x, y) = (luma(a), luma(b));
    let kernel = p.kernel();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(u, v)| u * v).collect();
    let mu_x = filter_valid(&x, w, h, &kernel);
    let mu_y = filter_valid(&y, w, h, &kernel);
    let e_xx = filter_valid(&xx, w, h, &kernel);
    let e_yy = filter_valid(&yy, w, h, &kernel);
    let e_xy = filter_valid(&xy, w, h, &kernel);
    let c1 = (p.k1 * p.dynamic_range).powi(2);
    let c2 = (p.k2 * p.dynamic_range).powi(2);
    let n = mu_x.len();
    let total: f64 = (0..n)
        .map(|i| {
            let (mx, my) = (mu_x[i], mu_y[i]);
            let sxx = e_xx[i] - mx * mx;
            let syy = e_yy[i] - my * my;
            let sxy = e_xy[i] - mx * my;
            ((2.0 * mx * my + c1) * (2.0 * sxy + c2))
                / ((mx * mx + my * my + c1) * (sxx + syy + c2))
        })
        .sum();
    Ok(total / n as f64)
}

/// Serializes `+inf` as the string `"inf"` so reports stay valid JSON.
pub mod db_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub const SENTINEL: &str = "inf";

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str(SENTINEL)
        } else {
            v.serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if s == SENTINEL => Ok(f64::INFINITY),
            Repr::Str(s) => Err(serde::de::Error::custom(format!(
                "expected number or \"{SENTINEL}\", got {s:?}"
            ))),
        }
    }
}

pub fn format_db(v: f64) -> String {
    if v.is_infinite() {
        db_serde::SENTINEL.to_string()
    } else {
        format!("{v:.2}")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageMetrics {
    pub id: String,
    #[serde(with = "db_serde")]
    pub psnr_db: f64,
    pub ssim: f64,
}

impl ImageMetrics {
    pub fn compute(id: impl Into<String>, a: &Image, b: &Image, p: &SsimParams) -> Result<Self> {
        Ok(Self {
            id: id.into(),
            psnr_db: psnr(a, b, 1.0)?,
            ssim: ssim(a, b, p)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// Mean over finite entries; the sentinel when every entry is infinite.
    #[serde(with = "db_serde")]
    pub psnr_db: f64,
    pub ssim: f64,
    /// Entries with infinite PSNR left out of the PSNR mean.
    pub psnr_exclusions: usize,
    pub per_image: Vec<ImageMetrics>,
}

impl MetricReport {
    /// Aggregates per-image values, in the order given.
    pub fn from_per_image(per_image: Vec<ImageMetrics>) -> Result<Self> {
        if per_image.is_empty() {
            return Err(Error::EmptyInput("no image pairs to report on"));
        }
        let finite: Vec<f64> = per_image
            .iter()
            .map(|m| m.psnr_db)
            .filter(|v| v.is_finite())
            .collect();
        let psnr_db = if finite.is_empty() {
            f64::INFINITY
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        };
        let ssim = per_image.iter().map(|m| m.ssim).sum::<f64>() / per_image.len() as f64;
        Ok(Self {
            psnr_db,
            ssim,
            psnr_exclusions: per_image.len() - finite.len(),
            per_image,
        })
    }

    /// `PSNR / SSIM / NIQE` cell with NIQE reported as unavailable.
    pub fn summary_cell(&self) -> String {
        format!("{} / {:.2} / n/a", format_db(self.psnr_db), self.ssim)
    }
}

/// Per-pair PSNR and SSIM plus their means. Pairs are evaluated in parallel;
/// aggregation follows input order.
pub fn batch_report<S: AsRef<str> + Sync>(
    pairs: &[(S, Image, Image)],
    p: &SsimParams,
) -> Result<MetricReport> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("no image pairs to report on"));
    }
    let per_image = pairs
        .par_iter()
        .map(|(id, a, b)| ImageMetrics::compute(id.as_ref(), a, b, p))
        .collect::<Result<Vec<_>>>()?;
    MetricReport::from_per_image(per_image)
}
