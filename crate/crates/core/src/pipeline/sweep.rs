//! Augmentation-scale sweeps: augmentation-side statistics for each
//! (strategy, mp_max) cell of a grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::check_scales;
use super::manifest::DatasetManifest;
use super::run::load_entry;
use super::stable_hash64;
use super::stats::render_table;
use crate::augments::{apply, AugmentConfig, Strategy};
use crate::error::{Error, Result};
use crate::imgcore::PairedSample;
use crate::maskgen::{coverage, SeededRng};
use crate::quality::{psnr, ssim, SsimParams};

pub const HISTOGRAM_BINS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub scales: Vec<f64>,
    pub strategies: Vec<Strategy>,
    pub samples_per_cell: usize,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        check_scales(&self.scales)?;
        if self.strategies.is_empty() {
            return Err(Error::config("sweep needs at least one strategy"));
        }
        if self.samples_per_cell == 0 {
            return Err(Error::config("samples_per_cell must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub strategy: Strategy,
    pub scale: f64,
    pub samples: usize,
    pub coverage_mean: f64,
    pub coverage_std: f64,
    /// Mean change of (input vs target) PSNR caused by augmentation, over
    /// samples where both values are finite.
    pub psnr_delta: Option<f64>,
    pub ssim_delta: Option<f64>,
    /// Counts of nonzero alpha values in `((i)/10, (i+1)/10]`.
    pub histogram: [u64; HISTOGRAM_BINS],
    pub alpha_min: Option<f32>,
    pub alpha_max: Option<f32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CellRecord {
    fn failed(strategy: Strategy, scale: f64, err: Error) -> Self {
        Self {
            strategy,
            scale,
            samples: 0,
            coverage_mean: 0.0,
            coverage_std: 0.0,
            psnr_delta: None,
            ssim_delta: None,
            histogram: [0; HISTOGRAM_BINS],
            alpha_min: None,
            alpha_max: None,
            error: Some(err.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub master_seed: u64,
    pub grid: SweepGrid,
    pub cells: Vec<CellRecord>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl SweepReport {
    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.error.is_some()).count()
    }

    pub fn cell(&self, strategy: Strategy, scale: f64) -> Option<&CellRecord> {
        self.cells
            .iter()
            .find(|c| c.strategy == strategy && c.scale == scale)
    }

    /// `strategy,scale,coverage_mean,coverage_std,psnr_delta,ssim_delta`;
    /// failed cells and undefined deltas leave their fields empty.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "strategy",
            "scale",
            "coverage_mean",
            "coverage_std",
            "psnr_delta",
            "ssim_delta",
        ])?;
        for c in &self.cells {
            let ok = c.error.is_none();
            w.write_record([
                c.strategy.name().to_string(),
                c.scale.to_string(),
                if ok { c.coverage_mean.to_string() } else { String::new() },
                if ok { c.coverage_std.to_string() } else { String::new() },
                opt(c.psnr_delta),
                opt(c.ssim_delta),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_table(&self) -> String {
        let mut rows = vec![[
            "strategy", "scale", "coverage", "std", "dPSNR", "dSSIM", "alpha range",
        ]
        .map(String::from)];
        for c in &self.cells {
            let f = |v: Option<f64>, p: usize| v.map(|v| format!("{v:.p$}")).unwrap_or("-".into());
            rows.push(match &c.error {
                Some(e) => [
                    c.strategy.name().into(),
                    c.scale.to_string(),
                    format!("failed: {e}"),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ],
                None => [
                    c.strategy.name().into(),
                    c.scale.to_string(),
                    format!("{:.4}", c.coverage_mean),
                    format!("{:.4}", c.coverage_std),
                    f(c.psnr_delta, 2),
                    f(c.ssim_delta, 4),
                    match (c.alpha_min, c.alpha_max) {
                        (Some(a), Some(b)) => format!("[{a:.3}, {b:.3}]"),
                        _ => "-".into(),
                    },
                ],
            });
        }
        render_table(&rows)
    }
}

/// Stream for the `index`-th sample of every cell. Shared across cells so
/// different scales see the same underlying draws.
fn sweep_stream_id(index: usize) -> u64 {
    stable_hash64("sweep", &[&(index as u64).to_le_bytes()])
}

fn cell_config(base: &AugmentConfig, strategy: Strategy, scale: f64) -> AugmentConfig {
    let mut cfg = AugmentConfig::for_strategy(strategy);
    cfg.mask = base.mask;
    cfg.mask.mp_max = scale;
    cfg.direction = base.direction;
    if base.strategy == strategy {
        cfg.fill_value = base.fill_value.or(cfg.fill_value);
        cfg.mixup_alpha = base.mixup_alpha.or(cfg.mixup_alpha);
        cfg.noise_sigma = base.noise_sigma.or(cfg.noise_sigma);
    }
    cfg
}

struct SampleStats {
    coverage: f64,
    psnr_delta: Option<f64>,
    ssim_delta: Option<f64>,
    histogram: [u64; HISTOGRAM_BINS],
    alpha_min: Option<f32>,
    alpha_max: Option<f32>,
}

fn finite_delta(after: f64, before: f64) -> Option<f64> {
    (after.is_finite() && before.is_finite()).then_some(after - before)
}

fn run_cell(
    pool: &[PairedSample],
    baselines: &[(f64, f64)],
    cfg: &AugmentConfig,
    samples: usize,
    master_seed: u64,
    params: &SsimParams,
) -> Result<Vec<SampleStats>> {
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let idx = i % pool.len();
            let pair = &pool[idx];
            let mut rng = SeededRng::new(master_seed, sweep_stream_id(i));
            let out = apply(pair, cfg, Some(&pool), &mut rng)?;
            let (psnr0, ssim0) = baselines[idx];
            let mut histogram = [0u64; HISTOGRAM_BINS];
            let (mut lo, mut hi) = (None::<f32>, None::<f32>);
            for &a in out.mask.alpha().iter().filter(|&&a| a > 0.0) {
                let bin = ((a as f64 * HISTOGRAM_BINS as f64).ceil() as usize)
                    .clamp(1, HISTOGRAM_BINS)
                    - 1;
                histogram[bin] += 1;
                lo = Some(lo.map_or(a, |l| l.min(a)));
                hi = Some(hi.map_or(a, |h| h.max(a)));
            }
            Ok(SampleStats {
                coverage: coverage(&out.mask),
                psnr_delta: finite_delta(psnr(&out.input, &out.target, 1.0)?, psnr0),
                ssim_delta: finite_delta(ssim(&out.input, &out.target, params)?, ssim0),
                histogram,
                alpha_min: lo,
                alpha_max: hi,
            })
        })
        .collect()
}

fn aggregate(strategy: Strategy, scale: f64, stats: Vec<SampleStats>) -> CellRecord {
    let n = stats.len() as f64;
    let mean = stats.iter().map(|s| s.coverage).sum::<f64>() / n;
    let var = stats.iter().map(|s| (s.coverage - mean).powi(2)).sum::<f64>() / n;
    let mean_of = |vals: Vec<f64>| (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
    let mut histogram = [0u64; HISTOGRAM_BINS];
    for s in &stats {
        for (h, v) in histogram.iter_mut().zip(s.histogram) {
            *h += v;
        }
    }
    CellRecord {
        strategy,
        scale,
        samples: stats.len(),
        coverage_mean: mean,
        coverage_std: var.sqrt(),
        psnr_delta: mean_of(stats.iter().filter_map(|s| s.psnr_delta).collect()),
        ssim_delta: mean_of(stats.iter().filter_map(|s| s.ssim_delta).collect()),
        histogram,
        alpha_min: stats.iter().filter_map(|s| s.alpha_min).reduce(f32::min),
        alpha_max: stats.iter().filter_map(|s| s.alpha_max).reduce(f32::max),
        error: None,
    }
}

/// Sweeps over pre-loaded pairs. Samples cycle through `pairs`, which also
/// serve as the donor pool.
pub fn sweep_pairs(
    pairs: &[PairedSample],
    grid: &SweepGrid,
    base: &AugmentConfig,
    master_seed: u64,
    params: &SsimParams,
) -> Result<SweepReport> {
    grid.validate()?;
    if pairs.is_empty() {
        return Err(Error::EmptyDataset("sweep needs at least one pair".into()));
    }
    let baselines: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|p| Ok((psnr(&p.input, &p.target, 1.0)?, ssim(&p.input, &p.target, params)?)))
        .collect::<Result<_>>()?;
    let mut cells = Vec::with_capacity(grid.strategies.len() * grid.scales.len());
    for &strategy in &grid.strategies {
        for &scale in &grid.scales {
            let cfg = cell_config(base, strategy, scale);
            let record = cfg
                .validate()
                .and_then(|_| run_cell(pairs, &baselines, &cfg, grid.samples_per_cell, master_seed, params))
                .map(|stats| aggregate(strategy, scale, stats))
                .unwrap_or_else(|e| CellRecord::failed(strategy, scale, e));
            cells.push(record);
        }
    }
    Ok(SweepReport {
        master_seed,
        grid: grid.clone(),
        cells,
    })
}

/// Loads the first `min(N, samples_per_cell)` manifest entries and sweeps
/// them on the current rayon pool.
pub fn sweep(
    manifest: &DatasetManifest,
    grid: &SweepGrid,
    base: &AugmentConfig,
    master_seed: u64,
) -> Result<SweepReport> {
    grid.validate()?;
    if manifest.is_empty() {
        return Err(Error::EmptyDataset("manifest has no entries".into()));
    }
    let take = manifest.len().min(grid.samples_per_cell);
    let pairs = manifest.entries()[..take]
        .par_iter()
        .map(|e| load_entry(manifest, e))
        .collect::<Result<Vec<_>>>()?;
    sweep_pairs(&pairs, grid, base, master_seed, &SsimParams::default())
}
