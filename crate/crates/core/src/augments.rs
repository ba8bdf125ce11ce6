//! Paired-sample augmentation strategies.
//!
//! Every strategy produces a new network input and leaves the clean target
//! untouched, except the two donor-based strategies (CutMix and Mixup) which
//! must edit the target coherently to keep the pair registered.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{blend, AlphaMask, Image, PairedSample};
use crate::maskgen::{rasterize, sample_patches, IntensityMode, MaskConfig, PatchSpec, SeededRng};

pub const DEFAULT_FILL_VALUE: f32 = 0.0;
pub const DEFAULT_MIXUP_ALPHA: f64 = 1.0;
pub const DEFAULT_NOISE_SIGMA: f64 = 0.1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    CopyBlend,
    CutMix,
    Mixup,
    CutOut,
    CutBlur,
    PatchGaussian,
    None,
}

impl Strategy {
    pub const ALL: [Strategy; 7] = [
        Strategy::CopyBlend,
        Strategy::CutMix,
        Strategy::Mixup,
        Strategy::CutOut,
        Strategy::CutBlur,
        Strategy::PatchGaussian,
        Strategy::None,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::CopyBlend => "copy_blend",
            Strategy::CutMix => "cut_mix",
            Strategy::Mixup => "mixup",
            Strategy::CutOut => "cut_out",
            Strategy::CutBlur => "cut_blur",
            Strategy::PatchGaussian => "patch_gaussian",
            Strategy::None => "none",
        }
    }

    pub fn needs_donor(self) -> bool {
        matches!(self, Strategy::CutMix | Strategy::Mixup)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Strategy::ALL.iter().map(|s| s.name()).collect();
                Error::config(format!(
                    "unknown strategy {s:?} (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

/// Which image is the base of a patch blend.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Clean patches blended into the degraded input.
    CleanOntoNoisy,
    /// Degraded patches blended into the clean image, which becomes the input.
    NoisyOntoClean,
    /// 50/50 per sample, drawn from the sample's stream.
    #[default]
    Random,
}

impl Direction {
    fn resolve(self, rng: &mut SeededRng) -> Direction {
        match self {
            Direction::Random => {
                if rng.random::<bool>() {
                    Direction::CleanOntoNoisy
                } else {
                    Direction::NoisyOntoClean
                }
            }
            d => d,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub strategy: Strategy,
    #[serde(default)]
    pub mask: MaskConfig,
    #[serde(default)]
    pub direction: Direction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fill_value: Option<f32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixup_alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_sigma: Option<f64>,
    #[serde(default = "one")]
    pub apply_probability: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self::for_strategy(Strategy::CopyBlend)
    }
}

impl AugmentConfig {
    /// Default parameters for `strategy`, with its specific fields filled in.
    pub fn for_strategy(strategy: Strategy) -> Self {
        let mut cfg = Self {
            strategy,
            mask: MaskConfig::default(),
            direction: Direction::Random,
            fill_value: None,
            mixup_alpha: None,
            noise_sigma: None,
            apply_probability: 1.0,
        };
        cfg.fill_missing_defaults();
        cfg
    }

    /// Supplies defaults for strategy-specific fields the strategy uses but
    /// which were left unset.
    pub fn fill_missing_defaults(&mut self) {
        match self.strategy {
            Strategy::CutOut => {
                self.fill_value.get_or_insert(DEFAULT_FILL_VALUE);
            }
            Strategy::Mixup => {
                self.mixup_alpha.get_or_insert(DEFAULT_MIXUP_ALPHA);
            }
            Strategy::PatchGaussian => {
                self.noise_sigma.get_or_insert(DEFAULT_NOISE_SIGMA);
            }
            _ => {}
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.mask.validate()?;
        if !(0.0..=1.0).contains(&self.apply_probability) {
            return Err(Error::config(format!(
                "apply_probability must be in [0, 1], got {}",
                self.apply_probability
            )));
        }
        let s = self.strategy;
        let fields = [
            ("fill_value", self.fill_value.is_some(), s == Strategy::CutOut),
            ("mixup_alpha", self.mixup_alpha.is_some(), s == Strategy::Mixup),
            (
                "noise_sigma",
                self.noise_sigma.is_some(),
                s == Strategy::PatchGaussian,
            ),
        ];
        for (name, present, used) in fields {
            if present && !used {
                return Err(Error::config(format!(
                    "{name} is not used by strategy {s}"
                )));
            }
            if used && !present {
                return Err(Error::config(format!("{name} is required by strategy {s}")));
            }
        }
        if let Some(v) = self.fill_value {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(format!("fill_value must be in [0, 1], got {v}")));
            }
        }
        if let Some(a) = self.mixup_alpha {
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::config(format!("mixup_alpha must be positive, got {a}")));
            }
        }
        if let Some(sigma) = self.noise_sigma {
            if !(sigma > 0.0 && sigma <= 1.0) {
                return Err(Error::config(format!(
                    "noise_sigma must be in (0, 1], got {sigma}"
                )));
            }
        }
        Ok(())
    }
}

/// Everything needed to replay an augmented sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub strategy: Strategy,
    pub applied: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    pub master_seed: u64,
    pub stream_id: u64,
    pub patches: Vec<PatchSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub donor_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub config: AugmentConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedSample {
    pub input: Image,
    pub target: Image,
    pub mask: AlphaMask,
    pub provenance: Provenance,
}

impl Provenance {
    fn new(strategy: Strategy, cfg: &AugmentConfig, rng: &SeededRng) -> Self {
        Self {
            strategy,
            applied: true,
            direction: None,
            master_seed: rng.master_seed(),
            stream_id: rng.stream_id(),
            patches: Vec::new(),
            donor_id: None,
            lambda: None,
            config: cfg.clone(),
        }
    }
}

fn hard_mask_config(mask: &MaskConfig) -> MaskConfig {
    MaskConfig {
        beta_max: 1.0,
        intensity_mode: IntensityMode::Fixed,
        ..*mask
    }
}

fn sample_mask(
    cfg: &MaskConfig,
    img: &Image,
    rng: &mut SeededRng,
) -> Result<(Vec<PatchSpec>, AlphaMask)> {
    let patches = sample_patches(cfg, img.width(), img.height(), rng)?;
    let mask = rasterize(&patches, img.width(), img.height())?;
    Ok((patches, mask))
}

/// Blends the pair under `mask` in the given (resolved) direction.
pub fn blend_pair(pair: &PairedSample, mask: &AlphaMask, direction: Direction) -> Result<Image> {
    match direction {
        Direction::CleanOntoNoisy => blend(&pair.input, &pair.target, mask),
        Direction::NoisyOntoClean => blend(&pair.target, &pair.input, mask),
        Direction::Random => Err(Error::config("direction must be resolved before blending")),
    }
}

fn patch_blend(
    strategy: Strategy,
    pair: &PairedSample,
    cfg: &AugmentConfig,
    mask_cfg: &MaskConfig,
    rng: &mut SeededRng,
) -> Result<AugmentedSample> {
    let mut prov = Provenance::new(strategy, cfg, rng);
    let direction = cfg.direction.resolve(rng);
    let (patches, mask) = sample_mask(mask_cfg, &pair.input, rng)?;
    let input = blend_pair(pair, &mask, direction)?;
    prov.direction = Some(direction);
    prov.patches = patches;
    Ok(AugmentedSample {
        input,
        target: pair.target.clone(),
        mask,
        provenance: prov,
    })
}

/// Copy-blend: soft patches of one side of the pair blended into the other at
/// the same position, with per-patch intensity from the mask config.
pub fn copy_blend(
    pair: &PairedSample,
    cfg: &AugmentConfig,
    rng: &mut SeededRng,
) -> Result<AugmentedSample> {
    patch_blend(Strategy::CopyBlend, pair, cfg, &cfg.mask, rng)
}

/// CutBlur: copy-blend with every patch pasted at full intensity.
pub fn cut_blur(
    pair: &PairedSample,
    cfg: &AugmentConfig,
    rng: &mut SeededRng,
) -> Result<AugmentedSample> {
    patch_blend(Strategy::CutBlur, pair, cfg, &hard_mask_config(&cfg.mask), rng)
}

/// Cutout: patch regions of the input set to a constant fill value.
pub fn cut_out(
    pair: &PairedSample,
    cfg: &AugmentConfig,
    rng: &mut SeededRng,
) -> Result<AugmentedSample> {
    let fill = cfg.fill_value.unwrap_or(DEFAULT_FILL_VALUE);
    if !(0.0..=1.0).contains(&fill) {
        return Err(Error::config(format!("fill_value must be in [0, 1], got {fill}")));
    }
    let mut prov = Provenance::new(Strategy::CutOut, cfg, rng);
    let (patches, mask) = sample_mask(&hard_mask_config(&cfg.mask), &pair.input, rng)?;
    let ch = pair.input.channels();
    let mut data = pair.input.data().to_vec();
    for (px, &a) in data.chunks_exact_mut(ch).zip(mask.alpha()) {
        if a > 0.0 {
            px.fill(fill);
        }
    }
    prov.patches = patches;
    Ok(AugmentedSample {
        input: pair.input.with_data(data),
        target: pair.target.clone(),
        mask,
        provenance: prov,
    })
}

fn ensure_donor_shape(pair: &PairedSample, donor: &PairedSample) -> Result<()> {
    pair.input.ensure_same_shape(&donor.input)?;
    pair.target.ensure_same_shape(&donor.target)
}

/// CutMix on pairs: the same region of the donor's input and target is pasted
/// into the pair's input and target.
pub fn cut_mix(
    pair: &PairedSample,
    donor: &PairedSample,
    cfg: &AugmentConfig,
    rng: &mut SeededRng,
) -> Result<AugmentedSample> {
    ensure_donor_shape(pair, donor)?;
    let mut prov = Provenance::new(Strategy::CutMix, cfg, rng);
    let (patches, mask) = sample_mask(&hard_mask_config(&cfg.mask), &pair.input, rng)?;
    let (input, target) = paste_from_donor(pair, donor, &mask)?;
    prov.patches = patches;
    prov.donor_id = Some(donor.id.clone());
    Ok(AugmentedSample {
        input,
        target,
        mask,
        provenance: prov,
    })
}

/// Pastes the donor into both sides of the pair wherever `mask` is set.
pub fn paste_from_donor(
    pair: &PairedSample,
    donor: &PairedSample,
    mask: &AlphaMask,
) -> Result<(Image, Image)> {
    ensure_donor_shape(pair, donor)?;
    Ok((
        blend(&pair.input, &donor.input, mask)?,
        blend(&pair.target, &donor.target, mask)?,
    ))
}

fn mix_images(a: &Image, b: &Image, lambda: f64) -> Image {
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (lambda * x as f64 + (1.0 - lambda) * y as f64) as f32)
        .collect();
    a.with_data(data)
}

/// Global convex combination `lambda * pair + (1 - lambda) * donor` of both
/// inputs and both targets.
pub fn mix_pair(
    pair: &PairedSample,
    donor: &PairedSample,
    lambda: f64,
) -> Result<(Image, Image)> {
    ensure_donor_shape(pair, donor)?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::config(format!("mixup lambda must be in [0, 1], got {lambda}")));
    }
    Ok((
        mix_images(&pair.input, &donor.input, lambda),
        mix_images(&pair.target, &donor.target, lambda),
    ))
}

/// Mixup with `lambda ~ Beta(alpha, alpha)`.
pub fn mixup(
    pair: &PairedSample,
    donor: &PairedSample,
    cfg: &AugmentConfig,
    rng: &mut SeededRng,
) -> Result<AugmentedSample> {
    ensure_donor_shape(pair, donor)?;
    let alpha = cfg.mixup_alpha.unwrap_or(DEFAULT_MIXUP_ALPHA);
    let beta = Beta::new(alpha, alpha)
        .map_err(|e| Error::config(format!("mixup_alpha {alpha}: {e}")))?;
    let mut prov = Provenance::new(Strategy::Mixup, cfg, rng);
    let lambda = beta.sample(rng).clamp(0.0, 1.0);
    let (input, target) = mix_pair(pair, donor, lambda)?;
    let mask = AlphaMask::filled(
        pair.input.width(),
        pair.input.height(),
        (1.0 - lambda) as f32,
    )?;
    prov.donor_id = Some(donor.id.clone());
    prov.lambda = Some(lambda);
    Ok(AugmentedSample {
        input,
        target,
        mask,
        provenance: prov,
    })
}

/// Adds i.i.d. Gaussian noise inside sampled patches, clamped to `[0, 1]`.
pub fn patch_gaussian(
    pair: &PairedSample,
    cfg: &AugmentConfig,
    rng: &mut SeededRng,
) -> Result<AugmentedSample> {
    let sigma = cfg.noise_sigma.unwrap_or(DEFAULT_NOISE_SIGMA);
    let normal = Normal::new(0.0, sigma)
        .ok()
        .filter(|_| sigma > 0.0)
        .ok_or_else(|| Error::config(format!("noise_sigma must be positive, got {sigma}")))?;
    let mut prov = Provenance::new(Strategy::PatchGaussian, cfg, rng);
    let (patches, mask) = sample_mask(&hard_mask_config(&cfg.mask), &pair.input, rng)?;
    let ch = pair.input.channels();
    let mut data = pair.input.data().to_vec();
    for (px, &a) in data.chunks_exact_mut(ch).zip(mask.alpha()) {
        if a > 0.0 {
            for s in px {
                let n: f64 = normal.sample(rng);
                *s = (*s as f64 + n).clamp(0.0, 1.0) as f32;
            }
        }
    }
    prov.patches = patches;
    Ok(AugmentedSample {
        input: pair.input.with_data(data),
        target: pair.target.clone(),
        mask,
        provenance: prov,
    })
}

/// Random-access pool of donor pairs for CutMix and Mixup. Must be a fixed
/// snapshot so every worker sees the same donors.
pub trait DonorSource: Sync {
    fn len(&self) -> usize;

    fn fetch(&self, index: usize) -> Result<PairedSample>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl DonorSource for &[PairedSample] {
    fn len(&self) -> usize {
        <[PairedSample]>::len(self)
    }

    fn fetch(&self, index: usize) -> Result<PairedSample> {
        self.get(index)
            .cloned()
            .ok_or_else(|| Error::config(format!("donor index {index} out of range")))
    }
}

impl DonorSource for Vec<PairedSample> {
    fn len(&self) -> usize {
        self.as_slice().len()
    }

    fn fetch(&self, index: usize) -> Result<PairedSample> {
        (&self.as_slice()).fetch(index)
    }
}

/// The unaugmented pair with an all-zero mask.
pub fn identity(pair: &PairedSample, cfg: &AugmentConfig, rng: &SeededRng) -> AugmentedSample {
    let mut prov = Provenance::new(cfg.strategy, cfg, rng);
    prov.applied = false;
    AugmentedSample {
        input: pair.input.clone(),
        target: pair.target.clone(),
        mask: AlphaMask::zeros(pair.input.width(), pair.input.height()),
        provenance: prov,
    }
}

/// Dispatches `cfg.strategy`, applied with probability `cfg.apply_probability`.
pub fn apply(
    pair: &PairedSample,
    cfg: &AugmentConfig,
    donors: Option<&dyn DonorSource>,
    rng: &mut SeededRng,
) -> Result<AugmentedSample> {
    cfg.validate()?;
    let donors = match (cfg.strategy.needs_donor(), donors) {
        (true, None) => {
            return Err(Error::config(format!(
                "strategy {} needs a donor source",
                cfg.strategy
            )))
        }
        (true, Some(d)) if d.is_empty() => {
            return Err(Error::config("donor source is empty"));
        }
        (_, d) => d,
    };
    if cfg.strategy == Strategy::None {
        return Ok(identity(pair, cfg, rng));
    }
    let gate: f64 = rng.random();
    if gate >= cfg.apply_probability {
        return Ok(identity(pair, cfg, rng));
    }
    let fetch_donor = |rng: &mut SeededRng| -> Result<PairedSample> {
        let pool = donors.expect("checked above");
        let idx = rng.random_range(0..pool.len() as u64) as usize;
        pool.fetch(idx)
    };
    match cfg.strategy {
        Strategy::CopyBlend => copy_blend(pair, cfg, rng),
        Strategy::CutBlur => cut_blur(pair, cfg, rng),
        Strategy::CutOut => cut_out(pair, cfg, rng),
        Strategy::PatchGaussian => patch_gaussian(pair, cfg, rng),
        Strategy::CutMix => {
            let donor = fetch_donor(rng)?;
            cut_mix(pair, &donor, cfg, rng)
        }
        Strategy::Mixup => {
            let donor = fetch_donor(rng)?;
            mixup(pair, &donor, cfg, rng)
        }
        Strategy::None => unreachable!(),
    }
}
