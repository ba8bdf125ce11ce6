//! Region-modification augmentation for paired (degraded, clean) image datasets.
//!
//! The crate is organised bottom-up:
//!
//! * [`imgcore`]: float pixel buffers, paired samples and the alpha blending kernel.
//! * [`maskgen`]: seeded patch sampling and rasterization into alpha masks.
//! * [`augments`]: copy-blend plus the CutBlur, Cutout, CutMix, Mixup and
//!   Patch-Gaussian baselines behind one dispatcher.
//! * [`quality`]: PSNR and SSIM.
//! * [`pipeline`]: manifests, subsampling, batch runs, sweeps and dataset statistics.

pub mod augments;
pub mod error;
pub mod imgcore;
pub mod maskgen;
pub mod pipeline;
pub mod quality;

pub use augments::{AugmentConfig, AugmentedSample, Direction, Provenance, Strategy};
pub use error::{Error, Result};
pub use imgcore::{blend, AlphaMask, Image, PairedSample};
pub use maskgen::{MaskConfig, PatchShape, PatchSpec, SeededRng};
