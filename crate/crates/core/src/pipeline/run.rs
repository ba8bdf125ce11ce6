use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::manifest::{DatasetManifest, ManifestEntry};
use super::sample_stream_id;
use crate::augments::{apply, AugmentConfig, DonorSource, Provenance};
use crate::error::{Error, Result};
use crate::imgcore::io::{load_pair, save_mask_png, save_png};
use crate::imgcore::PairedSample;
use crate::maskgen::{coverage, SeededRng};

pub const INPUT_DIR: &str = "input";
pub const TARGET_DIR: &str = "target";
pub const MASK_DIR: &str = "mask";
pub const PROVENANCE_DIR: &str = "provenance";

/// Donors loaded on demand from a fixed manifest.
pub struct ManifestDonors<'a>(pub &'a DatasetManifest);

impl DonorSource for ManifestDonors<'_> {
    fn len(&self) -> usize {
        self.0.len()
    }

    fn fetch(&self, index: usize) -> Result<PairedSample> {
        let e = self
            .0
            .entries()
            .get(index)
            .ok_or_else(|| Error::config(format!("donor index {index} out of range")))?;
        load_entry(self.0, e)
    }
}

pub fn load_entry(manifest: &DatasetManifest, e: &ManifestEntry) -> Result<PairedSample> {
    load_pair(&e.id, &manifest.input_path(e), &manifest.target_path(e))
}

/// Name shared by all files of one augmented copy.
pub fn sample_name(entry_id: &str, copy_index: usize) -> String {
    format!("{entry_id}_{copy_index}")
}

/// Sidecar record written next to every augmented sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_id: String,
    pub entry_id: String,
    pub copy_index: usize,
    pub coverage: f64,
    #[serde(flatten)]
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub sample: String,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub entries: usize,
    pub copies_per_sample: usize,
    pub written: usize,
    pub failed: usize,
    /// Mean mask coverage over written samples; absent for an empty run.
    pub mean_coverage: Option<f64>,
    pub elapsed_secs: f64,
    pub failures: Vec<Failure>,
}

impl RunSummary {
    pub fn is_complete(&self) -> bool {
        self.failed == 0
    }
}

fn out_paths(out_dir: &Path, name: &str) -> [PathBuf; 4] {
    [
        out_dir.join(INPUT_DIR).join(format!("{name}.png")),
        out_dir.join(TARGET_DIR).join(format!("{name}.png")),
        out_dir.join(MASK_DIR).join(format!("{name}_mask.png")),
        out_dir.join(PROVENANCE_DIR).join(format!("{name}.json")),
    ]
}

fn write_copy(
    manifest: &DatasetManifest,
    pair: &PairedSample,
    cfg: &AugmentConfig,
    copy_index: usize,
    master_seed: u64,
    out_dir: &Path,
) -> Result<f64> {
    let donors = ManifestDonors(manifest);
    let mut rng = SeededRng::new(master_seed, sample_stream_id(&pair.id, copy_index));
    let sample = apply(pair, cfg, Some(&donors), &mut rng)?;
    let name = sample_name(&pair.id, copy_index);
    let [input, target, mask, prov] = out_paths(out_dir, &name);
    let cov = coverage(&sample.mask);
    save_png(&sample.input, &input)?;
    save_png(&sample.target, &target)?;
    save_mask_png(&sample.mask, &mask)?;
    let record = SampleRecord {
        sample_id: name,
        entry_id: pair.id.clone(),
        copy_index,
        coverage: cov,
        provenance: sample.provenance,
    };
    let json = serde_json::to_string_pretty(&record)? + "\n";
    fs::write(&prov, json).map_err(|e| Error::io(&prov, e))?;
    Ok(cov)
}

/// Materializes `copies_per_sample` augmented copies of every entry under
/// `out_dir`. Per-sample failures are recorded and the run continues.
///
/// Each copy draws from its own stream keyed by `(entry id, copy index)`, so
/// the output tree is identical for any worker count.
pub fn run_augmentation(
    manifest: &DatasetManifest,
    cfg: &AugmentConfig,
    copies_per_sample: usize,
    master_seed: u64,
    out_dir: &Path,
    workers: usize,
) -> Result<RunSummary> {
    cfg.validate()?;
    let start = Instant::now();
    for sub in [INPUT_DIR, TARGET_DIR, MASK_DIR, PROVENANCE_DIR] {
        let dir = out_dir.join(sub);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    let pool = super::worker_pool(workers)?;
    let per_entry: Vec<Vec<std::result::Result<f64, Failure>>> = pool.install(|| {
        manifest
            .entries()
            .par_iter()
            .map(|e| {
                if copies_per_sample == 0 {
                    return Vec::new();
                }
                let pair = match load_entry(manifest, e) {
                    Ok(p) => p,
                    Err(err) => {
                        return (0..copies_per_sample)
                            .map(|k| {
                                Err(Failure {
                                    sample: sample_name(&e.id, k),
                                    error: err.to_string(),
                                })
                            })
                            .collect()
                    }
                };
                (0..copies_per_sample)
                    .map(|k| {
                        write_copy(manifest, &pair, cfg, k, master_seed, out_dir).map_err(
                            |err| Failure {
                                sample: sample_name(&e.id, k),
                                error: err.to_string(),
                            },
                        )
                    })
                    .collect()
            })
            .collect()
    });

    let mut coverages = Vec::new();
    let mut failures = Vec::new();
    for r in per_entry.into_iter().flatten() {
        match r {
            Ok(c) => coverages.push(c),
            Err(f) => failures.push(f),
        }
    }
    let mean_coverage = if coverages.is_empty() {
        None
    } else {
        Some(coverages.iter().sum::<f64>() / coverages.len() as f64)
    };
    Ok(RunSummary {
        entries: manifest.len(),
        copies_per_sample,
        written: coverages.len(),
        failed: failures.len(),
        mean_coverage,
        elapsed_secs: start.elapsed().as_secs_f64(),
        failures,
    })
}
