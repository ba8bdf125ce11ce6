use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::manifest::DatasetManifest;
use super::run::{load_entry, Failure};
use crate::error::{Error, Result};
use crate::quality::{db_serde, format_db, ImageMetrics, MetricReport, SsimParams};

/// One row of a dataset-properties table: input-vs-target PSNR/SSIM, modal
/// resolution and pair count. NIQE is not computed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub name: String,
    pub count: usize,
    #[serde(with = "db_serde")]
    pub psnr_db: f64,
    pub ssim: f64,
    pub niqe: Option<f64>,
    pub psnr_exclusions: usize,
    pub resolution: (usize, usize),
    pub failures: Vec<Failure>,
    pub per_image: Vec<ImageMetrics>,
}

impl DatasetStats {
    pub const HEADER: [&'static str; 4] = [
        "Dataset Name",
        "PSNR / SSIM / NIQE",
        "Resolution",
        "# Val Images",
    ];

    pub fn cells(&self) -> [String; 4] {
        [
            self.name.clone(),
            format!("{} / {:.2} / n/a", format_db(self.psnr_db), self.ssim),
            format!("{} × {}", self.resolution.0, self.resolution.1),
            self.count.to_string(),
        ]
    }

    /// Aligned plain-text table with a header and one row per dataset.
    pub fn table(rows: &[DatasetStats]) -> String {
        let mut all = vec![Self::HEADER.map(String::from)];
        all.extend(rows.iter().map(Self::cells));
        render_table(&all)
    }
}

pub(crate) fn render_table<const N: usize>(rows: &[[String; N]]) -> String {
    let mut widths = [0usize; N];
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    for (i, r) in rows.iter().enumerate() {
        let line: Vec<String> = r
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        out.push_str(line.join(" | ").trim_end());
        out.push('\n');
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            out.push_str(&rule.join("-+-"));
            out.push('\n');
        }
    }
    out
}

/// Input-vs-target metrics over a manifest, evaluated on the current rayon pool.
/// Unloadable pairs are reported in `failures`; an all-failed manifest is an error.
pub fn dataset_stats(
    manifest: &DatasetManifest,
    name: &str,
    params: &SsimParams,
) -> Result<DatasetStats> {
    if manifest.is_empty() {
        return Err(Error::EmptyDataset("manifest has no entries".into()));
    }
    type Measured = std::result::Result<(ImageMetrics, (usize, usize)), Failure>;
    let results: Vec<Measured> = manifest
        .entries()
        .par_iter()
        .map(|e| {
            let measure = || -> Result<_> {
                let pair = load_entry(manifest, e)?;
                let m = ImageMetrics::compute(&e.id, &pair.input, &pair.target, params)?;
                Ok((m, (pair.input.width(), pair.input.height())))
            };
            measure().map_err(|err| Failure {
                sample: e.id.clone(),
                error: err.to_string(),
            })
        })
        .collect();

    let mut per_image = Vec::new();
    let mut failures = Vec::new();
    let mut resolutions: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for r in results {
        match r {
            Ok((m, res)) => {
                per_image.push(m);
                *resolutions.entry(res).or_default() += 1;
            }
            Err(f) => failures.push(f),
        }
    }
    if per_image.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "none of {} pairs could be evaluated",
            manifest.len()
        )));
    }
    // Most frequent resolution; ties go to the smallest.
    let resolution = resolutions
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(r, _)| *r)
        .expect("non-empty");
    let report = MetricReport::from_per_image(per_image)?;
    Ok(DatasetStats {
        name: name.to_string(),
        count: report.per_image.len(),
        psnr_db: report.psnr_db,
        ssim: report.ssim,
        niqe: None,
        psnr_exclusions: report.psnr_exclusions,
        resolution,
        failures,
        per_image: report.per_image,
    })
}
