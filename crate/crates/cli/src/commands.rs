use std::fs;
use std::io::{self, Write};
use std::path::Path;

use patchforge::imgcore::io::load_image;
use patchforge::imgcore::{inspect_pair, PairReport, PairedSample};
use patchforge::pipeline::manifest::ScanWarning;
use patchforge::pipeline::sweep::SweepGrid;
use patchforge::pipeline::{
    dataset_stats, parse_scales, parse_strategies, run_augmentation, scan, subsample, sweep,
    worker_pool, DatasetManifest, DatasetStats, PairingRule, RunConfig,
};
use patchforge::quality::SsimParams;
use patchforge::{Error, Result};
use serde_json::json;

use crate::args::{Cli, Command, ConfigArgs, DataArgs};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success = 0,
    Partial = 2,
}

pub fn run(cli: Cli) -> Result<Outcome> {
    let workers = cli.workers.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    });
    if workers == 0 {
        return Err(Error::Config("--workers must be at least 1".into()));
    }
    let pool = worker_pool(workers)?;
    let json = cli.json;
    pool.install(|| match cli.command {
        Command::Augment(a) => augment(a, workers),
        Command::Sweep(a) => sweep_cmd(a, json),
        Command::Metrics(a) => metrics(a, json),
        Command::Subsample(a) => subsample_cmd(a, json),
        Command::Stats(a) => stats(a, json),
        Command::Validate(a) => validate(a, json),
    })
}

/// Writes to stdout; a closed pipe downstream is not an error.
fn emit(text: &str) -> Result<()> {
    let mut out = io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(Error::Io {
            path: "<stdout>".into(),
            source: e,
        }),
        _ => Ok(()),
    }
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    emit(&(serde_json::to_string_pretty(v)? + "\n"))
}

fn report_warnings(warnings: &[ScanWarning]) {
    for w in warnings {
        eprintln!("warning: {}: {}", w.path.display(), w.reason);
    }
}

fn load_data(data: &DataArgs) -> Result<(DatasetManifest, Vec<ScanWarning>)> {
    match (&data.manifest, &data.input_dir, &data.gt_dir) {
        (Some(m), None, None) => Ok((DatasetManifest::load(m)?, Vec::new())),
        (None, Some(i), Some(g)) => {
            let rule: PairingRule = data.pairing.parse()?;
            let o = scan(i, g, rule)?;
            Ok((o.manifest, o.warnings))
        }
        (None, Some(_), None) => Err(Error::Config("--in requires --gt".into())),
        (None, None, Some(_)) => Err(Error::Config("--gt requires --in".into())),
        _ => Err(Error::Config(
            "give either --manifest or both --in and --gt".into(),
        )),
    }
}

fn load_config(args: &ConfigArgs) -> Result<RunConfig> {
    let text = args
        .config
        .as_ref()
        .map(|p| fs::read_to_string(p).map_err(|e| Error::Io { path: p.clone(), source: e }))
        .transpose()?;
    let mut cfg = RunConfig::load(text.as_deref(), &args.overrides).map_err(|e| match (e, &args.config) {
        (Error::Config(msg), Some(p)) => Error::Config(format!("{}: {msg}", p.display())),
        (e, _) => e,
    })?;
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    Ok(cfg)
}

fn require_seed(cfg: &RunConfig) -> Result<u64> {
    cfg.seed.ok_or_else(|| {
        Error::Config("a seed is required: pass --seed or set `seed` in the config".into())
    })
}

fn augment(a: crate::args::AugmentArgs, workers: usize) -> Result<Outcome> {
    let mut cfg = load_config(&a.config)?;
    if let Some(c) = a.copies {
        cfg.copies_per_sample = c;
    }
    let seed = require_seed(&cfg)?;
    let aug = cfg.augment_config()?;
    let (manifest, warnings) = load_data(&a.data)?;
    report_warnings(&warnings);
    let summary = run_augmentation(&manifest, &aug, cfg.copies_per_sample, seed, &a.out, workers)?;
    for f in &summary.failures {
        eprintln!("failed: {}: {}", f.sample, f.error);
    }
    print_json(&summary)?;
    Ok(if summary.is_complete() {
        Outcome::Success
    } else {
        Outcome::Partial
    })
}

fn sweep_cmd(a: crate::args::SweepArgs, json: bool) -> Result<Outcome> {
    let grid = SweepGrid {
        scales: parse_scales(&a.scales)?,
        strategies: parse_strategies(&a.strategies)?,
        samples_per_cell: a.samples,
    };
    grid.validate()?;
    let cfg = load_config(&a.config)?;
    let seed = require_seed(&cfg)?;
    let base = cfg.augment_config()?;
    let (manifest, warnings) = load_data(&a.data)?;
    report_warnings(&warnings);
    let report = sweep(&manifest, &grid, &base, seed)?;
    if let Some(out) = &a.out {
        fs::create_dir_all(out).map_err(|e| Error::Io { path: out.clone(), source: e })?;
        write(&out.join("sweep.csv"), report.to_csv()?)?;
        write(&out.join("sweep.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    }
    if json {
        print_json(&report)?;
    } else {
        emit(&report.to_table())?;
    }
    for c in report.cells.iter().filter(|c| c.error.is_some()) {
        eprintln!(
            "failed cell {} @ {}: {}",
            c.strategy,
            c.scale,
            c.error.as_deref().unwrap_or_default()
        );
    }
    Ok(if report.failed_cells() == 0 {
        Outcome::Success
    } else {
        Outcome::Partial
    })
}

fn write(path: &Path, text: String) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io { path: path.to_owned(), source: e })
}

fn dataset_name(data: &DataArgs, name: &Option<String>) -> String {
    name.clone().unwrap_or_else(|| {
        let p = data
            .input_dir
            .as_ref()
            .or(data.manifest.as_ref())
            .and_then(|p| p.canonicalize().ok());
        p.as_deref()
            .and_then(|p| {
                if data.manifest.is_some() {
                    p.file_stem()
                } else {
                    p.file_name()
                }
            })
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    })
}

fn emit_stats(s: &DatasetStats, json: bool) -> Result<Outcome> {
    for f in &s.failures {
        eprintln!("failed: {}: {}", f.sample, f.error);
    }
    if json {
        print_json(s)?;
    } else {
        emit(&DatasetStats::table(std::slice::from_ref(s)))?;
        if s.psnr_exclusions > 0 {
            eprintln!("{} identical pair(s) excluded from the PSNR mean", s.psnr_exclusions);
        }
    }
    Ok(if s.failures.is_empty() {
        Outcome::Success
    } else {
        Outcome::Partial
    })
}

fn metrics(a: crate::args::MetricsArgs, json: bool) -> Result<Outcome> {
    if a.data.manifest.is_some() || a.data.input_dir.is_none() || a.data.gt_dir.is_none() {
        return Err(Error::Config("metrics compares two directories: pass --in and --gt".into()));
    }
    let (manifest, warnings) = load_data(&a.data)?;
    if !warnings.is_empty() {
        report_warnings(&warnings);
        return Err(Error::Config(format!(
            "{} file(s) could not be paired",
            warnings.len()
        )));
    }
    let s = dataset_stats(&manifest, &dataset_name(&a.data, &a.name), &SsimParams::default())?;
    emit_stats(&s, json)
}

fn stats(a: crate::args::StatsArgs, json: bool) -> Result<Outcome> {
    let (manifest, warnings) = load_data(&a.data)?;
    report_warnings(&warnings);
    let s = dataset_stats(&manifest, &dataset_name(&a.data, &a.name), &SsimParams::default())?;
    emit_stats(&s, json)
}

fn subsample_cmd(a: crate::args::SubsampleArgs, json: bool) -> Result<Outcome> {
    let (manifest, warnings) = load_data(&a.data)?;
    report_warnings(&warnings);
    let picked = subsample(&manifest, a.fraction, a.seed)?;
    match &a.out {
        Some(path) => {
            picked.save(path)?;
            let summary = json!({
                "selected": picked.len(),
                "total": manifest.len(),
                "fraction": a.fraction,
                "seed": a.seed,
                "fingerprint": picked.fingerprint(),
                "out": path,
            });
            if json {
                print_json(&summary)?;
            } else {
                emit(&format!(
                    "selected {} of {} entries -> {}\n",
                    picked.len(),
                    manifest.len(),
                    path.display()
                ))?;
            }
        }
        None => emit(&(picked.to_json(Path::new("."))? + "\n"))?,
    }
    Ok(Outcome::Success)
}

fn check_entry(manifest: &DatasetManifest, e: &patchforge::pipeline::ManifestEntry) -> PairReport {
    let mut violations = Vec::new();
    let input = load_image(&manifest.input_path(e))
        .map_err(|err| violations.push(format!("input: {err}")))
        .ok();
    let target = load_image(&manifest.target_path(e))
        .map_err(|err| violations.push(format!("target: {err}")))
        .ok();
    if let (Some(mut i), Some(mut t)) = (input, target) {
        if i.channels() != t.channels() {
            i = i.to_rgb();
            t = t.to_rgb();
        }
        let pair = PairedSample {
            id: e.id.clone(),
            input: i,
            target: t,
        };
        violations.extend(inspect_pair(&pair).violations);
    }
    PairReport {
        id: e.id.clone(),
        violations,
    }
}

fn validate(a: crate::args::ValidateArgs, json: bool) -> Result<Outcome> {
    use rayon::prelude::*;

    let (manifest, warnings) = load_data(&a.data)?;
    let reports: Vec<PairReport> = manifest
        .entries()
        .par_iter()
        .map(|e| check_entry(&manifest, e))
        .collect();
    let bad: Vec<&PairReport> = reports.iter().filter(|r| !r.is_ok()).collect();
    if json {
        print_json(&json!({
            "pairs": manifest.len(),
            "invalid": bad,
            "excluded": warnings,
        }))?;
    } else {
        report_warnings(&warnings);
        let mut text = String::new();
        for r in &bad {
            for v in &r.violations {
                text += &format!("{}: {v}\n", r.id);
            }
        }
        text += &format!(
            "{} pair(s) checked, {} invalid, {} file(s) excluded while pairing\n",
            manifest.len(),
            bad.len(),
            warnings.len()
        );
        emit(&text)?;
    }
    Ok(if bad.is_empty() && warnings.is_empty() {
        Outcome::Success
    } else {
        Outcome::Partial
    })
}
