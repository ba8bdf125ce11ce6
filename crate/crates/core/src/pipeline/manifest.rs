use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Component, Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::imgcore::io::is_supported_extension;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingRule {
    /// Pair files whose names agree up to the extension.
    #[default]
    SameFilename,
    /// Pair the i-th input with the i-th target after sorting by name.
    SortedOrder,
}

impl std::str::FromStr for PairingRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "same_filename" => Ok(PairingRule::SameFilename),
            "sorted_order" => Ok(PairingRule::SortedOrder),
            _ => Err(Error::config(format!(
                "unknown pairing rule {s:?} (expected same_filename or sorted_order)"
            ))),
        }
    }
}

/// One pair; paths are relative to the manifest root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    pub input: PathBuf,
    pub target: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetManifest {
    root: PathBuf,
    entries: Vec<ManifestEntry>,
    fingerprint: String,
}

/// Ids become output file names, so they must be a single plain path component.
pub fn check_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id.len() <= 255
        && !id.starts_with('.')
        && !id.chars().any(|c| c == '/' || c == '\\' || c.is_control());
    if ok {
        Ok(())
    } else {
        Err(Error::config(format!("invalid sample id {id:?}")))
    }
}

fn fingerprint(entries: &[ManifestEntry]) -> String {
    let mut h = Sha256::new();
    for e in entries {
        for part in [
            e.id.as_bytes(),
            e.input.to_string_lossy().as_bytes(),
            e.target.to_string_lossy().as_bytes(),
        ] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part);
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

impl DatasetManifest {
    /// Sorts entries by id and checks id uniqueness. Paths are not touched.
    pub fn new(root: impl Into<PathBuf>, mut entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            check_id(&e.id)?;
            if !seen.insert(e.id.as_str()) {
                return Err(Error::config(format!("duplicate sample id {:?}", e.id)));
            }
            for p in [&e.input, &e.target] {
                if p.as_os_str().is_empty() {
                    return Err(Error::config(format!("entry {:?} has an empty path", e.id)));
                }
            }
        }
        entries.sort_by(|a, b| a.id.cmp(&b.id));
        let fingerprint = fingerprint(&entries);
        Ok(Self {
            root: root.into(),
            entries,
            fingerprint,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Hex SHA-256 of the sorted entry list.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn input_path(&self, e: &ManifestEntry) -> PathBuf {
        self.root.join(&e.input)
    }

    pub fn target_path(&self, e: &ManifestEntry) -> PathBuf {
        self.root.join(&e.target)
    }

    /// Parses the manifest file format (a JSON array of `{id, input, target}`)
    /// without touching the file system.
    pub fn from_json_slice(bytes: &[u8], root: impl Into<PathBuf>) -> Result<Self> {
        let entries: Vec<ManifestEntry> = serde_json::from_slice(bytes)?;
        Self::new(root, entries)
    }

    /// Loads a manifest file; relative paths resolve against its directory and
    /// every referenced file must exist.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let root = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        let m = Self::from_json_slice(&bytes, root)?;
        let missing: Vec<String> = m
            .entries
            .iter()
            .flat_map(|e| [m.input_path(e), m.target_path(e)])
            .filter(|p| !p.is_file())
            .map(|p| format!("missing file {}", p.display()))
            .collect();
        if !missing.is_empty() {
            return Err(Error::Validation(missing));
        }
        Ok(m)
    }

    /// JSON array with paths relative to `manifest_dir` where possible.
    pub fn to_json(&self, manifest_dir: &Path) -> Result<String> {
        let base = absolute(manifest_dir);
        let entries: Vec<ManifestEntry> = self
            .entries
            .iter()
            .map(|e| {
                let rel = |p: PathBuf| {
                    let abs = absolute(&p);
                    match pathdiff::diff_paths(&abs, &base) {
                        Some(r) if r.as_os_str().is_empty() => PathBuf::from("."),
                        Some(r) => r,
                        None => abs,
                    }
                };
                ManifestEntry {
                    id: e.id.clone(),
                    input: rel(self.input_path(e)),
                    target: rel(self.target_path(e)),
                }
            })
            .collect();
        Ok(serde_json::to_string_pretty(&entries)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let dir = path.parent().unwrap_or(Path::new("."));
        let json = self.to_json(dir)?;
        fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    fn with_entries(&self, entries: Vec<ManifestEntry>) -> Result<Self> {
        Self::new(self.root.clone(), entries)
    }
}

fn absolute(p: &Path) -> PathBuf {
    let p = fs::canonicalize(p).unwrap_or_else(|_| {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            std::env::current_dir().unwrap_or_default().join(p)
        }
    });
    // Lexical cleanup of `.` components left by non-canonical joins.
    p.components()
        .filter(|c| !matches!(c, Component::CurDir))
        .collect()
}

fn common_ancestor(a: &Path, b: &Path) -> PathBuf {
    a.components()
        .zip(b.components())
        .take_while(|(x, y)| x == y)
        .map(|(x, _)| x)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScanWarning {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct ScanOutcome {
    pub manifest: DatasetManifest,
    pub warnings: Vec<ScanWarning>,
}

fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && is_supported_extension(&path) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Pairs images from two directories, excluding (and reporting) orphans,
/// unreadable files and dimension mismatches.
pub fn scan(input_dir: &Path, target_dir: &Path, rule: PairingRule) -> Result<ScanOutcome> {
    let inputs = list_images(input_dir)?;
    let targets = list_images(target_dir)?;
    let mut warnings = Vec::new();
    let mut candidates: Vec<(String, PathBuf, PathBuf)> = Vec::new();

    match rule {
        PairingRule::SameFilename => {
            let mut by_stem: BTreeMap<String, PathBuf> = BTreeMap::new();
            for t in targets {
                let key = stem(&t);
                match by_stem.entry(key) {
                    Entry::Occupied(o) => warnings.push(ScanWarning {
                        path: t,
                        reason: format!("duplicate target name {:?}", o.key()),
                    }),
                    Entry::Vacant(v) => {
                        v.insert(t);
                    }
                }
            }
            let mut used = HashSet::new();
            for i in inputs {
                let key = stem(&i);
                match by_stem.get(&key) {
                    Some(_) if used.contains(&key) => warnings.push(ScanWarning {
                        path: i,
                        reason: format!("duplicate input name {key:?}"),
                    }),
                    Some(t) => {
                        used.insert(key.clone());
                        candidates.push((key, i, t.clone()));
                    }
                    None => warnings.push(ScanWarning {
                        path: i,
                        reason: "orphan input: no target with the same name".into(),
                    }),
                }
            }
            for (key, t) in by_stem {
                if !used.contains(&key) {
                    warnings.push(ScanWarning {
                        path: t,
                        reason: "orphan target: no input with the same name".into(),
                    });
                }
            }
        }
        PairingRule::SortedOrder => {
            let n = inputs.len().min(targets.len());
            for extra in inputs.iter().skip(n) {
                warnings.push(ScanWarning {
                    path: extra.clone(),
                    reason: "orphan input: more inputs than targets".into(),
                });
            }
            for extra in targets.iter().skip(n) {
                warnings.push(ScanWarning {
                    path: extra.clone(),
                    reason: "orphan target: more targets than inputs".into(),
                });
            }
            let mut seen = HashSet::new();
            for (i, t) in inputs.into_iter().zip(targets).take(n) {
                let key = stem(&i);
                if !seen.insert(key.clone()) {
                    warnings.push(ScanWarning {
                        path: i,
                        reason: format!("duplicate input name {key:?}"),
                    });
                    continue;
                }
                candidates.push((key, i, t));
            }
        }
    }

    let in_abs = absolute(input_dir);
    let gt_abs = absolute(target_dir);
    let root = common_ancestor(&in_abs, &gt_abs);
    let mut entries = Vec::new();
    for (id, input, target) in candidates {
        if let Err(e) = check_id(&id) {
            warnings.push(ScanWarning {
                path: input,
                reason: e.to_string(),
            });
            continue;
        }
        let dims = (
            image::image_dimensions(&input),
            image::image_dimensions(&target),
        );
        match dims {
            (Ok(a), Ok(b)) if a == b => {}
            (Ok(a), Ok(b)) => {
                warnings.push(ScanWarning {
                    path: input,
                    reason: format!(
                        "dimension mismatch: input {}x{} vs target {}x{}",
                        a.0, a.1, b.0, b.1
                    ),
                });
                continue;
            }
            (Err(e), _) => {
                warnings.push(ScanWarning {
                    path: input,
                    reason: format!("unreadable: {e}"),
                });
                continue;
            }
            (_, Err(e)) => {
                warnings.push(ScanWarning {
                    path: target,
                    reason: format!("unreadable: {e}"),
                });
                continue;
            }
        }
        let rel = |p: &Path, dir: &Path| -> PathBuf {
            let abs = dir.join(p.file_name().expect("listed files have names"));
            abs.strip_prefix(&root).map(Path::to_path_buf).unwrap_or(abs)
        };
        entries.push(ManifestEntry {
            input: rel(&input, &in_abs),
            target: rel(&target, &gt_abs),
            id,
        });
    }
    if entries.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "no valid pairs between {} and {} ({} file(s) excluded)",
            input_dir.display(),
            target_dir.display(),
            warnings.len()
        )));
    }
    Ok(ScanOutcome {
        manifest: DatasetManifest::new(root, entries)?,
        warnings,
    })
}

/// Number of entries kept for `fraction` of `n`: `ceil(fraction * n)`, with a
/// small tolerance so `0.3 * 10` counts as exactly 3.
pub fn subsample_size(fraction: f64, n: usize) -> usize {
    let raw = fraction * n as f64;
    (raw - 1e-9 * raw.max(1.0)).ceil().max(0.0) as usize
}

/// Deterministic subset: a seeded permutation of the entries, truncated to
/// `ceil(fraction * N)`. Same seed, larger fraction: superset.
pub fn subsample(manifest: &DatasetManifest, fraction: f64, seed: u64) -> Result<DatasetManifest> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::config(format!(
            "fraction must be in (0, 1], got {fraction}"
        )));
    }
    let n = manifest.len();
    let k = subsample_size(fraction, n).min(n);
    if k == 0 {
        return Err(Error::EmptySelection { fraction, total: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let picked = order[..k]
        .iter()
        .map(|&i| manifest.entries[i].clone())
        .collect();
    manifest.with_entries(picked)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(n: usize) -> DatasetManifest {
        let entries = (0..n)
            .map(|i| ManifestEntry {
                id: format!("{i:05}"),
                input: format!("low/{i:05}.png").into(),
                target: format!("high/{i:05}.png").into(),
            })
            .collect();
        DatasetManifest::new("/data", entries).unwrap()
    }

    #[test]
    fn manifest_sorts_and_rejects_duplicates() {
        let e = |id: &str| ManifestEntry {
            id: id.into(),
            input: "a.png".into(),
            target: "b.png".into(),
        };
        let m = DatasetManifest::new("/", vec![e("b"), e("a")]).unwrap();
        assert_eq!(m.entries()[0].id, "a");
        assert!(DatasetManifest::new("/", vec![e("a"), e("a")]).is_err());
        assert!(DatasetManifest::new("/", vec![e("../x")]).is_err());
        assert!(DatasetManifest::new("/", vec![e("a/b")]).is_err());
        assert!(DatasetManifest::new("/", vec![e("")]).is_err());
    }

    #[test]
    fn fingerprint_depends_only_on_sorted_entries() {
        let a = synthetic(5);
        let mut rev = a.entries().to_vec();
        rev.reverse();
        let b = DatasetManifest::new("/elsewhere", rev).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), synthetic(6).fingerprint());
        assert_eq!(a.fingerprint().len(), 64);
    }

    #[test]
    fn json_parse() {
        let m = DatasetManifest::from_json_slice(
            br#"[{"id":"x","input":"low/x.png","target":"high/x.png"}]"#,
            "/r",
        )
        .unwrap();
        assert_eq!(m.input_path(&m.entries()[0]), PathBuf::from("/r/low/x.png"));
        assert!(DatasetManifest::from_json_slice(br#"{"id":"x"}"#, "/r").is_err());
        assert!(DatasetManifest::from_json_slice(
            br#"[{"id":"x","input":"a","target":"b","extra":1}]"#,
            "/r"
        )
        .is_err());
    }

    #[test]
    fn subsample_sizes_and_identity() {
        let m = synthetic(1000);
        assert_eq!(subsample(&m, 0.2, 1).unwrap().len(), 200);
        assert_eq!(subsample(&m, 1.0, 1).unwrap(), m);
        assert_eq!(subsample(&m, 0.0011, 1).unwrap().len(), 2);
        assert!(subsample(&m, 0.0, 1).is_err());
        assert!(subsample(&m, 1.5, 1).is_err());
        let tiny = synthetic(0);
        assert!(matches!(
            subsample(&tiny, 0.5, 1),
            Err(Error::EmptySelection { .. })
        ));
    }

    #[test]
    fn subsample_size_tolerates_decimal_fractions() {
        for n in [1usize, 7, 10, 15, 100, 1111] {
            for step in 2..=10usize {
                let f = step as f64 / 10.0;
                let expected = (step * n).div_ceil(10);
                assert_eq!(subsample_size(f, n), expected, "f={f} n={n}");
                // accumulated 0.2 + 0.1 + ... variants
                let acc = (0..step - 2).fold(0.2, |a, _| a + 0.1);
                assert_eq!(subsample_size(acc, n), expected, "acc={acc} n={n}");
            }
        }
    }

    #[test]
    fn subsample_is_deterministic_and_seed_sensitive() {
        let m = synthetic(50);
        assert_eq!(subsample(&m, 0.3, 9).unwrap(), subsample(&m, 0.3, 9).unwrap());
        assert_ne!(subsample(&m, 0.3, 9).unwrap(), subsample(&m, 0.3, 10).unwrap());
    }
}
