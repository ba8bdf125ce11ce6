//! Dataset-level tooling: manifests, subsampling, batch augmentation runs,
//! scale sweeps and Table-1-style statistics.

pub mod config;
pub mod manifest;
pub mod run;
pub mod stats;
pub mod sweep;

use sha2::{Digest, Sha256};

pub use config::{apply_overrides, parse_scales, parse_strategies, RunConfig};
pub use manifest::{scan, subsample, DatasetManifest, ManifestEntry, PairingRule, ScanOutcome};
pub use run::{run_augmentation, RunSummary};
pub use stats::{dataset_stats, DatasetStats};
pub use sweep::{sweep, CellRecord, SweepGrid, SweepReport};

/// Stable 64-bit key from a domain tag and a list of parts. Parts are
/// length-prefixed so `("ab", "c")` and `("a", "bc")` differ.
pub fn stable_hash64(tag: &str, parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    h.update((tag.len() as u64).to_le_bytes());
    h.update(tag.as_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 has 32 bytes"))
}

/// RNG stream for copy `copy_index` of entry `entry_id`. Depends on nothing
/// else, so adding or removing other entries never changes it.
pub fn sample_stream_id(entry_id: &str, copy_index: usize) -> u64 {
    stable_hash64(
        "augment",
        &[entry_id.as_bytes(), &(copy_index as u64).to_le_bytes()],
    )
}

/// Builds a rayon pool with `workers` threads (at least one).
pub fn worker_pool(workers: usize) -> crate::Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| crate::Error::config(format!("cannot start worker pool: {e}")))
}
