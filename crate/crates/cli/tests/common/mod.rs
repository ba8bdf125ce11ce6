#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use patchforge::imgcore::io::save_png;
use patchforge::{Image, SeededRng};
use rand::Rng;
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

pub fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_patchforge"));
    cmd.env_remove("PATCHFORGE_WORKERS");
    cmd
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn patchforge")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

/// Random 8-bit image with a smooth component so SSIM windows see structure.
pub fn synthetic_image(seed: u64, w: usize, h: usize) -> Image {
    let mut rng = SeededRng::new(seed, 0);
    let phase: f32 = rng.random::<f32>() * 6.0;
    Image::from_fn(w, h, 3, |x, y, c| {
        let smooth = 0.5 + 0.3 * ((x as f32 * 0.3 + phase + c as f32).sin() * (y as f32 * 0.2).cos());
        let v = 0.8 * smooth + 0.2 * rng.random::<f32>();
        (v * 255.0).round() / 255.0
    })
    .unwrap()
}

/// Writes `n` pairs under `root/low` and `root/high`; the low side is a
/// darkened copy of the high side. Returns the two directories.
pub fn write_dataset(root: &Path, n: usize, w: usize, h: usize) -> (PathBuf, PathBuf) {
    let (low, high) = (root.join("low"), root.join("high"));
    std::fs::create_dir_all(&low).unwrap();
    std::fs::create_dir_all(&high).unwrap();
    for i in 0..n {
        let target = synthetic_image(500 + i as u64, w, h);
        let input = Image::new(
            w,
            h,
            3,
            target.data().iter().map(|s| (s * 255.0 / 4.0).round() / 255.0).collect(),
        )
        .unwrap();
        save_png(&input, &low.join(format!("{i:04}.png"))).unwrap();
        save_png(&target, &high.join(format!("{i:04}.png"))).unwrap();
    }
    (low, high)
}

/// SHA-256 over every file's relative path and contents, in path order.
pub fn tree_hash(root: &Path) -> String {
    let mut hasher = Sha256::new();
    let mut files: Vec<PathBuf> = WalkDir::new(root)
        .into_iter()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().is_file())
        .map(|e| e.path().strip_prefix(root).unwrap().to_owned())
        .collect();
    files.sort();
    for rel in files {
        let name = rel.to_string_lossy();
        hasher.update((name.len() as u64).to_le_bytes());
        hasher.update(name.as_bytes());
        let bytes = std::fs::read(root.join(&rel)).unwrap();
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
    format!("{:x}", hasher.finalize())
}
