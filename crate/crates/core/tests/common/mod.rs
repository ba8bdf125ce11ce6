#![allow(dead_code)]

use std::path::Path;

use patchforge::imgcore::io::save_png;
use patchforge::{Image, PairedSample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize, ch: usize) -> Image {
    let data = (0..w * h * ch).map(|_| rng.random::<f32>()).collect();
    Image::new(w, h, ch, data).unwrap()
}

/// 8-bit-representable image, so PNG round trips are lossless.
pub fn random_quantized(rng: &mut ChaCha8Rng, w: usize, h: usize, ch: usize) -> Image {
    let data = (0..w * h * ch)
        .map(|_| rng.random_range(0..=255u8) as f32 / 255.0)
        .collect();
    Image::new(w, h, ch, data).unwrap()
}

pub fn random_pair(seed: u64, id: &str, w: usize, h: usize) -> PairedSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let input = random_quantized(&mut rng, w, h, 3);
    let target = random_quantized(&mut rng, w, h, 3);
    PairedSample::new(id, input, target).unwrap()
}

/// Writes `n` low/high pairs of size `w x h` into `root/low` and `root/high`.
pub fn write_dataset(root: &Path, n: usize, w: usize, h: usize) {
    std::fs::create_dir_all(root.join("low")).unwrap();
    std::fs::create_dir_all(root.join("high")).unwrap();
    for i in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + i as u64);
        // dark degraded input, brighter clean target
        let target = random_quantized(&mut rng, w, h, 3);
        let input = Image::new(
            w,
            h,
            3,
            target
                .data()
                .iter()
                .map(|s| ((s * 255.0 / 4.0).round()) / 255.0)
                .collect(),
        )
        .unwrap();
        save_png(&input, &root.join("low").join(format!("{i:04}.png"))).unwrap();
        save_png(&target, &root.join("high").join(format!("{i:04}.png"))).unwrap();
    }
}
