mod common;

use patchforge::augments::{apply, copy_blend, cut_blur, AugmentConfig, Direction, Strategy as Aug};
use proptest::strategy::Strategy as _;
use patchforge::maskgen::{coverage, rasterize, sample_patches, IntensityMode, MaskConfig, PatchShape};
use patchforge::{blend, AlphaMask, Image, PairedSample, SeededRng};
use proptest::prelude::*;

fn image_strategy(w: usize, h: usize, ch: usize) -> impl proptest::strategy::Strategy<Value = Image> {
    prop::collection::vec(0.0f32..=1.0, w * h * ch)
        .prop_map(move |d| Image::new(w, h, ch, d).unwrap())
}

fn mask_strategy(w: usize, h: usize) -> impl proptest::strategy::Strategy<Value = AlphaMask> {
    prop::collection::vec(
        prop_oneof![Just(0.0f32), Just(1.0f32), 0.0f32..=1.0],
        w * h,
    )
    .prop_map(move |d| AlphaMask::new(w, h, d).unwrap())
}

fn shape_strategy() -> impl proptest::strategy::Strategy<Value = PatchShape> {
    prop_oneof![
        Just(PatchShape::Square),
        Just(PatchShape::Rectangle),
        Just(PatchShape::Circle)
    ]
}

proptest! {
    #[test]
    fn blend_is_convex_and_local(
        a in image_strategy(9, 7, 3),
        b in image_strategy(9, 7, 3),
        m in mask_strategy(9, 7),
    ) {
        let out = blend(&a, &b, &m).unwrap();
        for (i, &r) in out.data().iter().enumerate() {
            let (x, y) = (a.data()[i], b.data()[i]);
            prop_assert!(x.min(y) <= r && r <= x.max(y));
            let alpha = m.alpha()[i / 3];
            if alpha == 0.0 { prop_assert_eq!(r.to_bits(), x.to_bits()); }
            if alpha == 1.0 { prop_assert_eq!(r.to_bits(), y.to_bits()); }
        }
    }

    #[test]
    fn blend_symmetry(
        a in image_strategy(8, 8, 1),
        b in image_strategy(8, 8, 1),
        m in mask_strategy(8, 8),
    ) {
        let lhs = blend(&a, &b, &m).unwrap();
        let rhs = blend(&b, &a, &m.complement()).unwrap();
        for (l, r) in lhs.data().iter().zip(rhs.data()) {
            // 1 - alpha rounds once more on this side of the chain
            prop_assert!((l - r).abs() <= 2.0 * f32::EPSILON, "{} vs {}", l, r);
        }
    }

    #[test]
    fn quantize_round_trip_within_half_level(s in 0.0f32..=1.0) {
        use patchforge::imgcore::io::{dequantize_sample, quantize_sample};
        let back = dequantize_sample(quantize_sample(s));
        prop_assert!((back - s).abs() <= 1.0 / 510.0 + 1e-7);
    }

    #[test]
    fn sampled_masks_respect_bounds(
        w in 5usize..120,
        h in 5usize..120,
        mp_max in 0.2f64..=1.0,
        beta_max in 0.05f64..=1.0,
        n in 0usize..4,
        shape in shape_strategy(),
        fixed in any::<bool>(),
        seed in any::<u64>(),
        stream in any::<u64>(),
    ) {
        let cfg = MaskConfig {
            mp_max,
            beta_max,
            n_patches: n,
            shape,
            intensity_mode: if fixed { IntensityMode::Fixed } else { IntensityMode::UniformRandom },
        };
        let patches = sample_patches(&cfg, w, h, &mut SeededRng::new(seed, stream)).unwrap();
        prop_assert_eq!(patches.len(), n);
        let again = sample_patches(&cfg, w, h, &mut SeededRng::new(seed, stream)).unwrap();
        prop_assert_eq!(&patches, &again);
        for p in &patches {
            prop_assert!(p.extent_x as f64 <= mp_max * w as f64 + 1e-9);
            prop_assert!(p.extent_y as f64 <= mp_max * h as f64 + 1e-9);
            prop_assert!(p.intensity > 0.0 && p.intensity <= beta_max as f32);
        }
        let m = rasterize(&patches, w, h).unwrap();
        prop_assert!(coverage(&m) <= n as f64 * mp_max * mp_max + 1e-12);
        for &a in m.alpha() {
            prop_assert!(a == 0.0 || patches.iter().any(|p| p.intensity == a));
        }
    }

    #[test]
    fn strategies_preserve_range_and_target(
        input in image_strategy(24, 20, 3),
        target in image_strategy(24, 20, 3),
        strategy_idx in 0usize..7,
        seed in any::<u64>(),
    ) {
        let strategy = Aug::ALL[strategy_idx];
        let pair = PairedSample::new("p", input, target).unwrap();
        let donor = PairedSample::new("d", pair.target.clone(), pair.input.clone()).unwrap();
        let pool = vec![donor];
        let cfg = AugmentConfig::for_strategy(strategy);
        let out = apply(&pair, &cfg, Some(&pool), &mut SeededRng::new(seed, 0)).unwrap();
        prop_assert!(out.input.data().iter().all(|s| (0.0..=1.0).contains(s)));
        prop_assert!(out.target.data().iter().all(|s| (0.0..=1.0).contains(s)));
        if !strategy.needs_donor() {
            prop_assert_eq!(&out.target, &pair.target);
        }
        if matches!(strategy, Aug::CopyBlend | Aug::CutBlur | Aug::CutOut | Aug::PatchGaussian) {
            let base = match out.provenance.direction {
                Some(Direction::NoisyOntoClean) => &pair.target,
                _ => &pair.input,
            };
            for ((o, b), &a) in out.input.data().chunks_exact(3).zip(base.data().chunks_exact(3)).zip(out.mask.alpha()) {
                if a == 0.0 { prop_assert_eq!(o, b); }
            }
        }
        // replay from provenance alone
        let replay = apply(
            &pair,
            &out.provenance.config,
            Some(&pool),
            &mut SeededRng::new(out.provenance.master_seed, out.provenance.stream_id),
        ).unwrap();
        prop_assert_eq!(replay, out);
    }

    #[test]
    fn cut_blur_equals_fixed_full_copy_blend(
        input in image_strategy(20, 20, 1),
        target in image_strategy(20, 20, 1),
        seed in any::<u64>(),
    ) {
        let pair = PairedSample::new("p", input, target).unwrap();
        let mut cfg = AugmentConfig::default();
        cfg.mask.beta_max = 1.0;
        cfg.mask.intensity_mode = IntensityMode::Fixed;
        let a = copy_blend(&pair, &cfg, &mut SeededRng::new(seed, 1)).unwrap();
        let b = cut_blur(&pair, &cfg, &mut SeededRng::new(seed, 1)).unwrap();
        prop_assert_eq!(a.input, b.input);
    }
}

#[test]
fn coverage_bound_over_many_draws() {
    for shape in [PatchShape::Square, PatchShape::Rectangle] {
        let cfg = MaskConfig {
            shape,
            n_patches: 2,
            mp_max: 0.3,
            ..MaskConfig::default()
        };
        for stream in 0..1000 {
            let p = sample_patches(&cfg, 97, 61, &mut SeededRng::new(13, stream)).unwrap();
            let m = rasterize(&p, 97, 61).unwrap();
            assert!(coverage(&m) <= 2.0 * 0.3 * 0.3);
        }
    }
}
