#![no_main]

use libfuzzer_sys::fuzz_target;
use patchforge::pipeline::{parse_scales, parse_strategies};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(scales) = parse_scales(text) {
        assert!(scales.windows(2).all(|w| w[0] < w[1]));
        assert!(scales.iter().all(|s| *s > 0.0 && *s <= 1.0));
    }
    let _ = parse_strategies(text);
});
