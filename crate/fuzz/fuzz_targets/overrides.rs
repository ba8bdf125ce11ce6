#![no_main]

use libfuzzer_sys::fuzz_target;
use patchforge::pipeline::{apply_overrides, RunConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let overrides: Vec<String> = text.lines().map(str::to_owned).collect();
    let mut value = serde_json::json!({});
    let _ = apply_overrides(&mut value, &overrides);
    let _ = RunConfig::load(None, &overrides);
});
