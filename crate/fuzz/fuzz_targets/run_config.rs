#![no_main]

use libfuzzer_sys::fuzz_target;
use patchforge::pipeline::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = RunConfig::from_json_str(text) {
        // a config that parses either validates or reports an error, never panics
        let _ = cfg.augment_config();
    }
});
