#![no_main]

use libfuzzer_sys::fuzz_target;
use patchforge::pipeline::DatasetManifest;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = DatasetManifest::from_json_slice(data, "/data") {
        let text = m.to_json(std::path::Path::new("/data")).expect("serializable");
        let again = DatasetManifest::from_json_slice(text.as_bytes(), "/data").expect("reparse");
        let ids = |m: &DatasetManifest| m.entries().iter().map(|e| e.id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&m), ids(&again));
    }
});
