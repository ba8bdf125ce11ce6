#![no_main]

use libfuzzer_sys::fuzz_target;
use patchforge::imgcore::io::{decode_image, encode_png};

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = decode_image(data) {
        assert!(img.data().iter().all(|s| (0.0..=1.0).contains(s)));
        let png = encode_png(&img).expect("decoded image re-encodes");
        assert_eq!(decode_image(&png).expect("own output decodes"), img);
    }
});
