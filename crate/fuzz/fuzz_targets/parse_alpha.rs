#![no_main]

use contra_core::ingest::parse_alpha;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if data.len() > 256 {
        return;
    }
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(alpha) = parse_alpha(text) {
            assert!(alpha.is_finite());
            assert_eq!(parse_alpha(&alpha.to_string()), Ok(alpha));
        }
    }
});
