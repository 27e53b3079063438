#![no_main]

use contra_core::ingest::{load_study_table, parse_study_table, validate_study, write_study_table};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(studies) = parse_study_table(text) else {
        return;
    };
    for s in &studies {
        let _ = validate_study(s);
    }
    // Anything that parses must survive a write and re-read unchanged.
    let written = write_study_table(&studies).expect("parsed tables are writable");
    let reread = parse_study_table(&written).expect("written tables parse");
    assert_eq!(studies, reread);
    let loaded = load_study_table(text).expect("load accepts what parse accepts");
    assert_eq!(loaded.studies.len(), studies.len());
});
