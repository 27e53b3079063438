#![no_main]

use contra_core::report::{classify, order_by, parse_summaries, write_summaries, SortMode};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(records) = parse_summaries(text) else {
        return;
    };
    assert_eq!(
        parse_summaries(&write_summaries(&records)).unwrap(),
        records
    );

    let decided = classify(&records, Some(0.3), Some(0.5)).unwrap();
    assert_eq!(decided.len(), records.len());

    let summaries: Vec<_> = records.iter().map(|r| r.to_summary()).collect();
    let ordered = order_by(summaries.iter().collect(), SortMode::CenterOut, |e| *e);
    assert_eq!(ordered.len(), records.len());
});
