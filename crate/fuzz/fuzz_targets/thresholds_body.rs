#![no_main]

use contra_core::report::{classify, parse_summaries, Thresholds};
use libfuzzer_sys::fuzz_target;

const STORED: &str = r#"[
  {"id": 1, "point_estimate": -0.05, "ci_lo": -0.15, "ci_hi": 0.05, "ls_pct": 0.0, "ms_pct": 13.0,
   "credible_level": 0.95, "negligible": null, "meaningful": null, "k": 500000, "seed": 42},
  {"id": 2, "point_estimate": 0.4, "ci_lo": 0.1, "ci_hi": 0.7, "ls_pct": 10.0, "ms_pct": 68.0,
   "credible_level": 0.95, "negligible": null, "meaningful": null, "k": 500000, "seed": 42}
]"#;

fuzz_target!(|data: &[u8]| {
    let Ok(t) = serde_json::from_slice::<Thresholds>(data) else {
        return;
    };
    let records = parse_summaries(STORED).unwrap();
    let decided = classify(
        &records,
        Some(t.negligible_threshold),
        t.meaningful_threshold,
    );
    // Classification accepts exactly the thresholds that validate.
    assert_eq!(decided.is_ok(), t.validate().is_ok());
});
