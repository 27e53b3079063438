//! Per-study summary records: the JSON exchanged between `analyze`,
//! `classify` and the HTTP service.
//!
//! ```json
//! {"id":1,"point_estimate":-0.055,"ci_lo":-0.146,"ci_hi":0.046,"ls_pct":0.0,
//!  "ms_pct":13.0,"credible_level":0.95,"negligible":true,"meaningful":null,
//!  "k":500000,"seed":42}
//! ```

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contraplot::display_order;
use crate::effectsize::{EffectSizeError, EffectSizeSummary};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("malformed summaries: {0}")]
    Json(#[from] serde_json::Error),
    #[error("record {id}: {reason}")]
    InvalidRecord { id: u32, reason: String },
    #[error("duplicate record id {0}")]
    DuplicateId(u32),
    #[error(transparent)]
    Threshold(#[from] EffectSizeError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryRecord {
    pub id: u32,
    pub point_estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub ls_pct: f64,
    pub ms_pct: f64,
    pub credible_level: f64,
    /// `None` when no negligible threshold was tested.
    pub negligible: Option<bool>,
    /// `None` when no meaningful threshold was tested.
    pub meaningful: Option<bool>,
    pub k: usize,
    pub seed: u64,
}

impl SummaryRecord {
    pub fn from_summary(e: &EffectSizeSummary) -> Self {
        SummaryRecord {
            id: e.study_id,
            point_estimate: e.point_estimate,
            ci_lo: e.ci_lo,
            ci_hi: e.ci_hi,
            ls_pct: e.ls_pct,
            ms_pct: e.ms_pct,
            credible_level: e.credible_level,
            negligible: None,
            meaningful: None,
            k: e.k,
            seed: e.seed,
        }
    }

    pub fn to_summary(&self) -> EffectSizeSummary {
        EffectSizeSummary {
            study_id: self.id,
            point_estimate: self.point_estimate,
            ci_lo: self.ci_lo,
            ci_hi: self.ci_hi,
            ls_pct: self.ls_pct,
            ms_pct: self.ms_pct,
            credible_level: self.credible_level,
            k: self.k,
            seed: self.seed,
        }
    }

    fn check(&self) -> Result<(), ReportError> {
        let bad = |reason: &str| {
            Err(ReportError::InvalidRecord {
                id: self.id,
                reason: reason.to_string(),
            })
        };
        if !(self.ci_lo <= self.ci_hi) {
            return bad("ci_lo must not exceed ci_hi");
        }
        if !(self.ls_pct >= 0.0) || !(self.ms_pct >= 0.0) {
            return bad("ls_pct and ms_pct must be nonnegative");
        }
        if !(self.credible_level > 0.0 && self.credible_level < 1.0) {
            return bad("credible_level must lie in (0, 1)");
        }
        Ok(())
    }
}

/// Thresholds for one round of tests, as fractions (0.30 = 30%).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub negligible_threshold: f64,
    #[serde(default)]
    pub meaningful_threshold: Option<f64>,
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), EffectSizeError> {
        for t in std::iter::once(self.negligible_threshold).chain(self.meaningful_threshold) {
            if !(t > 0.0) || !t.is_finite() {
                return Err(EffectSizeError::NonPositiveThreshold(t));
            }
        }
        Ok(())
    }
}

/// Row order for reports and plots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SortMode {
    #[default]
    CenterOut,
    FileOrder,
}

/// Reorders items whose summaries are given by `key` according to `mode`.
pub fn order_by<T>(
    items: Vec<T>,
    mode: SortMode,
    key: impl Fn(&T) -> &EffectSizeSummary,
) -> Vec<T> {
    match mode {
        SortMode::FileOrder => items,
        SortMode::CenterOut => {
            let order = {
                let summaries: Vec<&EffectSizeSummary> = items.iter().map(&key).collect();
                display_order(&summaries)
            };
            let mut slots: Vec<Option<T>> = items.into_iter().map(Some).collect();
            order
                .into_iter()
                .map(|i| slots[i].take().expect("display order is a permutation"))
                .collect()
        }
    }
}

/// Applies both threshold tests to stored records. Never samples.
pub fn classify(
    records: &[SummaryRecord],
    negligible_threshold: Option<f64>,
    meaningful_threshold: Option<f64>,
) -> Result<Vec<SummaryRecord>, ReportError> {
    records
        .iter()
        .map(|r| {
            let e = r.to_summary();
            let negligible = negligible_threshold
                .map(|t| crate::effectsize::test_negligible(e.ms_pct, t))
                .transpose()?;
            let meaningful = meaningful_threshold
                .map(|t| crate::effectsize::test_meaningful(e.ls_pct, t))
                .transpose()?;
            Ok(SummaryRecord {
                negligible,
                meaningful,
                ..r.clone()
            })
        })
        .collect()
}

pub fn parse_summaries(text: &str) -> Result<Vec<SummaryRecord>, ReportError> {
    let records: Vec<SummaryRecord> = serde_json::from_str(text)?;
    let mut seen = HashSet::new();
    for r in &records {
        r.check()?;
        if !seen.insert(r.id) {
            return Err(ReportError::DuplicateId(r.id));
        }
    }
    Ok(records)
}

pub fn write_summaries(records: &[SummaryRecord]) -> String {
    let mut s = serde_json::to_string_pretty(records).expect("records are always serializable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::summary;

    #[test]
    fn key_order_is_fixed() {
        let r = SummaryRecord::from_summary(&summary(3, -0.1, 0.2, 0.0, 21.5));
        let json = serde_json::to_string(&r).unwrap();
        let keys: Vec<&str> = json
            .split('"')
            .enumerate()
            .filter(|(i, _)| i % 2 == 1)
            .map(|(_, k)| k)
            .collect();
        assert_eq!(
            keys,
            [
                "id",
                "point_estimate",
                "ci_lo",
                "ci_hi",
                "ls_pct",
                "ms_pct",
                "credible_level",
                "negligible",
                "meaningful",
                "k",
                "seed"
            ]
        );
        assert!(json.contains(r#""negligible":null"#));
    }

    #[test]
    fn round_trip_is_exact() {
        let mut r = SummaryRecord::from_summary(&summary(3, -0.123456789012345, 0.2, 0.0, 21.5));
        r.negligible = Some(true);
        let parsed = parse_summaries(&write_summaries(&[r.clone()])).unwrap();
        assert_eq!(parsed, vec![r]);

        // Values whose shortest decimal form is misread by a fast float parser.
        let mut r = SummaryRecord::from_summary(&summary(4, -0.56, 0.2, 0.0, 53.0));
        r.ls_pct = 12.654380436225463;
        r.credible_level = 1.0 - 0.05 / 6.0;
        let parsed = parse_summaries(&write_summaries(&[r.clone()])).unwrap();
        assert_eq!(parsed[0].ls_pct.to_bits(), r.ls_pct.to_bits());
        assert_eq!(
            parsed[0].credible_level.to_bits(),
            r.credible_level.to_bits()
        );
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_summaries("{").is_err());
        assert!(parse_summaries(r#"[{"id":1}]"#).is_err());
        let r = SummaryRecord::from_summary(&summary(3, -0.1, 0.2, 0.0, 21.5));
        let dup = write_summaries(&[r.clone(), r.clone()]);
        assert!(matches!(
            parse_summaries(&dup),
            Err(ReportError::DuplicateId(3))
        ));
        let bad = SummaryRecord { ci_lo: 1.0, ..r };
        assert!(matches!(
            parse_summaries(&write_summaries(&[bad])),
            Err(ReportError::InvalidRecord { id: 3, .. })
        ));
        assert_eq!(parse_summaries("[]").unwrap(), vec![]);
    }

    #[test]
    fn classify_sets_only_decisions() {
        let records = vec![
            SummaryRecord::from_summary(&summary(1, -0.05, 0.05, 0.0, 8.0)),
            SummaryRecord::from_summary(&summary(2, 0.2, 0.5, 20.0, 50.0)),
        ];
        let out = classify(&records, Some(0.30), Some(0.10)).unwrap();
        assert_eq!(out[0].negligible, Some(true));
        assert_eq!(out[0].meaningful, Some(false));
        assert_eq!(out[1].negligible, Some(false));
        assert_eq!(out[1].meaningful, Some(true));
        assert_eq!(out[0].ms_pct, records[0].ms_pct);
        let out = classify(&records, None, None).unwrap();
        assert_eq!(out, records);
        assert!(classify(&records, Some(0.0), None).is_err());
    }

    #[test]
    fn thresholds_body() {
        let t: Thresholds = serde_json::from_str(r#"{"negligible_threshold":0.3}"#).unwrap();
        assert!(t.validate().is_ok());
        assert_eq!(t.meaningful_threshold, None);
        let t = Thresholds {
            negligible_threshold: 0.0,
            meaningful_threshold: None,
        };
        assert!(t.validate().is_err());
        let t = Thresholds {
            negligible_threshold: 0.3,
            meaningful_threshold: Some(-1.0),
        };
        assert!(t.validate().is_err());
        assert!(serde_json::from_str::<Thresholds>("{}").is_err());
    }
}
