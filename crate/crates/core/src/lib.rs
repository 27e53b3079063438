//! Contra-analysis of negligible effect size.
//!
//! From per-study two-group summary statistics this crate draws posterior
//! samples of the relative difference in means `(μY − μX) / μX`, reduces them
//! to credible intervals and the Ls%/Ms% scores, tests them against
//! negligible/meaningful thresholds, and renders contra plots.
//!
//! ```no_run
//! use contra_core::{analysis, fixtures, ingest};
//!
//! let table = ingest::load_study_table(fixtures::PLAQUE_CSV).unwrap();
//! let results = analysis::analyze(&table.studies, &Default::default()).unwrap();
//! for r in &results {
//!     let d = r.summary.decide(0.35, None).unwrap();
//!     println!("{} Ms% = {:.1} negligible = {}", r.study.id, r.summary.ms_pct, d.is_negligible);
//! }
//! ```

// `!(x > 0.0)` is used on purpose: it rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod contraplot;
pub mod effectsize;
pub mod fixtures;
pub mod ingest;
pub mod posterior;
pub mod report;

pub use analysis::{analyze, AnalysisOptions, GatePolicy, StudyResult};
pub use contraplot::{
    axis_transform, render_contra_plot, sort_studies, ContraPlotSpec, MetadataColumn,
};
pub use effectsize::{EffectSizeSummary, ThresholdDecision};
pub use ingest::{parse_study_table, validate_study, EffectSign, StudySummary};
pub use posterior::{draw_posterior, PosteriorDraws};
pub use report::{SortMode, SummaryRecord, Thresholds};

#[cfg(test)]
pub(crate) mod testutil {
    use crate::effectsize::EffectSizeSummary;
    use crate::ingest::{EffectSign, StudySummary};

    pub fn study(
        mean_x: f64,
        sd_x: f64,
        n_x: u32,
        mean_y: f64,
        sd_y: f64,
        n_y: u32,
    ) -> StudySummary {
        StudySummary {
            id: 1,
            study_label: "t".into(),
            year: 2000,
            group_x_label: "x".into(),
            mean_x,
            sd_x,
            n_x,
            group_y_label: "y".into(),
            mean_y,
            sd_y,
            n_y,
            units: "u".into(),
            alpha_dm: 0.05,
            species: "ms".into(),
            pmid: "0".into(),
            loc: "T1".into(),
            reported_sign: EffectSign::Null,
        }
    }

    pub fn summary(id: u32, lo: f64, hi: f64, ls: f64, ms: f64) -> EffectSizeSummary {
        EffectSizeSummary {
            study_id: id,
            point_estimate: (lo + hi) / 2.0,
            ci_lo: lo,
            ci_hi: hi,
            ls_pct: ls,
            ms_pct: ms,
            credible_level: 0.95,
            k: 1000,
            seed: 42,
        }
    }
}
