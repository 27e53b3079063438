//! End-to-end scoring of a study table: validate, sample each study on its own
//! stream, score, and keep results in table order.

use rayon::prelude::*;
use thiserror::Error;

use crate::effectsize::{summarize_draws, EffectSizeError, EffectSizeSummary};
use crate::ingest::{validate_study, StudySummary, ValidationReport};
use crate::posterior::{sample_posterior, PosteriorError, DEFAULT_SAMPLES};

pub const DEFAULT_SEED: u64 = 42;

/// What to do with a study whose control-mean draws reach zero too often.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GatePolicy {
    /// Fail the whole analysis on the first such study (in table order).
    Strict,
    /// Score it anyway and mark it in [`StudyResult::gated`].
    #[default]
    Flag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalysisOptions {
    pub k: usize,
    pub seed: u64,
    pub gate: GatePolicy,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            k: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            gate: GatePolicy::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{} invalid stud{}", .0.len(), if .0.len() == 1 { "y" } else { "ies" })]
    Invalid(Vec<(u32, ValidationReport)>),
    #[error(transparent)]
    Gate(PosteriorError),
    #[error(transparent)]
    EffectSize(#[from] EffectSizeError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub study: StudySummary,
    pub summary: EffectSizeSummary,
    /// Share of control-mean draws at or below zero.
    pub nonpositive_fraction: f64,
    /// The relative effect is unreliable for this study; see [`GatePolicy`].
    pub gated: bool,
}

/// Checks every study, returning all failures at once.
pub fn validate_all(studies: &[StudySummary]) -> Result<(), AnalysisError> {
    let invalid: Vec<(u32, ValidationReport)> = studies
        .iter()
        .map(|s| (s.id, validate_study(s)))
        .filter(|(_, r)| !r.is_ok())
        .collect();
    if invalid.is_empty() {
        Ok(())
    } else {
        Err(AnalysisError::Invalid(invalid))
    }
}

fn analyze_one(s: &StudySummary, opts: &AnalysisOptions) -> Result<StudyResult, AnalysisError> {
    let draws = sample_posterior(s, opts.k, opts.seed).map_err(EffectSizeError::from)?;
    if opts.gate == GatePolicy::Strict {
        draws.check_gate().map_err(AnalysisError::Gate)?;
    }
    let summary = summarize_draws(s, &draws)?;
    Ok(StudyResult {
        study: s.clone(),
        summary,
        nonpositive_fraction: draws.nonpositive_fraction(),
        gated: draws.is_gated(),
    })
}

/// Scores every study. Studies are sampled concurrently; the result is in
/// table order and does not depend on scheduling.
pub fn analyze(
    studies: &[StudySummary],
    opts: &AnalysisOptions,
) -> Result<Vec<StudyResult>, AnalysisError> {
    validate_all(studies)?;
    let results: Vec<Result<StudyResult, AnalysisError>> =
        studies.par_iter().map(|s| analyze_one(s, opts)).collect();
    let results: Vec<StudyResult> = results.into_iter().collect::<Result<_, _>>()?;
    for r in results.iter().filter(|r| r.gated) {
        log::warn!(
            "study {}: {:.4}% of control-mean draws are <= 0; relative effect size is unreliable",
            r.study.id,
            100.0 * r.nonpositive_fraction
        );
    }
    Ok(results)
}
