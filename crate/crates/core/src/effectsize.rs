//! Credible intervals of the signed relative difference in means, the Ls%/Ms%
//! scores, and the threshold tests built on them.
//!
//! All quantiles use the nearest-rank rule: the `p` quantile of a sample of
//! size `k` is the order statistic at 1-based index `⌈k·p⌉`. No interpolation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{EffectSign, StudySummary};
use crate::posterior::{self, PosteriorDraws, PosteriorError};

/// Minimum number of draws that must fall in each tail of a signed interval.
pub const MIN_TAIL_DRAWS: f64 = 10.0;

#[derive(Debug, Error)]
pub enum EffectSizeError {
    #[error("alpha must lie in (0, 1), got {0}")]
    AlphaOutOfRange(f64),
    #[error("{k} draws leave fewer than {MIN_TAIL_DRAWS} in each tail at alpha = {alpha}")]
    TooFewTailDraws { k: usize, alpha: f64 },
    #[error("no draws")]
    Empty,
    #[error("threshold must be positive, got {0}")]
    NonPositiveThreshold(f64),
    #[error(transparent)]
    Posterior(#[from] PosteriorError),
}

/// 1-based nearest-rank index `⌈k·p⌉`, clamped to `[1, k]`.
///
/// `k·p` is computed in floating point, so products that land a few ulps
/// above an integer (e.g. `6 · (1 - 1/3)`) are pulled back onto it.
pub fn nearest_rank_index(k: usize, p: f64) -> usize {
    let x = k as f64 * p;
    let rank = (x - x.abs() * 1e-12).ceil();
    (rank.max(1.0) as usize).min(k)
}

/// Nearest-rank quantile of an ascending sample.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    sorted[nearest_rank_index(sorted.len(), p) - 1]
}

fn sorted_copy(draws: &[f64]) -> Vec<f64> {
    let mut v = draws.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v
}

fn sorted_abs(draws: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = draws.iter().map(|r| r.abs()).collect();
    v.sort_unstable_by(f64::total_cmp);
    v
}

fn check_alpha(alpha: f64) -> Result<(), EffectSizeError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(EffectSizeError::AlphaOutOfRange(alpha))
    }
}

fn check_tails(k: usize, alpha: f64) -> Result<(), EffectSizeError> {
    let tail = (alpha / 2.0).min(1.0 - alpha / 2.0);
    if k as f64 * tail >= MIN_TAIL_DRAWS {
        Ok(())
    } else {
        Err(EffectSizeError::TooFewTailDraws { k, alpha })
    }
}

/// Equal-tailed nearest-rank interval over an ascending sample, no tail-mass check.
pub fn signed_interval_sorted(sorted: &[f64], alpha: f64) -> (f64, f64) {
    (
        nearest_rank(sorted, alpha / 2.0),
        nearest_rank(sorted, 1.0 - alpha / 2.0),
    )
}

/// Equal-tailed nearest-rank interval of arbitrary draws, no tail-mass check.
pub fn signed_interval(draws: &[f64], alpha: f64) -> Result<(f64, f64), EffectSizeError> {
    check_alpha(alpha)?;
    if draws.is_empty() {
        return Err(EffectSizeError::Empty);
    }
    Ok(signed_interval_sorted(&sorted_copy(draws), alpha))
}

/// Equal-tailed `1 - alpha` credible interval of the signed relative difference.
pub fn credible_interval_signed(
    d: &PosteriorDraws,
    alpha: f64,
) -> Result<(f64, f64), EffectSizeError> {
    check_alpha(alpha)?;
    check_tails(d.r_dm_draws.len(), alpha)?;
    signed_interval(&d.r_dm_draws, alpha)
}

/// Ms%: 100 × the smallest `c ≥ 0` whose zero-centered interval `(-c, c]` holds
/// at least `1 - alpha` of the draws, i.e. the nearest-rank `1 - alpha`
/// quantile of `|r|`.
pub fn most_percent_of(draws: &[f64], alpha: f64) -> Result<f64, EffectSizeError> {
    check_alpha(alpha)?;
    if draws.is_empty() {
        return Err(EffectSizeError::Empty);
    }
    Ok(100.0 * nearest_rank(&sorted_abs(draws), 1.0 - alpha))
}

pub fn most_percent(d: &PosteriorDraws, alpha: f64) -> Result<f64, EffectSizeError> {
    most_percent_of(&d.r_dm_draws, alpha)
}

/// Ls% of a signed interval: 0 when it straddles zero, else 100 × the bound nearer zero.
pub fn least_percent_of_interval(lo: f64, hi: f64) -> f64 {
    if lo <= 0.0 && 0.0 <= hi {
        0.0
    } else {
        100.0 * lo.abs().min(hi.abs())
    }
}

pub fn least_percent(d: &PosteriorDraws, alpha: f64) -> Result<f64, EffectSizeError> {
    let (lo, hi) = credible_interval_signed(d, alpha)?;
    Ok(least_percent_of_interval(lo, hi))
}

/// Direction read off a signed interval.
pub fn interval_sign(lo: f64, hi: f64) -> EffectSign {
    if hi < 0.0 {
        EffectSign::Negative
    } else if lo > 0.0 {
        EffectSign::Positive
    } else {
        EffectSign::Null
    }
}

/// Negligible-effect test: rejects `|r| ≥ delta` when `ms_pct / 100 < delta`.
pub fn test_negligible(ms_pct: f64, delta: f64) -> Result<bool, EffectSizeError> {
    if !(delta > 0.0) {
        return Err(EffectSizeError::NonPositiveThreshold(delta));
    }
    Ok(ms_pct / 100.0 < delta)
}

/// Meaningful-effect test: `ls_pct / 100 > delta_m`.
pub fn test_meaningful(ls_pct: f64, delta_m: f64) -> Result<bool, EffectSizeError> {
    if !(delta_m > 0.0) {
        return Err(EffectSizeError::NonPositiveThreshold(delta_m));
    }
    Ok(ls_pct / 100.0 > delta_m)
}

/// Per-study effect-size scores. Everything a threshold test needs, so tests
/// never have to resample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectSizeSummary {
    pub study_id: u32,
    pub point_estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub ls_pct: f64,
    pub ms_pct: f64,
    pub credible_level: f64,
    pub k: usize,
    pub seed: u64,
}

impl EffectSizeSummary {
    pub fn interval_sign(&self) -> EffectSign {
        interval_sign(self.ci_lo, self.ci_hi)
    }

    pub fn decide(
        &self,
        negligible_threshold: f64,
        meaningful_threshold: Option<f64>,
    ) -> Result<ThresholdDecision, EffectSizeError> {
        let is_negligible = test_negligible(self.ms_pct, negligible_threshold)?;
        let is_meaningful = meaningful_threshold
            .map(|t| test_meaningful(self.ls_pct, t))
            .transpose()?;
        Ok(ThresholdDecision {
            study_id: self.study_id,
            negligible_threshold,
            is_negligible,
            meaningful_threshold,
            is_meaningful,
        })
    }
}

/// Outcome of the threshold tests for one study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdDecision {
    pub study_id: u32,
    pub negligible_threshold: f64,
    pub is_negligible: bool,
    pub meaningful_threshold: Option<f64>,
    pub is_meaningful: Option<bool>,
}

/// Scores an existing set of draws at the study's own `alpha_dm`.
pub fn summarize_draws(
    s: &StudySummary,
    d: &PosteriorDraws,
) -> Result<EffectSizeSummary, EffectSizeError> {
    let alpha = s.alpha_dm;
    check_alpha(alpha)?;
    check_tails(d.k, alpha)?;
    let signed = sorted_copy(&d.r_dm_draws);
    let (ci_lo, ci_hi) = signed_interval_sorted(&signed, alpha);
    drop(signed);
    let ms_pct = 100.0 * nearest_rank(&sorted_abs(&d.r_dm_draws), 1.0 - alpha);
    Ok(EffectSizeSummary {
        study_id: s.id,
        point_estimate: posterior::relative_difference_point(s)?,
        ci_lo,
        ci_hi,
        ls_pct: least_percent_of_interval(ci_lo, ci_hi),
        ms_pct,
        credible_level: 1.0 - alpha,
        k: d.k,
        seed: d.seed,
    })
}

/// Draws once (gated) and scores the study.
pub fn summarize_study(
    s: &StudySummary,
    k: usize,
    seed: u64,
) -> Result<EffectSizeSummary, EffectSizeError> {
    let d = posterior::draw_posterior(s, k, seed)?;
    summarize_draws(s, &d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::study;

    fn draws_of(r: &[f64]) -> PosteriorDraws {
        PosteriorDraws {
            study_id: 1,
            k: r.len(),
            seed: 0,
            mu_x_draws: vec![1.0; r.len()],
            mu_y_draws: r.iter().map(|v| 1.0 + v).collect(),
            r_dm_draws: r.to_vec(),
            n_nonpositive_mu_x: 0,
        }
    }

    #[test]
    fn nearest_rank_five_draws() {
        let (lo, hi) = signed_interval(&[2.0, -1.0, 0.0, 1.0, -2.0], 0.4).unwrap();
        assert_eq!((lo, hi), (-2.0, 1.0));
        // Five draws cannot support a 10-draw tail.
        assert!(matches!(
            credible_interval_signed(&draws_of(&[-2.0, -1.0, 0.0, 1.0, 2.0]), 0.4),
            Err(EffectSizeError::TooFewTailDraws { .. })
        ));
    }

    #[test]
    fn rank_index_absorbs_rounding() {
        assert_eq!(nearest_rank_index(6, 1.0 - 1.0 / 3.0), 4);
        assert_eq!(nearest_rank_index(5, 0.2), 1);
        assert_eq!(nearest_rank_index(5, 0.8), 4);
        assert_eq!(nearest_rank_index(5, 0.0), 1);
        assert_eq!(nearest_rank_index(5, 1.0), 5);
        assert_eq!(nearest_rank_index(100, 0.975), 98);
    }

    #[test]
    fn ms_six_draws() {
        let r = [-0.10, -0.05, 0.00, 0.05, 0.10, 0.20];
        let ms = most_percent_of(&r, 1.0 / 3.0).unwrap();
        assert!((ms - 10.0).abs() < 1e-12);
    }

    #[test]
    fn ms_point_mass_at_zero() {
        for alpha in [0.01, 0.05, 0.5, 0.9] {
            assert_eq!(most_percent_of(&[0.0; 50], alpha).unwrap(), 0.0);
        }
    }

    #[test]
    fn collapsed_posterior_scores() {
        let s = study(100.0, 1e-9, 1000, 110.0, 1e-9, 1000);
        let d = posterior::draw_posterior(&s, 20_000, 5).unwrap();
        let (lo, hi) = credible_interval_signed(&d, 0.05).unwrap();
        assert!(lo >= 0.0999 && hi <= 0.1001);
        let ms = most_percent(&d, 0.05).unwrap();
        assert!((9.99..=10.01).contains(&ms));
    }

    #[test]
    fn symmetric_null_straddles_zero() {
        let s = study(50.0, 5.0, 20, 50.0, 5.0, 20);
        let d = posterior::draw_posterior(&s, 200_000, 3).unwrap();
        let (lo, hi) = credible_interval_signed(&d, 0.05).unwrap();
        assert!(lo < 0.0 && 0.0 < hi);
        assert_eq!(least_percent(&d, 0.05).unwrap(), 0.0);
        let summary = summarize_draws(&s, &d).unwrap();
        assert!(summary.ms_pct > 0.0);
    }

    #[test]
    fn least_percent_definition() {
        assert_eq!(least_percent_of_interval(-0.08, 0.03), 0.0);
        assert!((least_percent_of_interval(0.12, 0.40) - 12.0).abs() < 1e-12);
        assert!((least_percent_of_interval(-0.55, -0.31) - 31.0).abs() < 1e-12);
    }

    #[test]
    fn threshold_tests() {
        assert!(test_negligible(10.0, 0.30).unwrap());
        assert!(!test_negligible(30.0, 0.30).unwrap());
        assert!(test_negligible(10.0, 0.0).is_err());
        assert!(test_negligible(10.0, -0.1).is_err());

        assert!(!test_meaningful(0.0, 0.01).unwrap());
        assert!(test_meaningful(31.0, 0.10).unwrap());
        assert!(!test_meaningful(12.0, 0.12).unwrap());
        assert!(test_meaningful(12.0, 0.0).is_err());
    }

    #[test]
    fn bad_alpha() {
        assert!(most_percent_of(&[1.0], 0.0).is_err());
        assert!(most_percent_of(&[1.0], 1.0).is_err());
        assert!(most_percent_of(&[], 0.5).is_err());
    }

    #[test]
    fn summary_decisions() {
        let s = study(10.0, 1.0, 30, 10.2, 1.0, 30);
        let summary = summarize_study(&s, 20_000, 1).unwrap();
        let d = summary.decide(0.30, Some(0.05)).unwrap();
        assert!(d.is_negligible);
        assert_eq!(d.is_meaningful, Some(false));
        let d = summary.decide(0.30, None).unwrap();
        assert_eq!(d.is_meaningful, None);
        assert!(summary.decide(0.0, None).is_err());
    }
}
