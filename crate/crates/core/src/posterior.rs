//! Monte Carlo draws from the closed-form posterior of the two-group normal
//! model with unequal, unknown variances under the `1/σ²` reference prior.
//!
//! Per group, with `a = (n-1)/2` and `b = (n-1)s²/2`:
//!
//! ```text
//! σ² | data      ~ InvGamma(a, b)
//! μ  | σ², data  ~ Normal(mean, σ²/n)
//! ```
//!
//! Every draw is built from standardized variates (a unit-rate gamma and a
//! standard normal) and then rescaled by the group's summary statistics, so
//! rescaling a study's units by a power of two leaves the relative-difference
//! draws bit-identical.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use thiserror::Error;

use crate::ingest::{validate_study, StudySummary, ValidationReport};

pub const DEFAULT_SAMPLES: usize = 500_000;

/// Largest tolerated fraction of draws with a nonpositive control mean.
pub const MAX_NONPOSITIVE_FRACTION: f64 = 1e-4;

static SAMPLING_RUNS: AtomicU64 = AtomicU64::new(0);

/// Number of posterior sampling runs performed by this process so far.
pub fn sampling_runs() -> u64 {
    SAMPLING_RUNS.load(Ordering::SeqCst)
}

#[derive(Debug, Error)]
pub enum PosteriorError {
    #[error("study {study_id} fails validation: {report}")]
    InvalidStudy {
        study_id: u32,
        report: ValidationReport,
    },
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error(
        "study {study_id}: control mean not bounded away from zero \
         ({nonpositive} of {k} draws have mu_x <= 0)"
    )]
    ControlMeanNearZero {
        study_id: u32,
        nonpositive: usize,
        k: usize,
    },
    #[error("study {study_id}: control mean must be positive for a relative difference")]
    NonPositiveControlMean { study_id: u32 },
}

/// Seeded posterior sample for one study.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub study_id: u32,
    pub k: usize,
    pub seed: u64,
    pub mu_x_draws: Vec<f64>,
    pub mu_y_draws: Vec<f64>,
    /// `(mu_y - mu_x) / mu_x` per draw.
    pub r_dm_draws: Vec<f64>,
    pub n_nonpositive_mu_x: usize,
}

impl PosteriorDraws {
    pub fn nonpositive_fraction(&self) -> f64 {
        self.n_nonpositive_mu_x as f64 / self.k as f64
    }

    /// True when too many control-mean draws sit at or below zero for a relative effect.
    pub fn is_gated(&self) -> bool {
        self.nonpositive_fraction() > MAX_NONPOSITIVE_FRACTION
    }

    pub fn check_gate(&self) -> Result<(), PosteriorError> {
        if self.is_gated() {
            Err(PosteriorError::ControlMeanNearZero {
                study_id: self.study_id,
                nonpositive: self.n_nonpositive_mu_x,
                k: self.k,
            })
        } else {
            Ok(())
        }
    }
}

/// Posterior of one group's mean and variance.
#[derive(Debug, Clone)]
pub struct GroupPosterior {
    mean: f64,
    sd: f64,
    /// `(n-1)/2`
    shape: f64,
    n: f64,
    precision: Gamma<f64>,
}

impl GroupPosterior {
    /// Requires `n >= 2` and `sd > 0`; callers validate first.
    pub fn new(mean: f64, sd: f64, n: u32) -> Self {
        let shape = (f64::from(n) - 1.0) / 2.0;
        GroupPosterior {
            mean,
            sd,
            shape,
            n: f64::from(n),
            precision: Gamma::new(shape, 1.0).expect("shape (n-1)/2 is positive for n >= 2"),
        }
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    /// Scale of the inverse-gamma variance posterior, `(n-1)s²/2`.
    pub fn rate(&self) -> f64 {
        self.shape * self.sd * self.sd
    }

    /// Returns `(σ², μ)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let g: f64 = self.precision.sample(rng);
        let z: f64 = StandardNormal.sample(rng);
        // σ²/n = s² · shape / (g · n); keep s outside the sqrt so units rescale exactly.
        let spread = (self.shape / (g * self.n)).sqrt();
        let mu = self.mean + self.sd * spread * z;
        (self.rate() / g, mu)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of the stream used for `study_id`: independent of table order and of other studies.
pub fn study_stream_seed(seed: u64, study_id: u32) -> u64 {
    seed ^ splitmix64(u64::from(study_id))
}

pub fn study_rng(seed: u64, study_id: u32) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(study_stream_seed(seed, study_id))
}

/// Draws `k` posterior samples without applying the near-zero control-mean gate.
///
/// Draws with `mu_x <= 0` stay in the arrays and are counted.
pub fn sample_posterior(
    s: &StudySummary,
    k: usize,
    seed: u64,
) -> Result<PosteriorDraws, PosteriorError> {
    let report = validate_study(s);
    if !report.is_ok() {
        return Err(PosteriorError::InvalidStudy {
            study_id: s.id,
            report,
        });
    }
    if k == 0 {
        return Err(PosteriorError::NoSamples);
    }
    SAMPLING_RUNS.fetch_add(1, Ordering::SeqCst);

    let x = GroupPosterior::new(s.mean_x, s.sd_x, s.n_x);
    let y = GroupPosterior::new(s.mean_y, s.sd_y, s.n_y);
    let mut rng = study_rng(seed, s.id);

    let mut mu_x_draws = Vec::with_capacity(k);
    let mut mu_y_draws = Vec::with_capacity(k);
    let mut r_dm_draws = Vec::with_capacity(k);
    let mut n_nonpositive_mu_x = 0;
    for _ in 0..k {
        let (_, mu_x) = x.sample(&mut rng);
        let (_, mu_y) = y.sample(&mut rng);
        if mu_x <= 0.0 {
            n_nonpositive_mu_x += 1;
        }
        mu_x_draws.push(mu_x);
        mu_y_draws.push(mu_y);
        r_dm_draws.push((mu_y - mu_x) / mu_x);
    }

    Ok(PosteriorDraws {
        study_id: s.id,
        k,
        seed,
        mu_x_draws,
        mu_y_draws,
        r_dm_draws,
        n_nonpositive_mu_x,
    })
}

/// Draws `k` posterior samples and rejects studies whose control mean is not
/// bounded away from zero.
pub fn draw_posterior(
    s: &StudySummary,
    k: usize,
    seed: u64,
) -> Result<PosteriorDraws, PosteriorError> {
    let draws = sample_posterior(s, k, seed)?;
    draws.check_gate()?;
    Ok(draws)
}

/// Sample-based signed relative difference `(mean_y - mean_x) / mean_x`.
pub fn relative_difference_point(s: &StudySummary) -> Result<f64, PosteriorError> {
    if !(s.mean_x > 0.0) {
        return Err(PosteriorError::NonPositiveControlMean { study_id: s.id });
    }
    Ok((s.mean_y - s.mean_x) / s.mean_x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::study;

    #[test]
    fn point_estimates() {
        let s = study(3.45, 0.24, 6, 3.26, 0.22, 6);
        assert!(
            (relative_difference_point(&s).unwrap() - (-0.055_072_463_768_115_94)).abs() < 1e-12
        );
        let s = study(1251.0, 161.0, 10, 1179.0, 143.0, 5);
        assert!(
            (relative_difference_point(&s).unwrap() - (-0.057_553_956_834_532_37)).abs() < 1e-12
        );
        let s = study(5.0, 1.0, 6, 5.0, 1.0, 6);
        assert_eq!(relative_difference_point(&s).unwrap(), 0.0);
        let s = study(0.0, 1.0, 6, 5.0, 1.0, 6);
        assert!(relative_difference_point(&s).is_err());
    }

    #[test]
    fn billion_mean_is_centered() {
        let s = study(3.45, 0.24, 6, 3.26, 0.22, 6);
        let d = draw_posterior(&s, 200_000, 11).unwrap();
        let mean = d.mu_x_draws.iter().sum::<f64>() / d.k as f64;
        assert!((3.10..=3.80).contains(&mean), "{mean}");
        assert!((mean - 3.45).abs() < 0.01);
    }

    #[test]
    fn collapsed_posterior() {
        let s = study(100.0, 1e-9, 1000, 110.0, 1e-9, 1000);
        let d = draw_posterior(&s, 10_000, 5).unwrap();
        assert!(d.r_dm_draws.iter().all(|r| (0.0999..=0.1001).contains(r)));
    }

    #[test]
    fn symmetric_null_centered() {
        let s = study(50.0, 5.0, 20, 50.0, 5.0, 20);
        let d = draw_posterior(&s, 200_000, 3).unwrap();
        let mean = d.r_dm_draws.iter().sum::<f64>() / d.k as f64;
        assert!(mean.abs() < 0.01, "{mean}");
    }

    #[test]
    fn arrays_consistent_and_recomputable() {
        let s = study(10.0, 2.0, 8, 12.0, 3.0, 9);
        let d = draw_posterior(&s, 1000, 9).unwrap();
        assert_eq!(d.mu_x_draws.len(), 1000);
        assert_eq!(d.mu_y_draws.len(), 1000);
        assert_eq!(d.r_dm_draws.len(), 1000);
        for i in 0..d.k {
            let r = (d.mu_y_draws[i] - d.mu_x_draws[i]) / d.mu_x_draws[i];
            assert_eq!(r.to_bits(), d.r_dm_draws[i].to_bits());
        }
    }

    #[test]
    fn stream_independent_of_other_studies() {
        let mut a = study(10.0, 2.0, 8, 12.0, 3.0, 9);
        a.id = 4;
        let d1 = sample_posterior(&a, 100, 42).unwrap();
        let mut b = a.clone();
        b.id = 5;
        let d2 = sample_posterior(&b, 100, 42).unwrap();
        assert_ne!(d1.r_dm_draws, d2.r_dm_draws);
        assert_eq!(d1, sample_posterior(&a, 100, 42).unwrap());
    }

    #[test]
    fn gate_rejects_near_zero_control() {
        let mut s = study(1.0, 3.0, 3, 2.0, 1.0, 3);
        s.id = 17;
        match draw_posterior(&s, 10_000, 1) {
            Err(PosteriorError::ControlMeanNearZero { study_id, .. }) => assert_eq!(study_id, 17),
            other => panic!("unexpected {other:?}"),
        }
        let d = sample_posterior(&s, 10_000, 1).unwrap();
        assert!(d.is_gated());
        assert_eq!(d.r_dm_draws.len(), 10_000);
    }

    #[test]
    fn invalid_inputs() {
        let s = study(1.0, 1.0, 1, 2.0, 1.0, 3);
        assert!(matches!(
            draw_posterior(&s, 10, 1),
            Err(PosteriorError::InvalidStudy { .. })
        ));
        let s = study(1.0, 1.0, 4, 2.0, 1.0, 3);
        assert!(matches!(
            draw_posterior(&s, 0, 1),
            Err(PosteriorError::NoSamples)
        ));
    }
}
