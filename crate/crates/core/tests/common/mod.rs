#![allow(dead_code)]

use std::path::PathBuf;

use contra_core::contraplot::{sort_studies, ContraPlotSpec};
use contra_core::effectsize::{least_percent_of_interval, EffectSizeSummary};
use contra_core::fixtures::{PLAQUE_CSV, TPC_CSV};
use contra_core::ingest::{load_study_table, EffectSign, StudySummary};

pub fn tpc() -> Vec<StudySummary> {
    load_study_table(TPC_CSV).unwrap().studies
}

pub fn plaque() -> Vec<StudySummary> {
    load_study_table(PLAQUE_CSV).unwrap().studies
}

/// Solves `F(c) - F(-c) >= 1 - alpha` for the smallest `c` by bisection over the
/// empirical CDF of the signed draws. Independent of the quantile-of-|r| route.
pub fn zero_centered_bound_by_bisection(draws: &[f64], alpha: f64) -> f64 {
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = sorted.len() as f64;
    let cdf = |x: f64| sorted.partition_point(|r| *r <= x) as f64 / k;
    let target = 1.0 - alpha;
    let covered = |c: f64| cdf(c) - cdf(-c) >= target - 1e-12;

    let mut lo = 0.0;
    let mut hi = draws.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    if covered(lo) {
        return 0.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if covered(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// True when `value` lies within one order statistic of `reference` in the sorted `|draws|`.
///
/// Percent values pass through `× 100 / 100`, so a relative slack of 1e-12 is allowed.
pub fn within_one_order_statistic(draws: &[f64], reference: f64, value: f64) -> bool {
    let mut abs: Vec<f64> = draws.iter().map(|r| r.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let j = abs.partition_point(|a| *a < reference);
    let below = abs[j.saturating_sub(1).min(abs.len() - 1)];
    let above = abs[(j + 1).min(abs.len() - 1)];
    below * (1.0 - 1e-12) <= value && value <= above * (1.0 + 1e-12)
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let f = cdf(*x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

pub fn row(id: u32, label: &str, lo: f64, hi: f64, ms: f64) -> (StudySummary, EffectSizeSummary) {
    let s = StudySummary {
        id,
        study_label: label.into(),
        year: 2000 + id as i32,
        group_x_label: "Control".into(),
        mean_x: 100.0,
        sd_x: 10.0,
        n_x: 10,
        group_y_label: format!("Treatment {id}"),
        mean_y: 100.0 * (1.0 + (lo + hi) / 2.0),
        sd_y: 10.0,
        n_y: 10,
        units: "mg/dL".into(),
        alpha_dm: 0.05,
        species: "ms".into(),
        pmid: format!("{}", 1000 + id),
        loc: "T1".into(),
        reported_sign: EffectSign::Null,
    };
    let e = EffectSizeSummary {
        study_id: id,
        point_estimate: (lo + hi) / 2.0,
        ci_lo: lo,
        ci_hi: hi,
        ls_pct: least_percent_of_interval(lo, hi),
        ms_pct: ms,
        credible_level: 0.95,
        k: 1000,
        seed: 42,
    };
    (s, e)
}

pub fn synthetic_spec() -> ContraPlotSpec {
    let rows = vec![
        row(1, "Alpha", -0.08, 0.05, 7.5),
        row(2, "Beta & Co", -0.45, -0.20, 44.0),
        row(3, "Gamma", 0.15, 1.40, 140.0),
        row(4, "Delta", -0.30, 0.25, 29.0),
        row(5, "Epsilon", -1.60, 0.90, 150.0),
        row(6, "<Zeta>", -0.12, 0.18, 16.0),
    ];
    let mut spec = ContraPlotSpec::new(sort_studies(rows));
    spec.title = "Synthetic contra plot".into();
    spec.negligible_threshold = Some(0.30);
    spec.meaningful_threshold = Some(0.10);
    spec
}
