//! Wilcoxon signed-rank testing, bootstrap ranking stability and per-case
//! rank frequencies.
//!
//! The signed-rank test discards zero differences, assigns mid-ranks to
//! ties and uses the exact null distribution up to `n = 25` (a convolution
//! over doubled ranks, equivalent to enumerating all 2^n sign assignments).
//! Larger samples use the normal approximation with tie and continuity
//! corrections.
//!
//! Bootstrap replicates draw their case resample from a ChaCha8 generator
//! seeded with the run seed and the replicate index as the stream, so
//! results are reproducible across platforms and independent of scheduling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::ranking::{
    competition_ranks, imputed_rows, significance_aggregates, robustness_aggregates,
    MetricTable, RankingConfig,
};

/// Largest sample size evaluated against the exact null distribution.
const EXACT_LIMIT: usize = 25;

/// Outcome of a one-sided signed-rank test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    /// Sum of the ranks of positive differences (W+).
    pub statistic: f64,
    pub p_value: f64,
    /// Pairs remaining after zero differences are discarded.
    pub n_effective: usize,
    /// `p_value < alpha` for the alternative "x exceeds y".
    pub significant: bool,
}

/// One-sided Wilcoxon signed-rank test of paired samples, testing whether
/// `x` tends to exceed `y`.
///
/// All-zero differences yield `p = 1.0` and no significance.
pub fn wilcoxon_one_sided(x: &[f64], y: &[f64], alpha: f64) -> Result<TestResult> {
    if x.len() != y.len() {
        return Err(Error::Input(format!(
            "paired samples differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::Input("paired samples must be non-empty".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!(
            "alpha must lie strictly between 0 and 1, got {alpha}"
        )));
    }

    let diffs: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(TestResult {
            statistic: 0.0,
            p_value: 1.0,
            n_effective: 0,
            significant: false,
        });
    }

    // mid-ranks over |d|, kept as doubled integers so ties stay exact
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diffs[a].abs().total_cmp(&diffs[b].abs()));
    let mut doubled_ranks = vec![0u64; n];
    let mut tie_sizes = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && diffs[order[j + 1]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        // positions i..=j share the doubled mid-rank (i+1) + (j+1)
        let doubled = (i + j + 2) as u64;
        for &idx in &order[i..=j] {
            doubled_ranks[idx] = doubled;
        }
        tie_sizes.push(j - i + 1);
        i = j + 1;
    }

    let w2: u64 = diffs
        .iter()
        .zip(&doubled_ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, &r)| r)
        .sum();
    let statistic = w2 as f64 / 2.0;

    let p_value = if n <= EXACT_LIMIT {
        exact_p_value(&doubled_ranks, w2)
    } else {
        normal_p_value(w2, n, &tie_sizes)
    };
    Ok(TestResult {
        statistic,
        p_value,
        n_effective: n,
        significant: p_value < alpha,
    })
}

/// P(W+ >= w2/2) under the exact null: counts sign assignments by their
/// doubled positive-rank sum. Counts are exact in u64 and the final
/// division by 2^n is exact in f64.
fn exact_p_value(doubled_ranks: &[u64], w2: u64) -> f64 {
    let n = doubled_ranks.len();
    let max_sum: u64 = doubled_ranks.iter().sum();
    let mut counts = vec![0u64; max_sum as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in doubled_ranks {
        let r = r as usize;
        let prev = reach;
        reach += r;
        for s in (0..=prev).rev() {
            if counts[s] != 0 {
                counts[s + r] += counts[s];
            }
        }
    }
    let at_least: u64 = counts[w2 as usize..].iter().sum();
    at_least as f64 * 0.5f64.powi(n as i32)
}

/// Upper-tail normal approximation with tie and continuity corrections.
fn normal_p_value(w2: u64, n: usize, tie_sizes: &[usize]) -> f64 {
    let w = w2 as f64 / 2.0;
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = tie_sizes
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return if w > mean { 0.0 } else { 1.0 };
    }
    let z = (w - mean - 0.5) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    1.0 - normal.cdf(z)
}

/// Linear interpolation between order statistics at `h = (n - 1) p + 1`.
/// `sorted` must be ascending and non-empty.
pub fn interpolated_quantile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&p));
    let n = sorted.len();
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

/// Which ranking scheme each bootstrap replicate recomputes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Ranker {
    Significance,
    Robustness,
}

/// Rank frequencies and rank intervals across bootstrap replicates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapSummary {
    /// Replicate count.
    pub b: usize,
    pub seed: u64,
    /// Algorithm order for the rows below.
    pub algorithms: Vec<String>,
    /// `rank_frequency[a][r]` counts replicates where algorithm `a`
    /// achieved rank `r + 1`. Each row sums to `b`.
    pub rank_frequency: Vec<Vec<usize>>,
    pub median_rank: Vec<f64>,
    /// 2.5 and 97.5 percentile ranks per algorithm.
    pub interval_95: Vec<(f64, f64)>,
}

/// Recomputes the chosen ranking on `b` case resamples (with replacement,
/// original size) and summarizes the rank distribution per algorithm.
///
/// Identical `(table, ranker, b, seed)` inputs produce identical summaries;
/// replicates run in parallel without affecting the result.
pub fn bootstrap_rankings(
    table: &MetricTable,
    ranker: Ranker,
    b: usize,
    seed: u64,
    config: &RankingConfig,
) -> Result<BootstrapSummary> {
    if b == 0 {
        return Err(Error::Config("bootstrap needs at least one replicate".into()));
    }
    config.validate()?;
    let n_algos = table.algorithms().len();
    let n_cases = table.cases().len();
    if n_algos == 0 || n_cases == 0 {
        return Err(Error::Config("bootstrap needs a non-empty table".into()));
    }
    if ranker == Ranker::Significance && n_algos < 2 {
        return Err(Error::Config(
            "significance ranking needs at least two algorithms".into(),
        ));
    }
    let rows = imputed_rows(table);

    let per_replicate: Vec<Vec<usize>> = (0..b)
        .into_par_iter()
        .map(|replicate| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(replicate as u64);
            let sample: Vec<usize> = (0..n_cases).map(|_| rng.gen_range(0..n_cases)).collect();
            let resampled: Vec<Vec<f64>> = rows
                .iter()
                .map(|row| sample.iter().map(|&c| row[c]).collect())
                .collect();
            let aggregates = match ranker {
                Ranker::Significance => significance_aggregates(&resampled, config.alpha),
                Ranker::Robustness => robustness_aggregates(&resampled, config.percentile),
            };
            competition_ranks(&aggregates)
        })
        .collect();

    let mut rank_frequency = vec![vec![0usize; n_algos]; n_algos];
    for ranks in &per_replicate {
        for (a, &r) in ranks.iter().enumerate() {
            rank_frequency[a][r - 1] += 1;
        }
    }
    let mut median_rank = Vec::with_capacity(n_algos);
    let mut interval_95 = Vec::with_capacity(n_algos);
    for a in 0..n_algos {
        let mut ranks: Vec<f64> = per_replicate.iter().map(|r| r[a] as f64).collect();
        ranks.sort_by(f64::total_cmp);
        median_rank.push(interpolated_quantile(&ranks, 0.5));
        interval_95.push((
            interpolated_quantile(&ranks, 0.025),
            interpolated_quantile(&ranks, 0.975),
        ));
    }

    Ok(BootstrapSummary {
        b,
        seed,
        algorithms: table.algorithms().to_vec(),
        rank_frequency,
        median_rank,
        interval_95,
    })
}

/// For every case, competition-ranks all algorithms on that case's value
/// and accumulates how often each algorithm achieved each rank.
/// Missing cells count as 0.0, the worst value.
pub fn per_case_rank_frequencies(table: &MetricTable) -> Vec<Vec<usize>> {
    let rows = imputed_rows(table);
    let n_algos = table.algorithms().len();
    let mut counts = vec![vec![0usize; n_algos]; n_algos];
    for case in 0..table.cases().len() {
        let values: Vec<f64> = rows.iter().map(|r| r[case]).collect();
        let ranks = competition_ranks(&values);
        for (a, &r) in ranks.iter().enumerate() {
            counts[a][r - 1] += 1;
        }
    }
    counts
}
