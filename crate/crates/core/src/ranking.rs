//! Accuracy (significance) and robustness (percentile) leaderboards with
//! competition tie semantics and worst-value imputation of missing cases.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::{interpolated_quantile, wilcoxon_one_sided};

/// Per-algorithm, per-case metric values. `None` marks a missing case.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTable {
    algorithms: Vec<String>,
    cases: Vec<String>,
    values: Vec<Option<f64>>,
}

impl MetricTable {
    /// Builds a table from row-major values (`algorithms x cases`).
    pub fn new(
        algorithms: Vec<String>,
        cases: Vec<String>,
        values: Vec<Option<f64>>,
    ) -> Result<Self> {
        if values.len() != algorithms.len() * cases.len() {
            return Err(Error::Input(format!(
                "table has {} cells, expected {}x{}",
                values.len(),
                algorithms.len(),
                cases.len()
            )));
        }
        for ids in [&algorithms, &cases] {
            let mut seen = ids.clone();
            seen.sort_unstable();
            if seen.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Input("duplicate algorithm or case id".into()));
            }
        }
        if values
            .iter()
            .flatten()
            .any(|v| !(0.0..=1.0).contains(v))
        {
            return Err(Error::Input("metric values must lie in [0, 1]".into()));
        }
        Ok(Self {
            algorithms,
            cases,
            values,
        })
    }

    pub fn algorithms(&self) -> &[String] {
        &self.algorithms
    }

    pub fn cases(&self) -> &[String] {
        &self.cases
    }

    /// Cell for (algorithm index, case index); `None` = missing.
    pub fn get(&self, algorithm: usize, case: usize) -> Option<f64> {
        self.values[algorithm * self.cases.len() + case]
    }

    /// One algorithm's cells across all cases.
    pub fn row(&self, algorithm: usize) -> &[Option<f64>] {
        let w = self.cases.len();
        &self.values[algorithm * w..(algorithm + 1) * w]
    }
}

/// One leaderboard line. Ranks follow competition ("1224") semantics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeaderboardEntry {
    pub team: String,
    pub aggregate: f64,
    pub rank: usize,
}

/// Significance level and robustness quantile for the ranking schemes.
/// Quantiles interpolate between order statistics (`h = (n - 1) p + 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankingConfig {
    pub alpha: f64,
    pub percentile: f64,
}

impl Default for RankingConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            percentile: 0.05,
        }
    }
}

impl RankingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!(
                "alpha must lie strictly between 0 and 1, got {}",
                self.alpha
            )));
        }
        if !(0.0..=1.0).contains(&self.percentile) {
            return Err(Error::Config(format!(
                "percentile must lie in [0, 1], got {}",
                self.percentile
            )));
        }
        Ok(())
    }
}

/// Replaces every missing cell by 0.0, the worst possible value.
/// Never fails and is idempotent.
pub fn impute_missing(table: &MetricTable) -> MetricTable {
    MetricTable {
        algorithms: table.algorithms.clone(),
        cases: table.cases.clone(),
        values: table.values.iter().map(|v| Some(v.unwrap_or(0.0))).collect(),
    }
}

/// Imputed per-algorithm value rows.
pub(crate) fn imputed_rows(table: &MetricTable) -> Vec<Vec<f64>> {
    (0..table.algorithms.len())
        .map(|a| table.row(a).iter().map(|v| v.unwrap_or(0.0)).collect())
        .collect()
}

/// Standard competition ranking of values, higher is better: equal values
/// share a rank, and each rank is 1 plus the number of strictly better
/// values.
pub fn competition_ranks(aggregates: &[f64]) -> Vec<usize> {
    aggregates
        .iter()
        .map(|&v| 1 + aggregates.iter().filter(|&&w| w > v).count())
        .collect()
}

pub(crate) fn significance_aggregates(rows: &[Vec<f64>], alpha: f64) -> Vec<f64> {
    let n = rows.len();
    let mut aggregates = Vec::with_capacity(n);
    for i in 0..n {
        let wins = (0..n)
            .filter(|&j| j != i)
            .filter(|&j| {
                wilcoxon_one_sided(&rows[i], &rows[j], alpha)
                    .expect("validated rows")
                    .significant
            })
            .count();
        aggregates.push(wins as f64 / (n - 1) as f64);
    }
    aggregates
}

pub(crate) fn robustness_aggregates(rows: &[Vec<f64>], percentile: f64) -> Vec<f64> {
    rows.iter()
        .map(|row| {
            let mut sorted = row.clone();
            sorted.sort_by(f64::total_cmp);
            interpolated_quantile(&sorted, percentile)
        })
        .collect()
}

fn entries(algorithms: &[String], aggregates: Vec<f64>) -> Vec<LeaderboardEntry> {
    let ranks = competition_ranks(&aggregates);
    let mut out: Vec<LeaderboardEntry> = algorithms
        .iter()
        .zip(aggregates)
        .zip(ranks)
        .map(|((team, aggregate), rank)| LeaderboardEntry {
            team: team.clone(),
            aggregate,
            rank,
        })
        .collect();
    out.sort_by(|a, b| a.rank.cmp(&b.rank).then_with(|| a.team.cmp(&b.team)));
    out
}

/// Accuracy ranking: each algorithm's aggregate is the fraction of rivals
/// it beats in one-sided pairwise signed-rank tests at level `alpha`.
/// Missing cases are imputed to 0.0 first.
pub fn significance_rank(table: &MetricTable, alpha: f64) -> Result<Vec<LeaderboardEntry>> {
    if table.algorithms.len() < 2 {
        return Err(Error::Config(
            "significance ranking needs at least two algorithms".into(),
        ));
    }
    if table.cases.is_empty() {
        return Err(Error::Config("significance ranking needs cases".into()));
    }
    RankingConfig {
        alpha,
        ..RankingConfig::default()
    }
    .validate()?;
    let rows = imputed_rows(table);
    Ok(entries(&table.algorithms, significance_aggregates(&rows, alpha)))
}

/// Robustness ranking: each algorithm's aggregate is the interpolated
/// `percentile` quantile of its per-case values (missing cases imputed
/// to 0.0), a worst-case performance summary.
pub fn robustness_rank(table: &MetricTable, percentile: f64) -> Result<Vec<LeaderboardEntry>> {
    if table.algorithms.is_empty() || table.cases.is_empty() {
        return Err(Error::Config("robustness ranking needs a non-empty table".into()));
    }
    RankingConfig {
        percentile,
        ..RankingConfig::default()
    }
    .validate()?;
    let rows = imputed_rows(table);
    Ok(entries(
        &table.algorithms,
        robustness_aggregates(&rows, percentile),
    ))
}

/// Detection leaderboard: competition ranks on raw (unrounded) mAP values.
pub fn detection_rank(map_values: &[(String, f64)]) -> Vec<LeaderboardEntry> {
    let teams: Vec<String> = map_values.iter().map(|(t, _)| t.clone()).collect();
    let aggregates: Vec<f64> = map_values.iter().map(|(_, v)| *v).collect();
    entries(&teams, aggregates)
}
