//! Secondary analyses: stratification by instrument count, worst-case
//! mining, cross-stage comparison and inter-rater tolerance derivation.

use std::collections::HashMap;

use serde::Serialize;

use crate::distance::distance_field;
use crate::error::{Error, Result};
use crate::mask::{CaseRecord, LabelMask};
use crate::ranking::{imputed_rows, MetricTable};
use crate::stats::interpolated_quantile;

/// Instrument-count group used by the stratified report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum InstrumentBucket {
    Zero,
    One,
    Two,
    Three,
    MoreThanThree,
}

impl InstrumentBucket {
    pub const ALL: [InstrumentBucket; 5] = [
        InstrumentBucket::Zero,
        InstrumentBucket::One,
        InstrumentBucket::Two,
        InstrumentBucket::Three,
        InstrumentBucket::MoreThanThree,
    ];

    pub fn of(instrument_count: u32) -> Self {
        match instrument_count {
            0 => InstrumentBucket::Zero,
            1 => InstrumentBucket::One,
            2 => InstrumentBucket::Two,
            3 => InstrumentBucket::Three,
            _ => InstrumentBucket::MoreThanThree,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            InstrumentBucket::Zero => "0",
            InstrumentBucket::One => "1",
            InstrumentBucket::Two => "2",
            InstrumentBucket::Three => "3",
            InstrumentBucket::MoreThanThree => ">3",
        }
    }
}

/// Distribution of per-case mean metric values within one bucket.
/// Statistics are absent for empty buckets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratifiedStats {
    pub bucket: InstrumentBucket,
    pub count: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub q1: Option<f64>,
    pub q3: Option<f64>,
}

/// One case of the worst-case report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstCaseRow {
    pub case_id: String,
    /// Aggregate across algorithms used for ordering.
    pub aggregate: f64,
    /// Per-algorithm values in table order (missing imputed to 0.0).
    pub per_algorithm: Vec<f64>,
}

/// Worst cases sorted ascending by aggregate; `truncated` is set when
/// fewer than the requested `k` cases exist.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstCasesReport {
    pub rows: Vec<WorstCaseRow>,
    pub truncated: bool,
}

/// How a case's values are collapsed across algorithms for worst-case
/// mining. The mean is the default; the minimum highlights cases where
/// even one algorithm collapses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseAggregate {
    Mean,
    Min,
}

/// Per-stage performance summary across teams (and across images).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageSummary {
    pub stage: u8,
    /// Each team's mean metric value over the stage's cases.
    pub team_means: Vec<(String, f64)>,
    /// Median/min/max of the team means.
    pub median: f64,
    pub min: f64,
    pub max: f64,
    /// Median/min/max of the per-image means across teams.
    pub image_median: f64,
    pub image_min: f64,
    pub image_max: f64,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Buckets cases by instrument count and summarizes the per-case mean
/// across algorithms within each bucket.
pub fn stratify_by_instrument_count(
    table: &MetricTable,
    cases: &[CaseRecord],
) -> Result<Vec<StratifiedStats>> {
    let counts: HashMap<&str, u32> = cases
        .iter()
        .map(|c| (c.case_id.as_str(), c.instrument_count))
        .collect();
    let rows = imputed_rows(table);
    let mut per_bucket: HashMap<InstrumentBucket, Vec<f64>> = HashMap::new();
    for (ci, case_id) in table.cases().iter().enumerate() {
        let n = counts.get(case_id.as_str()).ok_or_else(|| {
            Error::Input(format!("case {case_id} has no metadata record"))
        })?;
        let case_mean = mean(&rows.iter().map(|r| r[ci]).collect::<Vec<_>>());
        per_bucket
            .entry(InstrumentBucket::of(*n))
            .or_default()
            .push(case_mean);
    }

    Ok(InstrumentBucket::ALL
        .iter()
        .map(|&bucket| {
            let values = per_bucket.remove(&bucket).unwrap_or_default();
            if values.is_empty() {
                StratifiedStats {
                    bucket,
                    count: 0,
                    mean: None,
                    median: None,
                    q1: None,
                    q3: None,
                }
            } else {
                let mut sorted = values.clone();
                sorted.sort_by(f64::total_cmp);
                StratifiedStats {
                    bucket,
                    count: values.len(),
                    mean: Some(mean(&values)),
                    median: Some(interpolated_quantile(&sorted, 0.5)),
                    q1: Some(interpolated_quantile(&sorted, 0.25)),
                    q3: Some(interpolated_quantile(&sorted, 0.75)),
                }
            }
        })
        .collect())
}

/// The `k` cases with the worst mean-across-algorithms value, ascending,
/// ties broken by case id.
pub fn worst_cases(table: &MetricTable, k: usize) -> Result<WorstCasesReport> {
    worst_cases_by(table, k, CaseAggregate::Mean)
}

/// Worst-case mining with an explicit per-case aggregation.
pub fn worst_cases_by(
    table: &MetricTable,
    k: usize,
    aggregate: CaseAggregate,
) -> Result<WorstCasesReport> {
    if k == 0 {
        return Err(Error::Config("worst-case report needs k >= 1".into()));
    }
    let rows = imputed_rows(table);
    let mut scored: Vec<WorstCaseRow> = table
        .cases()
        .iter()
        .enumerate()
        .map(|(ci, case_id)| {
            let per_algorithm: Vec<f64> = rows.iter().map(|r| r[ci]).collect();
            let value = match aggregate {
                CaseAggregate::Mean => mean(&per_algorithm),
                CaseAggregate::Min => per_algorithm.iter().copied().fold(f64::INFINITY, f64::min),
            };
            WorstCaseRow {
                case_id: case_id.clone(),
                aggregate: value,
                per_algorithm,
            }
        })
        .collect();
    scored.sort_by(|a, b| {
        a.aggregate
            .total_cmp(&b.aggregate)
            .then_with(|| a.case_id.cmp(&b.case_id))
    });
    let truncated = k > scored.len();
    scored.truncate(k);
    Ok(WorstCasesReport {
        rows: scored,
        truncated,
    })
}

/// Summarizes each stage's table: per-team means, then median/min/max
/// across teams and across per-image means. All stages must share the
/// same team set.
pub fn stage_comparison(tables: &[(u8, MetricTable)]) -> Result<Vec<StageSummary>> {
    let first = tables
        .first()
        .ok_or_else(|| Error::Config("stage comparison needs at least one stage".into()))?;
    let mut team_set: Vec<&String> = first.1.algorithms().iter().collect();
    team_set.sort_unstable();
    for (stage, table) in tables {
        let mut teams: Vec<&String> = table.algorithms().iter().collect();
        teams.sort_unstable();
        if teams != team_set {
            return Err(Error::Input(format!(
                "stage {stage} has a different team set"
            )));
        }
        if table.cases().is_empty() {
            return Err(Error::Input(format!("stage {stage} has no cases")));
        }
    }

    Ok(tables
        .iter()
        .map(|(stage, table)| {
            let rows = imputed_rows(table);
            let team_means: Vec<(String, f64)> = table
                .algorithms()
                .iter()
                .zip(&rows)
                .map(|(team, row)| (team.clone(), mean(row)))
                .collect();
            let mut sorted: Vec<f64> = team_means.iter().map(|(_, m)| *m).collect();
            sorted.sort_by(f64::total_cmp);
            let image_means: Vec<f64> = (0..table.cases().len())
                .map(|ci| mean(&rows.iter().map(|r| r[ci]).collect::<Vec<_>>()))
                .collect();
            let mut image_sorted = image_means;
            image_sorted.sort_by(f64::total_cmp);
            StageSummary {
                stage: *stage,
                median: interpolated_quantile(&sorted, 0.5),
                min: sorted[0],
                max: sorted[sorted.len() - 1],
                image_median: interpolated_quantile(&image_sorted, 0.5),
                image_min: image_sorted[0],
                image_max: image_sorted[image_sorted.len() - 1],
                team_means,
            }
        })
        .collect())
}

/// Derives a boundary tolerance from inter-rater variability: pools the
/// bidirectional boundary distances of every annotator pair over every
/// image, takes the configured quantile and rounds up to whole pixels.
///
/// `annotations[i]` holds image i's masks, one per annotator, in a fixed
/// annotator order. Pairs where either mask has no boundary contribute no
/// distances.
pub fn derive_tau(annotations: &[Vec<LabelMask>], quantile: f64) -> Result<u32> {
    if !(0.0..=1.0).contains(&quantile) {
        return Err(Error::Config(format!(
            "quantile must lie in [0, 1], got {quantile}"
        )));
    }
    let n_annotators = annotations
        .first()
        .ok_or_else(|| Error::Input("tolerance derivation needs at least one image".into()))?
        .len();
    if n_annotators < 2 {
        return Err(Error::Input(
            "tolerance derivation needs at least two annotators".into(),
        ));
    }

    let mut pooled = Vec::new();
    for (image, masks) in annotations.iter().enumerate() {
        if masks.len() != n_annotators {
            return Err(Error::Input(format!(
                "image {image} has {} annotations, expected {n_annotators}",
                masks.len()
            )));
        }
        let boundaries: Vec<_> = masks.iter().map(|m| m.boundary()).collect();
        for a in 0..n_annotators {
            masks[a].check_same_shape(&masks[0])?;
            for b in a + 1..n_annotators {
                if boundaries[a].is_empty() || boundaries[b].is_empty() {
                    continue;
                }
                let field_b =
                    distance_field(&boundaries[b], masks[a].width(), masks[a].height())?;
                let field_a =
                    distance_field(&boundaries[a], masks[a].width(), masks[a].height())?;
                pooled.extend(boundaries[a].iter().map(|&(r, c)| field_b.get(r, c)));
                pooled.extend(boundaries[b].iter().map(|&(r, c)| field_a.get(r, c)));
            }
        }
    }
    if pooled.is_empty() {
        return Ok(0);
    }
    pooled.sort_by(f64::total_cmp);
    Ok(interpolated_quantile(&pooled, quantile).ceil() as u32)
}
