//! The metrics CSV: `team,task,stage,case_id,metric,value` with an empty
//! value field marking a missing case. Values are written in shortest
//! round-trip form so re-parsing restores them exactly.

use std::collections::BTreeSet;
use std::path::Path;

use anyhow::{Context, Result};
use segbench::MetricTable;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub team: String,
    pub task: String,
    pub stage: u8,
    pub case_id: String,
    pub metric: String,
    pub value: Option<f64>,
}

pub fn write_metrics_csv(path: &Path, rows: &[MetricRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    writer.write_record(["team", "task", "stage", "case_id", "metric", "value"])?;
    for r in rows {
        writer.write_record([
            r.team.as_str(),
            r.task.as_str(),
            &r.stage.to_string(),
            r.case_id.as_str(),
            r.metric.as_str(),
            &r.value.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricRow>> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("bad record in {}", path.display()))?;
        if record.len() != 6 {
            anyhow::bail!("row {} has {} fields, expected 6", i + 2, record.len());
        }
        let value = if record[5].is_empty() {
            None
        } else {
            Some(
                record[5]
                    .parse::<f64>()
                    .with_context(|| format!("bad value {:?} in row {}", &record[5], i + 2))?,
            )
        };
        rows.push(MetricRow {
            team: record[0].to_string(),
            task: record[1].to_string(),
            stage: record[2]
                .parse()
                .with_context(|| format!("bad stage {:?} in row {}", &record[2], i + 2))?,
            case_id: record[3].to_string(),
            metric: record[4].to_string(),
            value,
        });
    }
    Ok(rows)
}

/// Distinct stages present, ascending.
pub fn stages_present(rows: &[MetricRow]) -> Vec<u8> {
    let set: BTreeSet<u8> = rows.iter().map(|r| r.stage).collect();
    set.into_iter().collect()
}

/// Distinct value-metric names present (mAP and count rows excluded),
/// ascending.
pub fn value_metrics_present(rows: &[MetricRow]) -> Vec<String> {
    let set: BTreeSet<&str> = rows
        .iter()
        .map(|r| r.metric.as_str())
        .filter(|m| matches!(*m, "DSC" | "NSD" | "MI_DSC" | "MI_NSD"))
        .collect();
    set.into_iter().map(str::to_string).collect()
}

/// Builds the per-(metric, stage) table. Every (team, case) cell missing
/// from the CSV stays MISSING.
pub fn build_table(rows: &[MetricRow], metric: &str, stage: u8) -> Result<MetricTable> {
    let selected: Vec<&MetricRow> = rows
        .iter()
        .filter(|r| r.metric == metric && r.stage == stage)
        .collect();
    if selected.is_empty() {
        anyhow::bail!("no {metric} rows for stage {stage}");
    }
    let teams: BTreeSet<&str> = selected.iter().map(|r| r.team.as_str()).collect();
    let cases: BTreeSet<&str> = selected.iter().map(|r| r.case_id.as_str()).collect();
    let teams: Vec<String> = teams.into_iter().map(str::to_string).collect();
    let cases: Vec<String> = cases.into_iter().map(str::to_string).collect();
    let mut values = vec![None; teams.len() * cases.len()];
    for row in &selected {
        let a = teams.binary_search_by(|t| t.as_str().cmp(&row.team)).unwrap();
        let c = cases
            .binary_search_by(|t| t.as_str().cmp(&row.case_id))
            .unwrap();
        values[a * cases.len() + c] = row.value;
    }
    MetricTable::new(teams, cases, values).map_err(Into::into)
}

/// Per-team mAP values for one stage, team-sorted.
pub fn map_values(rows: &[MetricRow], stage: u8) -> Result<Vec<(String, f64)>> {
    let mut out: Vec<(String, f64)> = rows
        .iter()
        .filter(|r| r.metric == "mAP" && r.stage == stage)
        .map(|r| {
            r.value
                .map(|v| (r.team.clone(), v))
                .ok_or_else(|| anyhow::anyhow!("mAP row for {} has no value", r.team))
        })
        .collect::<Result<_>>()?;
    if out.is_empty() {
        anyhow::bail!("no mAP rows for stage {stage}");
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}
