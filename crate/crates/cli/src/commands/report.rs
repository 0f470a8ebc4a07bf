//! `segbench report`: stratified summaries, worst-case mining and
//! cross-stage comparison, each as CSV plus a plain-text summary.

use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use serde::Serialize;

use segbench::{
    stage_comparison, stratify_by_instrument_count, worst_cases_by, CaseAggregate, CaseRecord,
    MetricTable, Provenance,
};

use crate::commands::{provenance, resolve_settings, Overrides};
use crate::dataset::read_cases_csv;
use crate::table_io::{build_table, read_metrics_csv, stages_present, value_metrics_present};
use crate::{fatal, usage, CmdResult};

#[derive(Args)]
pub struct ReportArgs {
    /// Metrics CSV produced by `segbench evaluate`
    #[arg(long)]
    metrics: PathBuf,
    /// Output directory for report files
    #[arg(long)]
    out: PathBuf,
    /// Report kind: stratify, worst or stages
    #[arg(long)]
    kind: String,
    /// Cases metadata CSV: case_id,stage,surgery_type,instrument_count
    /// (required for stratify, optional enrichment for worst)
    #[arg(long)]
    cases: Option<PathBuf>,
    /// Number of worst cases to report
    #[arg(long, default_value_t = 100)]
    k: usize,
    /// Per-case aggregation across algorithms for `worst`: mean or min
    #[arg(long, default_value = "mean")]
    aggregate: String,
    /// Metric to report on (default: every value metric present)
    #[arg(long)]
    metric: Option<String>,
    /// Stage to report on (default: every stage present)
    #[arg(long)]
    stage: Option<u8>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Serialize)]
struct ReportConfigDoc<'a> {
    kind: &'a str,
    k: usize,
    aggregate: &'a str,
    config: Provenance,
}

pub fn run(args: ReportArgs) -> CmdResult {
    let settings = resolve_settings(args.config.as_deref(), Overrides::none())?;
    let rows = read_metrics_csv(&args.metrics).map_err(fatal)?;
    let stages = match args.stage {
        Some(s) => vec![s],
        None => stages_present(&rows),
    };
    let metrics = match &args.metric {
        Some(m) => vec![m.clone()],
        None => value_metrics_present(&rows),
    };
    if stages.is_empty() || metrics.is_empty() {
        return Err(usage(anyhow::anyhow!("metrics CSV contains no value-metric rows")));
    }
    fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))
        .map_err(fatal)?;
    let metadata = match &args.cases {
        Some(path) => Some(read_cases_csv(path).map_err(fatal)?),
        None => None,
    };

    if matches!(args.kind.as_str(), "stratify" | "worst" | "stages") {
        let doc = ReportConfigDoc {
            kind: &args.kind,
            k: args.k,
            aggregate: &args.aggregate,
            config: provenance(&settings, false),
        };
        let mut json = serde_json::to_string_pretty(&doc).expect("serializable report config");
        json.push('\n');
        fs::write(args.out.join("report_config.json"), json).map_err(fatal)?;
    }

    match args.kind.as_str() {
        "stratify" => {
            let meta = metadata
                .as_ref()
                .ok_or_else(|| usage(anyhow::anyhow!("--cases is required for stratify")))?;
            for &stage in &stages {
                for metric in &metrics {
                    let table = build_table(&rows, metric, stage).map_err(usage)?;
                    stratify_one(&args, metric, stage, &table, meta)?;
                }
            }
        }
        "worst" => {
            let aggregate = match args.aggregate.as_str() {
                "mean" => CaseAggregate::Mean,
                "min" => CaseAggregate::Min,
                other => return Err(usage(anyhow::anyhow!("unknown aggregate {other:?}"))),
            };
            for &stage in &stages {
                for metric in &metrics {
                    let table = build_table(&rows, metric, stage).map_err(usage)?;
                    worst_one(&args, metric, stage, &table, aggregate, metadata.as_deref())?;
                }
            }
        }
        "stages" => {
            for metric in &metrics {
                let tables: Vec<(u8, MetricTable)> = stages
                    .iter()
                    .map(|&s| build_table(&rows, metric, s).map(|t| (s, t)))
                    .collect::<Result<_, _>>()
                    .map_err(usage)?;
                stages_one(&args, metric, &tables)?;
            }
        }
        other => return Err(usage(anyhow::anyhow!("unknown report kind {other:?}"))),
    }
    Ok(0)
}

fn stratify_one(
    args: &ReportArgs,
    metric: &str,
    stage: u8,
    table: &MetricTable,
    metadata: &[CaseRecord],
) -> Result<(), crate::Failure> {
    let stats = stratify_by_instrument_count(table, metadata).map_err(usage)?;
    let mut csv = String::from("bucket,count,mean,median,q1,q3\n");
    let mut text = format!("{metric} stage {stage}: per-case mean by instrument count\n");
    for s in &stats {
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.bucket.label(),
            s.count,
            fmt(s.mean),
            fmt(s.median),
            fmt(s.q1),
            fmt(s.q3)
        ));
        match s.mean {
            Some(mean) => text.push_str(&format!(
                "  {:>2} instruments: {:3} cases, mean {:.4}, median {:.4}\n",
                s.bucket.label(),
                s.count,
                mean,
                s.median.unwrap_or(f64::NAN)
            )),
            None => text.push_str(&format!(
                "  {:>2} instruments: no cases\n",
                s.bucket.label()
            )),
        }
    }
    let stem = format!("stratified_{metric}_stage{stage}");
    fs::write(args.out.join(format!("{stem}.csv")), csv).map_err(fatal)?;
    fs::write(args.out.join(format!("{stem}.txt")), text).map_err(fatal)?;
    Ok(())
}

fn worst_one(
    args: &ReportArgs,
    metric: &str,
    stage: u8,
    table: &MetricTable,
    aggregate: CaseAggregate,
    metadata: Option<&[CaseRecord]>,
) -> Result<(), crate::Failure> {
    let report = worst_cases_by(table, args.k, aggregate).map_err(usage)?;
    let meta_by_case: HashMap<&str, &CaseRecord> = metadata
        .unwrap_or_default()
        .iter()
        .map(|c| (c.case_id.as_str(), c))
        .collect();

    let mut csv = String::from("case_id,aggregate");
    for team in table.algorithms() {
        csv.push_str(&format!(",{team}"));
    }
    if metadata.is_some() {
        csv.push_str(",surgery_type,instrument_count");
    }
    csv.push('\n');
    for row in &report.rows {
        csv.push_str(&format!("{},{}", row.case_id, row.aggregate));
        for v in &row.per_algorithm {
            csv.push_str(&format!(",{v}"));
        }
        if metadata.is_some() {
            match meta_by_case.get(row.case_id.as_str()) {
                Some(meta) => {
                    csv.push_str(&format!(",{},{}", meta.surgery_type, meta.instrument_count))
                }
                None => csv.push_str(",,"),
            }
        }
        csv.push('\n');
    }

    let mut text = format!(
        "{metric} stage {stage}: {} worst cases by {} across algorithms\n",
        report.rows.len(),
        match aggregate {
            CaseAggregate::Mean => "mean",
            CaseAggregate::Min => "min",
        }
    );
    if report.truncated {
        text.push_str(&format!(
            "note: only {} cases exist, fewer than the requested k={}\n",
            report.rows.len(),
            args.k
        ));
    }
    for row in report.rows.iter().take(10) {
        text.push_str(&format!("  {}: {:.4}\n", row.case_id, row.aggregate));
    }

    let stem = format!("worst_{metric}_stage{stage}");
    fs::write(args.out.join(format!("{stem}.csv")), csv).map_err(fatal)?;
    fs::write(args.out.join(format!("{stem}.txt")), text).map_err(fatal)?;
    Ok(())
}

fn stages_one(
    args: &ReportArgs,
    metric: &str,
    tables: &[(u8, MetricTable)],
) -> Result<(), crate::Failure> {
    let summaries = stage_comparison(tables).map_err(usage)?;
    let mut csv =
        String::from("stage,median,min,max,image_median,image_min,image_max\n");
    let mut teams_csv = String::from("stage,team,mean\n");
    let mut text = format!("{metric}: cross-stage comparison of team means\n");
    for s in &summaries {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.stage, s.median, s.min, s.max, s.image_median, s.image_min, s.image_max
        ));
        for (team, mean) in &s.team_means {
            teams_csv.push_str(&format!("{},{team},{mean}\n", s.stage));
        }
        text.push_str(&format!(
            "  stage {}: median {:.4} (min {:.4}, max {:.4})\n",
            s.stage, s.median, s.min, s.max
        ));
    }
    let stem = format!("stages_{metric}");
    fs::write(args.out.join(format!("{stem}.csv")), csv).map_err(fatal)?;
    fs::write(args.out.join(format!("{stem}_teams.csv")), teams_csv).map_err(fatal)?;
    fs::write(args.out.join(format!("{stem}.txt")), text).map_err(fatal)?;
    Ok(())
}
