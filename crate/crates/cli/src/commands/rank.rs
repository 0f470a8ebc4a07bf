//! `segbench rank`: leaderboards from a metrics CSV. Missing cases are
//! imputed to the worst value before ranking; exports carry the full
//! configuration.

use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;

use segbench::export::{leaderboard_csv, leaderboard_json};
use segbench::{detection_rank, impute_missing, robustness_rank, significance_rank};

use crate::commands::{provenance, resolve_settings, Overrides};
use crate::table_io::{build_table, map_values, read_metrics_csv, stages_present, value_metrics_present};
use crate::{fatal, usage, CmdResult};

#[derive(Args)]
pub struct RankArgs {
    /// Metrics CSV produced by `segbench evaluate`
    #[arg(long)]
    metrics: PathBuf,
    /// Output directory for leaderboard files
    #[arg(long)]
    out: PathBuf,
    /// Ranking mode: accuracy, robustness or detection
    #[arg(long)]
    mode: Option<String>,
    /// Metric to rank (default: every value metric present)
    #[arg(long)]
    metric: Option<String>,
    /// Stage to rank (default: every stage present)
    #[arg(long)]
    stage: Option<u8>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    percentile: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    xi: Option<f64>,
}

pub fn run(args: RankArgs) -> CmdResult {
    let settings = resolve_settings(
        args.config.as_deref(),
        Overrides {
            alpha: args.alpha,
            percentile: args.percentile,
            tau: args.tau,
            xi: args.xi,
            mode: args.mode,
            ..Overrides::none()
        },
    )?;
    let mode = settings
        .mode
        .clone()
        .ok_or_else(|| usage(anyhow::anyhow!("--mode is required (accuracy, robustness, detection)")))?;
    if !matches!(mode.as_str(), "accuracy" | "robustness" | "detection") {
        return Err(usage(anyhow::anyhow!("unknown mode {mode:?}")));
    }

    let rows = read_metrics_csv(&args.metrics).map_err(fatal)?;
    let stages = match args.stage {
        Some(s) => vec![s],
        None => stages_present(&rows),
    };
    if stages.is_empty() {
        return Err(usage(anyhow::anyhow!("metrics CSV contains no rows")));
    }
    fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))
        .map_err(fatal)?;
    let prov = provenance(&settings, false);

    for &stage in &stages {
        if mode == "detection" {
            let values = map_values(&rows, stage).map_err(usage)?;
            let entries = detection_rank(&values);
            let stem = format!("leaderboard_mAP_detection_stage{stage}");
            fs::write(args.out.join(format!("{stem}.csv")), leaderboard_csv(&entries, 3))
                .map_err(fatal)?;
            fs::write(
                args.out.join(format!("{stem}.json")),
                leaderboard_json("detection", "mAP", &prov, &entries),
            )
            .map_err(fatal)?;
            continue;
        }

        let metrics = match &args.metric {
            Some(m) => vec![m.clone()],
            None => value_metrics_present(&rows),
        };
        if metrics.is_empty() {
            return Err(usage(anyhow::anyhow!(
                "metrics CSV contains no rankable value metrics"
            )));
        }
        for metric in &metrics {
            let table = build_table(&rows, metric, stage).map_err(usage)?;
            let table = impute_missing(&table);
            let entries = match mode.as_str() {
                "accuracy" => significance_rank(&table, settings.alpha).map_err(usage)?,
                _ => robustness_rank(&table, settings.percentile).map_err(usage)?,
            };
            let stem = format!("leaderboard_{metric}_{mode}_stage{stage}");
            fs::write(args.out.join(format!("{stem}.csv")), leaderboard_csv(&entries, 6))
                .map_err(fatal)?;
            fs::write(
                args.out.join(format!("{stem}.json")),
                leaderboard_json(&mode, metric, &prov, &entries),
            )
            .map_err(fatal)?;
        }
    }
    Ok(0)
}
