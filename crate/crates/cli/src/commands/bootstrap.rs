//! `segbench bootstrap`: rank-stability analysis over case resamples,
//! emitting the rank-frequency data behind heatmaps and blob plots.

use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;

use segbench::export::{bootstrap_csv, bootstrap_json};
use segbench::{bootstrap_rankings, Ranker, RankingConfig};

use crate::commands::{provenance, resolve_settings, Overrides};
use crate::table_io::{build_table, read_metrics_csv, stages_present, value_metrics_present};
use crate::{fatal, usage, CmdResult};

#[derive(Args)]
pub struct BootstrapArgs {
    /// Metrics CSV produced by `segbench evaluate`
    #[arg(long)]
    metrics: PathBuf,
    /// Output directory for summary files
    #[arg(long)]
    out: PathBuf,
    /// Ranking recomputed per replicate: significance or robustness
    #[arg(long)]
    ranker: String,
    /// Metric to analyze (default: every value metric present)
    #[arg(long)]
    metric: Option<String>,
    /// Stage to analyze (default: every stage present)
    #[arg(long)]
    stage: Option<u8>,
    /// Number of bootstrap replicates
    #[arg(long)]
    b: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    percentile: Option<f64>,
}

pub fn run(args: BootstrapArgs) -> CmdResult {
    let settings = resolve_settings(
        args.config.as_deref(),
        Overrides {
            b: args.b,
            seed: args.seed,
            alpha: args.alpha,
            percentile: args.percentile,
            ..Overrides::none()
        },
    )?;
    let ranker = match args.ranker.as_str() {
        "significance" => Ranker::Significance,
        "robustness" => Ranker::Robustness,
        other => return Err(usage(anyhow::anyhow!("unknown ranker {other:?}"))),
    };

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
        return Err(usage(anyhow::anyhow!("metrics CSV contains no rankable rows")));
    }
    fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))
        .map_err(fatal)?;
    let prov = provenance(&settings, true);
    let ranking_config = RankingConfig {
        alpha: settings.alpha,
        percentile: settings.percentile,
    };

    for &stage in &stages {
        for metric in &metrics {
            let table = build_table(&rows, metric, stage).map_err(usage)?;
            let summary = bootstrap_rankings(&table, ranker, settings.b, settings.seed, &ranking_config)
                .map_err(usage)?;
            let stem = format!("bootstrap_{metric}_{}_stage{stage}", args.ranker);
            fs::write(args.out.join(format!("{stem}.csv")), bootstrap_csv(&summary))
                .map_err(fatal)?;
            fs::write(
                args.out.join(format!("{stem}.json")),
                bootstrap_json(ranker, metric, &prov, &summary),
            )
            .map_err(fatal)?;
        }
    }
    Ok(0)
}
