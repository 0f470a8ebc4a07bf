//! `segbench evaluate`: walk the dataset tree, score every (team, stage,
//! case) and emit the metrics CSV plus provenance files.
//!
//! A case whose prediction file is absent is recorded MISSING; an
//! unreadable mask becomes a per-case error record. Both keep the run
//! going and turn the exit code into 2 (partial failure).

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use segbench::{
    average_precision, case_detection_outcome, mi_dsc, mi_nsd, DetectionRecord, InstanceView,
    LabelMask, Provenance,
};

use crate::commands::{provenance, resolve_settings, Overrides};
use crate::dataset::{discover_stages, discover_teams, list_stage_cases, load_mask_file};
use crate::table_io::{write_metrics_csv, MetricRow};
use crate::{fatal, usage, CmdResult, Failure};

#[derive(Args)]
pub struct EvaluateArgs {
    /// Dataset root: `references/<stage>/<case>.<ext>` plus one directory
    /// per team with the same stage layout
    #[arg(long)]
    data: PathBuf,
    /// Output directory for metrics.csv and run files
    #[arg(long)]
    out: PathBuf,
    /// Task: binary-seg, multi-seg or multi-det
    #[arg(long)]
    task: Option<String>,
    /// Comma-separated team filter (default: all team directories)
    #[arg(long)]
    teams: Option<String>,
    /// Comma-separated stage filter (default: all stages present)
    #[arg(long)]
    stages: Option<String>,
    /// Config file with key = value lines
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    xi: Option<f64>,
    /// Worker threads for case-level parallelism
    #[arg(long)]
    jobs: Option<usize>,
}

struct Item {
    team: String,
    stage: u8,
    case_id: String,
    ref_path: PathBuf,
    pred_path: Option<PathBuf>,
    /// Detections parsed from detections.csv, when that file exists.
    csv_detections: Option<Vec<DetectionRecord>>,
}

enum Outcome {
    Values(Vec<(&'static str, f64)>),
    Detections {
        counts: Vec<(&'static str, f64)>,
        detections: Vec<DetectionRecord>,
    },
    Missing,
    Failed(String),
}

#[derive(Serialize)]
struct RunConfigDoc<'a> {
    task: &'a str,
    data: String,
    stages: &'a [u8],
    teams: &'a [String],
    jobs: usize,
    config: Provenance,
}

pub fn run(args: EvaluateArgs) -> CmdResult {
    let settings = resolve_settings(
        args.config.as_deref(),
        Overrides {
            tau: args.tau,
            xi: args.xi,
            jobs: args.jobs,
            task: args.task,
            ..Overrides::none()
        },
    )?;
    let task = settings
        .task
        .clone()
        .ok_or_else(|| usage(anyhow::anyhow!("--task is required (binary-seg, multi-seg, multi-det)")))?;
    if !matches!(task.as_str(), "binary-seg" | "multi-seg" | "multi-det") {
        return Err(usage(anyhow::anyhow!("unknown task {task:?}")));
    }

    let all_stages = discover_stages(&args.data).map_err(fatal)?;
    let stages = filter_list(&all_stages, args.stages.as_deref(), "stage")?;
    let all_teams = discover_teams(&args.data).map_err(fatal)?;
    let teams = filter_list(&all_teams, args.teams.as_deref(), "team")?;
    if teams.is_empty() {
        return Err(usage(anyhow::anyhow!("no team directories found")));
    }

    fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))
        .map_err(fatal)?;
    let mut log = RunLog::new();
    log.line(&format!(
        "evaluate task={task} teams={} stages={stages:?} jobs={}",
        teams.join(","),
        settings.jobs
    ));

    // reference listings per stage
    let mut ref_cases: BTreeMap<u8, Vec<(String, PathBuf)>> = BTreeMap::new();
    for &stage in &stages {
        let dir = args.data.join(crate::dataset::REFERENCES_DIR).join(stage.to_string());
        ref_cases.insert(stage, list_stage_cases(&dir).map_err(fatal)?);
    }

    let mut items = Vec::new();
    for team in &teams {
        for &stage in &stages {
            let stage_dir = args.data.join(team).join(stage.to_string());
            let preds: HashMap<String, PathBuf> = if stage_dir.is_dir() {
                list_stage_cases(&stage_dir)
                    .map_err(fatal)?
                    .into_iter()
                    .collect()
            } else {
                HashMap::new()
            };
            let csv_dets = if task == "multi-det" {
                read_detections_csv(&stage_dir).map_err(fatal)?
            } else {
                None
            };
            for (case_id, ref_path) in &ref_cases[&stage] {
                let csv_detections = csv_dets.as_ref().map(|by_case| {
                    by_case.get(case_id).cloned().unwrap_or_default()
                });
                items.push(Item {
                    team: team.clone(),
                    stage,
                    case_id: case_id.clone(),
                    ref_path: ref_path.clone(),
                    pred_path: preds.get(case_id).cloned(),
                    csv_detections,
                });
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.jobs)
        .build()
        .map_err(|e| fatal(anyhow::anyhow!("cannot build thread pool: {e}")))?;
    let tau = settings.tau;
    let xi = settings.xi;
    let outcomes: Vec<Outcome> = pool.install(|| {
        items
            .par_iter()
            .map(|item| evaluate_item(item, &task, tau, xi))
            .collect()
    });

    let mut rows = Vec::new();
    let mut errors: Vec<(String, u8, String, String)> = Vec::new();
    let mut partial = false;
    let metric_names: &[&str] = match task.as_str() {
        "binary-seg" => &["DSC", "NSD"],
        "multi-seg" => &["MI_DSC", "MI_NSD"],
        _ => &["tp", "fp", "fn"],
    };
    let mut det_by_team_stage: BTreeMap<(String, u8), Vec<DetectionRecord>> = BTreeMap::new();
    for (item, outcome) in items.iter().zip(outcomes) {
        let push_missing = |rows: &mut Vec<MetricRow>| {
            for name in metric_names {
                rows.push(MetricRow {
                    team: item.team.clone(),
                    task: task.clone(),
                    stage: item.stage,
                    case_id: item.case_id.clone(),
                    metric: name.to_string(),
                    value: None,
                });
            }
        };
        match outcome {
            Outcome::Values(values) => {
                for (name, value) in values {
                    rows.push(MetricRow {
                        team: item.team.clone(),
                        task: task.clone(),
                        stage: item.stage,
                        case_id: item.case_id.clone(),
                        metric: name.to_string(),
                        value: Some(value),
                    });
                }
            }
            Outcome::Detections { counts, detections } => {
                for (name, value) in counts {
                    rows.push(MetricRow {
                        team: item.team.clone(),
                        task: task.clone(),
                        stage: item.stage,
                        case_id: item.case_id.clone(),
                        metric: name.to_string(),
                        value: Some(value),
                    });
                }
                det_by_team_stage
                    .entry((item.team.clone(), item.stage))
                    .or_default()
                    .extend(detections);
            }
            Outcome::Missing => {
                push_missing(&mut rows);
                partial = true;
                log.line(&format!(
                    "missing prediction: team={} stage={} case={}",
                    item.team, item.stage, item.case_id
                ));
            }
            Outcome::Failed(message) => {
                push_missing(&mut rows);
                partial = true;
                errors.push((item.team.clone(), item.stage, item.case_id.clone(), message.clone()));
                log.line(&format!(
                    "error: team={} stage={} case={}: {message}",
                    item.team, item.stage, item.case_id
                ));
            }
        }
    }

    // global mAP per (team, stage)
    if task == "multi-det" {
        for team in &teams {
            for &stage in &stages {
                let mut references = BTreeMap::new();
                for (case_id, ref_path) in &ref_cases[&stage] {
                    match load_mask_file(ref_path) {
                        Ok(mask) => {
                            references.insert(case_id.clone(), mask);
                        }
                        Err(_) => continue, // already recorded per case
                    }
                }
                let detections = det_by_team_stage
                    .remove(&(team.clone(), stage))
                    .unwrap_or_default();
                match average_precision(&detections, &references, xi) {
                    Ok(curve) => rows.push(MetricRow {
                        team: team.clone(),
                        task: task.clone(),
                        stage,
                        case_id: String::new(),
                        metric: "mAP".to_string(),
                        value: Some(curve.ap),
                    }),
                    Err(e) => {
                        partial = true;
                        errors.push((team.clone(), stage, String::new(), e.to_string()));
                        log.line(&format!("error: team={team} stage={stage} mAP: {e}"));
                    }
                }
            }
        }
    }

    rows.sort_by(|a, b| {
        (&a.team, a.stage, &a.case_id, &a.metric).cmp(&(&b.team, b.stage, &b.case_id, &b.metric))
    });
    write_metrics_csv(&args.out.join("metrics.csv"), &rows).map_err(fatal)?;

    if !errors.is_empty() {
        errors.sort();
        let mut writer = csv::Writer::from_path(args.out.join("errors.csv"))
            .context("cannot create errors.csv")
            .map_err(fatal)?;
        writer
            .write_record(["team", "stage", "case_id", "error"])
            .map_err(fatal)?;
        for (team, stage, case_id, message) in &errors {
            writer
                .write_record([team.as_str(), &stage.to_string(), case_id, message])
                .map_err(fatal)?;
        }
        writer.flush().map_err(fatal)?;
    }

    let doc = RunConfigDoc {
        task: &task,
        data: args.data.display().to_string(),
        stages: &stages,
        teams: &teams,
        jobs: settings.jobs,
        config: provenance(&settings, false),
    };
    let mut json = serde_json::to_string_pretty(&doc).expect("serializable run config");
    json.push('\n');
    fs::write(args.out.join("run_config.json"), json).map_err(fatal)?;

    log.line(&format!(
        "done: {} rows, {} errors, partial={partial}",
        rows.len(),
        errors.len()
    ));
    fs::write(args.out.join("run.log"), log.text).map_err(fatal)?;

    Ok(if partial { 2 } else { 0 })
}

fn evaluate_item(item: &Item, task: &str, tau: f64, xi: f64) -> Outcome {
    let reference = match load_mask_file(&item.ref_path) {
        Ok(m) => m,
        Err(e) => return Outcome::Failed(format!("reference: {e:#}")),
    };

    if task == "multi-det" {
        // detections.csv takes precedence over per-case prediction masks
        let detections = if let Some(dets) = &item.csv_detections {
            dets.clone()
        } else {
            let pred = match &item.pred_path {
                Some(path) => match load_mask_file(path) {
                    Ok(m) => m,
                    Err(e) => return Outcome::Failed(format!("prediction: {e:#}")),
                },
                None => return Outcome::Missing,
            };
            if !pred.same_shape(&reference) {
                return Outcome::Failed("prediction/reference shape mismatch".to_string());
            }
            pred.instances()
                .into_iter()
                .map(|instance| DetectionRecord {
                    case_id: item.case_id.clone(),
                    instance,
                    confidence: 1.0,
                })
                .collect()
        };
        return match case_detection_outcome(&reference, &detections, xi) {
            Ok(outcome) => Outcome::Detections {
                counts: vec![
                    ("tp", outcome.true_positives as f64),
                    ("fp", outcome.false_positives as f64),
                    ("fn", outcome.false_negatives as f64),
                ],
                detections,
            },
            Err(e) => Outcome::Failed(e.to_string()),
        };
    }

    let pred = match &item.pred_path {
        Some(path) => match load_mask_file(path) {
            Ok(m) => m,
            Err(e) => return Outcome::Failed(format!("prediction: {e:#}")),
        },
        None => return Outcome::Missing,
    };
    let result = match task {
        "binary-seg" => segbench::dsc(&reference, &pred).and_then(|d| {
            segbench::nsd(&reference, &pred, tau).map(|n| vec![("DSC", d), ("NSD", n)])
        }),
        _ => mi_dsc(&reference, &pred).and_then(|d| {
            mi_nsd(&reference, &pred, tau).map(|n| vec![("MI_DSC", d), ("MI_NSD", n)])
        }),
    };
    match result {
        Ok(values) => Outcome::Values(values),
        Err(e) => Outcome::Failed(e.to_string()),
    }
}

/// Parses `<stage_dir>/detections.csv` when present:
/// `case_id,instance_label,confidence,mask_path` with mask_path relative
/// to the stage directory and an empty confidence defaulting to 1.0.
fn read_detections_csv(
    stage_dir: &Path,
) -> anyhow::Result<Option<HashMap<String, Vec<DetectionRecord>>>> {
    let path = stage_dir.join("detections.csv");
    if !path.is_file() {
        return Ok(None);
    }
    let mut reader = csv::Reader::from_path(&path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let mut by_case: HashMap<String, Vec<DetectionRecord>> = HashMap::new();
    let mut mask_cache: HashMap<PathBuf, LabelMask> = HashMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != 4 {
            anyhow::bail!("detections.csv row {} has {} fields, expected 4", i + 2, record.len());
        }
        let case_id = record[0].to_string();
        let label: u16 = record[1]
            .parse()
            .with_context(|| format!("bad instance_label in row {}", i + 2))?;
        let confidence: f64 = if record[2].is_empty() {
            1.0
        } else {
            record[2]
                .parse()
                .with_context(|| format!("bad confidence in row {}", i + 2))?
        };
        let mask_path = stage_dir.join(&record[3]);
        if !mask_cache.contains_key(&mask_path) {
            let mask = load_mask_file(&mask_path)?;
            mask_cache.insert(mask_path.clone(), mask);
        }
        let mask = &mask_cache[&mask_path];
        let pixels: Vec<(u32, u32)> = (0..mask.height())
            .flat_map(|r| (0..mask.width()).map(move |c| (r, c)))
            .filter(|&(r, c)| mask.get(r, c) == label)
            .collect();
        by_case.entry(case_id.clone()).or_default().push(DetectionRecord {
            case_id,
            instance: InstanceView { label, pixels },
            confidence,
        });
    }
    Ok(Some(by_case))
}

fn filter_list<T: ToString + Clone>(
    all: &[T],
    filter: Option<&str>,
    what: &str,
) -> std::result::Result<Vec<T>, Failure> {
    match filter {
        None => Ok(all.to_vec()),
        Some(csv) => {
            let mut out = Vec::new();
            for token in csv.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let wanted = all
                    .iter()
                    .find(|item| item.to_string() == token)
                    .ok_or_else(|| usage(anyhow::anyhow!("unknown {what} {token:?}")))?;
                out.push(wanted.clone());
            }
            Ok(out)
        }
    }
}

struct RunLog {
    text: String,
}

impl RunLog {
    fn new() -> Self {
        Self { text: String::new() }
    }

    /// Timestamps are confined to this sidecar log so every other output
    /// stays byte-identical across runs.
    fn line(&mut self, message: &str) {
        let ts = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        self.text.push_str(&format!("{ts:.3} {message}\n"));
    }
}
