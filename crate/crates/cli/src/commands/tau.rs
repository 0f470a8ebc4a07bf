//! `segbench tau`: derive the NSD boundary tolerance from multi-annotator
//! masks laid out as `<root>/<annotator>/<image>.<ext>`.

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use serde::Serialize;

use segbench::derive_tau;

use crate::dataset::{list_stage_cases, load_mask_file};
use crate::{fatal, usage, CmdResult};

#[derive(Args)]
pub struct TauArgs {
    /// Root directory with one subdirectory per annotator
    #[arg(long)]
    annotations: PathBuf,
    /// Pooled-distance quantile
    #[arg(long, default_value_t = 0.95)]
    quantile: f64,
    /// Optional output directory for tau.json
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct TauDoc {
    tau: u32,
    quantile: f64,
    annotators: Vec<String>,
    images: Vec<String>,
}

pub fn run(args: TauArgs) -> CmdResult {
    let mut annotators = Vec::new();
    let entries = fs::read_dir(&args.annotations)
        .with_context(|| format!("cannot list {}", args.annotations.display()))
        .map_err(fatal)?;
    for entry in entries {
        let entry = entry.map_err(fatal)?;
        if entry.path().is_dir() {
            annotators.push(entry.file_name().to_string_lossy().to_string());
        }
    }
    annotators.sort();
    if annotators.len() < 2 {
        return Err(usage(anyhow::anyhow!(
            "need at least two annotator directories, found {}",
            annotators.len()
        )));
    }

    // every annotator must cover the same image set
    let mut per_annotator = Vec::new();
    let mut image_set: Option<BTreeSet<String>> = None;
    for annotator in &annotators {
        let cases = list_stage_cases(&args.annotations.join(annotator)).map_err(fatal)?;
        let ids: BTreeSet<String> = cases.iter().map(|(id, _)| id.clone()).collect();
        if let Some(expected) = &image_set {
            if &ids != expected {
                let missing: Vec<&String> = expected.difference(&ids).collect();
                let extra: Vec<&String> = ids.difference(expected).collect();
                return Err(usage(anyhow::anyhow!(
                    "annotator {annotator} disagrees on the image set (missing {missing:?}, extra {extra:?})"
                )));
            }
        } else {
            image_set = Some(ids);
        }
        per_annotator.push(cases);
    }
    let images: Vec<String> = image_set.unwrap_or_default().into_iter().collect();
    if images.is_empty() {
        return Err(usage(anyhow::anyhow!("annotator directories contain no masks")));
    }

    let mut annotations = Vec::with_capacity(images.len());
    for (idx, _) in images.iter().enumerate() {
        let mut masks = Vec::with_capacity(annotators.len());
        for cases in &per_annotator {
            masks.push(load_mask_file(&cases[idx].1).map_err(fatal)?);
        }
        annotations.push(masks);
    }

    let tau = derive_tau(&annotations, args.quantile).map_err(usage)?;
    println!("tau = {tau}");
    if let Some(out) = &args.out {
        fs::create_dir_all(out)
            .with_context(|| format!("cannot create {}", out.display()))
            .map_err(fatal)?;
        let doc = TauDoc {
            tau,
            quantile: args.quantile,
            annotators,
            images,
        };
        let mut json = serde_json::to_string_pretty(&doc).expect("serializable tau doc");
        json.push('\n');
        fs::write(out.join("tau.json"), json).map_err(fatal)?;
    }
    Ok(0)
}
