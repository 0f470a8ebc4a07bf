//! `segbench match`: inspect a single reference/prediction pair — the
//! instance assignment, per-pair scores and the TP/FN/FP classification.

use std::path::PathBuf;

use clap::Args;

use segbench::{
    classify_detections, dsc, iou, match_instances, mi_dsc, mi_nsd, nsd, InstanceView,
    MatchScore,
};

use crate::commands::{resolve_settings, Overrides};
use crate::dataset::load_mask_file;
use crate::{fatal, usage, CmdResult};

#[derive(Args)]
pub struct MatchArgs {
    /// Reference mask file (.png or .txt)
    #[arg(long)]
    reference: PathBuf,
    /// Prediction mask file (.png or .txt)
    #[arg(long)]
    prediction: PathBuf,
    /// Matching matrix score: iou or dsc
    #[arg(long, default_value = "iou")]
    score: String,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    xi: Option<f64>,
}

pub fn run(args: MatchArgs) -> CmdResult {
    let settings = resolve_settings(
        args.config.as_deref(),
        Overrides {
            tau: args.tau,
            xi: args.xi,
            ..Overrides::none()
        },
    )?;
    let score = match args.score.as_str() {
        "iou" => MatchScore::Iou,
        "dsc" => MatchScore::Dsc,
        other => return Err(usage(anyhow::anyhow!("unknown score {other:?}"))),
    };

    let reference = load_mask_file(&args.reference).map_err(fatal)?;
    let prediction = load_mask_file(&args.prediction).map_err(fatal)?;

    let ref_views = reference.instances();
    let pred_views = prediction.instances();
    println!(
        "reference: {} instance(s); prediction: {} instance(s)",
        ref_views.len(),
        pred_views.len()
    );

    let assignment = match_instances(&reference, &prediction, score).map_err(usage)?;
    let view_of = |views: &[InstanceView], label: u16| -> InstanceView {
        views.iter().find(|v| v.label == label).cloned().expect("matched label exists")
    };
    println!("pairs (matched on {}):", args.score);
    for &(r, p, s) in &assignment.pairs {
        let rv = view_of(&ref_views, r).to_mask(reference.width(), reference.height());
        let pv = view_of(&pred_views, p).to_mask(reference.width(), reference.height());
        let (rv, pv) = (rv.map_err(fatal)?, pv.map_err(fatal)?);
        let pair_iou = iou(&rv, &pv).map_err(fatal)?;
        let pair_dsc = dsc(&rv, &pv).map_err(fatal)?;
        let pair_nsd = nsd(&rv, &pv, settings.tau).map_err(fatal)?;
        println!(
            "  ref {r} -> pred {p}: matrix={s:.4} iou={pair_iou:.4} dsc={pair_dsc:.4} nsd(tau={})={pair_nsd:.4}",
            settings.tau
        );
    }
    println!("unmatched refs: {:?}", assignment.unmatched_refs);
    println!("unmatched preds: {:?}", assignment.unmatched_preds);

    // the detection rule wants IoU scores in the matrix
    let iou_assignment = if score == MatchScore::Iou {
        assignment
    } else {
        match_instances(&reference, &prediction, MatchScore::Iou).map_err(usage)?
    };
    let outcome = classify_detections(&iou_assignment, settings.xi);
    println!(
        "detection at xi={}: tp={} fp={} fn={}",
        settings.xi, outcome.true_positives, outcome.false_positives, outcome.false_negatives
    );

    let b_dsc = dsc(&reference, &prediction).map_err(usage)?;
    let b_nsd = nsd(&reference, &prediction, settings.tau).map_err(usage)?;
    println!("binary: dsc={b_dsc:.4} nsd={b_nsd:.4}");
    let m_dsc = mi_dsc(&reference, &prediction).map_err(usage)?;
    let m_nsd = mi_nsd(&reference, &prediction, settings.tau).map_err(usage)?;
    println!("multi-instance: mi_dsc={m_dsc:.4} mi_nsd={m_nsd:.4}");
    Ok(0)
}
