//! Multi-instance segmentation scores and detection average precision.
//!
//! MI_DSC and MI_NSD match instances one-to-one (DSC matching matrix by
//! default) and average the per-pair scores, counting every unmatched
//! instance on either side as a zero. Average precision follows the
//! all-point interpolated PASCAL-style area under the precision-recall
//! sweep, with per-case Hungarian matching on IoU.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::mask::{InstanceView, LabelMask};
use crate::matching::{
    classify_detections, hungarian_match, match_instances, DetectionOutcome, MatchScore,
    ScoreMatrix,
};
use crate::metrics::nsd;

/// Per-pair metric aggregated by the MI scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairMetric {
    Dsc,
    Nsd { tau: f64 },
}

/// One detected instance with an optional confidence (1.0 when absent).
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRecord {
    pub case_id: String,
    pub instance: InstanceView,
    pub confidence: f64,
}

/// Precision-recall sweep points plus the interpolated area under them.
#[derive(Debug, Clone, PartialEq)]
pub struct PRCurve {
    /// (recall, precision) after each detection, in sweep order.
    pub points: Vec<(f64, f64)>,
    pub ap: f64,
}

/// Multiple-instance DSC: mean pair DSC over the optimal matching,
/// with unmatched instances of either mask counted as zeros.
pub fn mi_dsc(reference: &LabelMask, prediction: &LabelMask) -> Result<f64> {
    mi_metric(reference, prediction, MatchScore::Dsc, PairMetric::Dsc)
}

/// Multiple-instance NSD at tolerance `tau`; matching is DSC-based.
pub fn mi_nsd(reference: &LabelMask, prediction: &LabelMask, tau: f64) -> Result<f64> {
    mi_metric(
        reference,
        prediction,
        MatchScore::Dsc,
        PairMetric::Nsd { tau },
    )
}

/// Generalized MI score with an explicit matching convention.
pub fn mi_metric(
    reference: &LabelMask,
    prediction: &LabelMask,
    match_on: MatchScore,
    pair: PairMetric,
) -> Result<f64> {
    reference.check_same_shape(prediction)?;
    let assignment = match_instances(reference, prediction, match_on)?;
    let denom = assignment.pairs.len()
        + assignment.unmatched_refs.len()
        + assignment.unmatched_preds.len();
    if denom == 0 {
        return Ok(1.0); // both masks empty
    }

    let ref_views: HashMap<u16, InstanceView> = reference
        .instances()
        .into_iter()
        .map(|v| (v.label, v))
        .collect();
    let pred_views: HashMap<u16, InstanceView> = prediction
        .instances()
        .into_iter()
        .map(|v| (v.label, v))
        .collect();

    let mut sum = 0.0;
    for &(r, p, _) in &assignment.pairs {
        let rv = &ref_views[&r];
        let pv = &pred_views[&p];
        sum += pair_score(rv, pv, reference.width(), reference.height(), pair)?;
    }
    Ok(sum / denom as f64)
}

fn pair_score(
    a: &InstanceView,
    b: &InstanceView,
    width: u32,
    height: u32,
    pair: PairMetric,
) -> Result<f64> {
    match pair {
        PairMetric::Dsc => {
            let bset: HashSet<_> = b.pixels.iter().copied().collect();
            let inter = a.pixels.iter().filter(|p| bset.contains(p)).count();
            Ok(2.0 * inter as f64 / (a.pixels.len() + b.pixels.len()) as f64)
        }
        PairMetric::Nsd { tau } => {
            let ma = a.to_mask(width, height)?;
            let mb = b.to_mask(width, height)?;
            nsd(&ma, &mb, tau)
        }
    }
}

/// Computes the precision-recall curve and its all-point interpolated area
/// over every case's detections.
///
/// Detections are matched per case to reference instances by Hungarian
/// assignment on IoU; a matched detection with IoU strictly above `xi` is a
/// TP. The global sweep orders detections by confidence descending, then
/// case id, then instance label.
pub fn average_precision(
    detections: &[DetectionRecord],
    references: &BTreeMap<String, LabelMask>,
    xi: f64,
) -> Result<PRCurve> {
    for d in detections {
        if !(0.0..=1.0).contains(&d.confidence) {
            return Err(Error::Input(format!(
                "confidence {} outside [0, 1] for case {}",
                d.confidence, d.case_id
            )));
        }
        if !references.contains_key(&d.case_id) {
            return Err(Error::Input(format!(
                "detection references unknown case {}",
                d.case_id
            )));
        }
        if d.instance.pixels.is_empty() {
            return Err(Error::Input(format!(
                "empty detection instance {} in case {}",
                d.instance.label, d.case_id
            )));
        }
    }

    let total_refs: usize = references.values().map(|m| m.instances().len()).sum();

    // per case: detection label -> TP flag
    let mut tp_flags: HashMap<(&str, u16), bool> = HashMap::new();
    let mut by_case: BTreeMap<&str, Vec<&DetectionRecord>> = BTreeMap::new();
    for d in detections {
        by_case.entry(d.case_id.as_str()).or_default().push(d);
    }
    for (case_id, dets) in &by_case {
        let reference = &references[*case_id];
        let matrix = detection_score_matrix(reference, dets)?;
        let assignment = hungarian_match(&matrix);
        for d in dets {
            tp_flags.insert((case_id, d.instance.label), false);
        }
        for &(_, p, s) in &assignment.pairs {
            if s > xi {
                tp_flags.insert((case_id, p), true);
            }
        }
    }

    // global sweep
    let mut order: Vec<&DetectionRecord> = detections.iter().collect();
    order.sort_by(|a, b| {
        b.confidence
            .total_cmp(&a.confidence)
            .then_with(|| a.case_id.cmp(&b.case_id))
            .then_with(|| a.instance.label.cmp(&b.instance.label))
    });

    let mut points = Vec::with_capacity(order.len());
    let mut tp = 0usize;
    for (i, d) in order.iter().enumerate() {
        if tp_flags[&(d.case_id.as_str(), d.instance.label)] {
            tp += 1;
        }
        let precision = tp as f64 / (i + 1) as f64;
        let recall = if total_refs == 0 {
            0.0
        } else {
            tp as f64 / total_refs as f64
        };
        points.push((recall, precision));
    }

    let ap = if total_refs == 0 {
        if detections.is_empty() {
            1.0
        } else {
            0.0
        }
    } else {
        interpolated_area(&points)
    };
    Ok(PRCurve { points, ap })
}

/// All-point interpolation: sum of recall increments times the maximum
/// precision at or beyond each recall level.
fn interpolated_area(points: &[(f64, f64)]) -> f64 {
    let mut envelope: Vec<f64> = points.iter().map(|&(_, p)| p).collect();
    let mut best = 0.0f64;
    for p in envelope.iter_mut().rev() {
        best = best.max(*p);
        *p = best;
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (i, &(recall, _)) in points.iter().enumerate() {
        if recall > prev_recall {
            ap += (recall - prev_recall) * envelope[i];
            prev_recall = recall;
        }
    }
    ap
}

/// TP/FN/FP counts for one case's detections at threshold `xi`, matched
/// on IoU exactly like [`average_precision`].
pub fn case_detection_outcome(
    reference: &LabelMask,
    detections: &[DetectionRecord],
    xi: f64,
) -> Result<DetectionOutcome> {
    let refs: Vec<&DetectionRecord> = detections.iter().collect();
    let matrix = detection_score_matrix(reference, &refs)?;
    Ok(classify_detections(&hungarian_match(&matrix), xi))
}

/// Pairwise IoU between a case's reference instances and its detections.
fn detection_score_matrix(
    reference: &LabelMask,
    detections: &[&DetectionRecord],
) -> Result<ScoreMatrix> {
    for d in detections {
        if d.instance.pixels.is_empty() {
            return Err(Error::Input(format!(
                "empty detection instance {} in case {}",
                d.instance.label, d.case_id
            )));
        }
    }
    let ref_views = reference.instances();
    let rows: Vec<u16> = ref_views.iter().map(|v| v.label).collect();
    let ref_sizes: HashMap<u16, usize> =
        ref_views.iter().map(|v| (v.label, v.pixels.len())).collect();

    let mut cols: Vec<u16> = detections.iter().map(|d| d.instance.label).collect();
    cols.sort_unstable();
    if cols.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Input(
            "detection instance labels must be unique per case".into(),
        ));
    }
    let mut by_label: HashMap<u16, &&DetectionRecord> =
        detections.iter().map(|d| (d.instance.label, d)).collect();

    let mut scores = Vec::with_capacity(rows.len() * cols.len());
    for &r in &rows {
        for &c in &cols {
            let det = by_label.get_mut(&c).expect("label indexed above");
            let mut inter = 0usize;
            for &(pr, pc) in &det.instance.pixels {
                if pr >= reference.height() || pc >= reference.width() {
                    return Err(Error::Input(format!(
                        "detection pixel ({pr}, {pc}) outside case grid"
                    )));
                }
                if reference.get(pr, pc) == r {
                    inter += 1;
                }
            }
            let union = ref_sizes[&r] + det.instance.pixels.len() - inter;
            scores.push(inter as f64 / union as f64);
        }
    }
    ScoreMatrix::new(rows, cols, scores)
}
