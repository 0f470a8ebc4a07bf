//! Binary overlap and surface metrics.
//!
//! All metrics treat any nonzero label as foreground. Two empty masks agree
//! perfectly and score 1.0; a single empty mask scores 0.0 for NSD and falls
//! out of the overlap formulas naturally for DSC/IoU.

use crate::distance::distance_field;
use crate::error::Result;
use crate::mask::LabelMask;

/// Metric parameters shared across an evaluation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricConfig {
    /// NSD boundary tolerance in pixels.
    pub tau: f64,
    /// Detection IoU threshold; a match counts as TP only above this.
    pub xi: f64,
}

impl MetricConfig {
    pub fn new(tau: f64, xi: f64) -> Result<Self> {
        if tau.is_nan() || tau < 0.0 {
            return Err(crate::error::Error::Config(format!(
                "tau must be >= 0, got {tau}"
            )));
        }
        if !(xi > 0.0 && xi < 1.0) {
            return Err(crate::error::Error::Config(format!(
                "xi must lie strictly between 0 and 1, got {xi}"
            )));
        }
        Ok(Self { tau, xi })
    }
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self { tau: 13.0, xi: 0.3 }
    }
}

fn overlap_counts(reference: &LabelMask, prediction: &LabelMask) -> (usize, usize, usize) {
    let mut n_ref = 0usize;
    let mut n_pred = 0usize;
    let mut n_both = 0usize;
    for (&a, &b) in reference.labels().iter().zip(prediction.labels()) {
        let fa = a != 0;
        let fb = b != 0;
        n_ref += usize::from(fa);
        n_pred += usize::from(fb);
        n_both += usize::from(fa && fb);
    }
    (n_ref, n_pred, n_both)
}

/// Dice similarity coefficient: `2|Y ∩ Ŷ| / (|Y| + |Ŷ|)`.
pub fn dsc(reference: &LabelMask, prediction: &LabelMask) -> Result<f64> {
    reference.check_same_shape(prediction)?;
    let (n_ref, n_pred, n_both) = overlap_counts(reference, prediction);
    if n_ref + n_pred == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * n_both as f64 / (n_ref + n_pred) as f64)
}

/// Intersection over union: `|Y ∩ Ŷ| / |Y ∪ Ŷ|`.
pub fn iou(reference: &LabelMask, prediction: &LabelMask) -> Result<f64> {
    reference.check_same_shape(prediction)?;
    let (n_ref, n_pred, n_both) = overlap_counts(reference, prediction);
    let n_union = n_ref + n_pred - n_both;
    if n_union == 0 {
        return Ok(1.0);
    }
    Ok(n_both as f64 / n_union as f64)
}

/// Normalized surface dice at tolerance `tau`: the fraction of boundary
/// pixels of either mask lying within `tau` (inclusive) of the opposite
/// boundary.
pub fn nsd(reference: &LabelMask, prediction: &LabelMask, tau: f64) -> Result<f64> {
    reference.check_same_shape(prediction)?;
    let ref_empty = reference.is_empty();
    let pred_empty = prediction.is_empty();
    if ref_empty && pred_empty {
        return Ok(1.0);
    }
    if ref_empty != pred_empty {
        return Ok(0.0);
    }

    let b_ref = reference.boundary();
    let b_pred = prediction.boundary();
    let field_pred = distance_field(&b_pred, reference.width(), reference.height())?;
    let field_ref = distance_field(&b_ref, reference.width(), reference.height())?;

    let near_ref = b_ref
        .iter()
        .filter(|&&(r, c)| field_pred.get(r, c) <= tau)
        .count();
    let near_pred = b_pred
        .iter()
        .filter(|&&(r, c)| field_ref.get(r, c) <= tau)
        .count();
    Ok((near_ref + near_pred) as f64 / (b_ref.len() + b_pred.len()) as f64)
}
