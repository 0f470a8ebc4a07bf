//! Optimal one-to-one instance matching and TP/FN/FP classification.
//!
//! Matching maximizes the total pair score with the Hungarian algorithm.
//! Among equally optimal assignments the one whose (ref label, pred label)
//! pair sequence is lexicographically smallest is returned, so leaderboards
//! are reproducible run to run.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::mask::LabelMask;

/// Totals that differ by less than this are treated as tied when selecting
/// the lexicographically smallest optimal assignment.
const TIE_EPS: f64 = 1e-12;

/// Which pairwise score fills the matching matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchScore {
    /// Intersection over union; the convention for detection.
    Iou,
    /// Dice coefficient; the convention for multi-instance segmentation.
    Dsc,
}

/// Pairwise scores between reference instances (rows) and prediction
/// instances (cols). Scores lie in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    rows: Vec<u16>,
    cols: Vec<u16>,
    scores: Vec<f64>,
}

impl ScoreMatrix {
    /// Builds a matrix from ascending row/col labels and row-major scores.
    pub fn new(rows: Vec<u16>, cols: Vec<u16>, scores: Vec<f64>) -> Result<Self> {
        if scores.len() != rows.len() * cols.len() {
            return Err(Error::Input(format!(
                "score matrix has {} entries, expected {}x{}",
                scores.len(),
                rows.len(),
                cols.len()
            )));
        }
        if !rows.windows(2).all(|w| w[0] < w[1]) || !cols.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Input(
                "score matrix labels must be strictly ascending".into(),
            ));
        }
        if scores.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::Input("scores must lie in [0, 1]".into()));
        }
        Ok(Self { rows, cols, scores })
    }

    pub fn row_labels(&self) -> &[u16] {
        &self.rows
    }

    pub fn col_labels(&self) -> &[u16] {
        &self.cols
    }

    #[inline]
    pub fn score(&self, row: usize, col: usize) -> f64 {
        self.scores[row * self.cols.len() + col]
    }
}

/// Matched (reference, prediction) pairs plus unmatched leftovers.
/// `pairs` is sorted by reference label; `pairs.len()` equals
/// `min(#refs, #preds)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// (ref label, pred label, matrix score) per matched pair.
    pub pairs: Vec<(u16, u16, f64)>,
    pub unmatched_refs: Vec<u16>,
    pub unmatched_preds: Vec<u16>,
}

impl Assignment {
    /// Sum of matched pair scores, accumulated in ref-label order.
    pub fn total_score(&self) -> f64 {
        self.pairs.iter().map(|&(_, _, s)| s).sum()
    }
}

/// TP/FN/FP counts for one case at a fixed IoU threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionOutcome {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    /// The matched pairs that counted as TP, with their IoU.
    pub tp_pairs: Vec<(u16, u16, f64)>,
}

/// Maximum-total-score assignment of rows to cols.
///
/// Non-square matrices leave `|rows - cols|` labels unmatched. Among optimal
/// assignments, the lexicographically smallest (ref label, pred label) pair
/// sequence is returned.
pub fn hungarian_match(scores: &ScoreMatrix) -> Assignment {
    let n_rows = scores.row_labels().len();
    let n_cols = scores.col_labels().len();
    let mut active_rows: Vec<usize> = (0..n_rows).collect();
    let mut active_cols: Vec<usize> = (0..n_cols).collect();
    let mut needed = n_rows.min(n_cols);
    let mut pairs = Vec::with_capacity(needed);
    let mut dropped_rows = Vec::new();

    let mut target = solve_max_total(scores, &active_rows, &active_cols, needed);

    while needed > 0 {
        let mut chosen = None;
        // a row may lead only if enough rows remain above it
        'candidates: for (i, &row) in active_rows.iter().enumerate() {
            if active_rows.len() - i - 1 < needed - 1 {
                break;
            }
            for (j, &col) in active_cols.iter().enumerate() {
                let s = scores.score(row, col);
                let sub_rows = &active_rows[i + 1..];
                let sub_cols: Vec<usize> = active_cols
                    .iter()
                    .enumerate()
                    .filter(|&(jj, _)| jj != j)
                    .map(|(_, &c)| c)
                    .collect();
                let completion = solve_max_total(scores, sub_rows, &sub_cols, needed - 1);
                if s + completion >= target - TIE_EPS {
                    chosen = Some((i, j, s));
                    break 'candidates;
                }
            }
        }
        let (i, j, s) = chosen.expect("an optimal completion always exists");
        let row = active_rows[i];
        let col = active_cols[j];
        pairs.push((scores.row_labels()[row], scores.col_labels()[col], s));
        // rows below the chosen one can no longer be matched
        let skipped: Vec<usize> = active_rows.drain(..=i).collect();
        dropped_rows.extend(skipped[..i].iter().map(|&r| scores.row_labels()[r]));
        active_cols.remove(j);
        target -= s;
        needed -= 1;
    }

    let mut unmatched_refs = dropped_rows;
    unmatched_refs.extend(active_rows.iter().map(|&r| scores.row_labels()[r]));
    unmatched_refs.sort_unstable();
    let mut unmatched_preds: Vec<u16> = active_cols
        .iter()
        .map(|&c| scores.col_labels()[c])
        .collect();
    unmatched_preds.sort_unstable();
    Assignment {
        pairs,
        unmatched_refs,
        unmatched_preds,
    }
}

/// Optimal total score over `k` pairs drawn from the given row/col subsets.
fn solve_max_total(scores: &ScoreMatrix, rows: &[usize], cols: &[usize], k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    debug_assert_eq!(k, rows.len().min(cols.len()));
    // minimize negated scores; the solver wants rows <= cols
    let assignment = if rows.len() <= cols.len() {
        min_cost_assign(rows.len(), cols.len(), |r, c| {
            -scores.score(rows[r], cols[c])
        })
    } else {
        let transposed = min_cost_assign(cols.len(), rows.len(), |c, r| {
            -scores.score(rows[r], cols[c])
        });
        let mut by_row = vec![usize::MAX; rows.len()];
        for (c, r) in transposed.into_iter().enumerate() {
            by_row[r] = c;
        }
        by_row
    };
    let mut total = 0.0;
    for (r, &c) in assignment.iter().enumerate() {
        if c != usize::MAX {
            total += scores.score(rows[r], cols[c]);
        }
    }
    total
}

/// Classic O(n^2 m) shortest-augmenting-path solver for the rectangular
/// min-cost assignment problem with `n <= m`. Returns the column assigned
/// to each row.
fn min_cost_assign(n: usize, m: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    debug_assert!(n <= m);
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut matched_row = vec![0usize; m + 1]; // 1-based row per col, 0 = free
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut min_slack = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < min_slack[j] {
                    min_slack[j] = cur;
                    way[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        // augment along the alternating path
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut by_row = vec![usize::MAX; n];
    for j in 1..=m {
        if matched_row[j] != 0 {
            by_row[matched_row[j] - 1] = j - 1;
        }
    }
    by_row
}

/// Builds the pairwise score matrix over all instance pairs of two masks
/// and matches them optimally.
pub fn match_instances(
    reference: &LabelMask,
    prediction: &LabelMask,
    score: MatchScore,
) -> Result<Assignment> {
    let matrix = score_matrix(reference, prediction, score)?;
    Ok(hungarian_match(&matrix))
}

/// Pairwise instance scores between two masks, computed in one pass over
/// the shared pixel grid.
pub fn score_matrix(
    reference: &LabelMask,
    prediction: &LabelMask,
    score: MatchScore,
) -> Result<ScoreMatrix> {
    reference.check_same_shape(prediction)?;
    let mut ref_sizes: HashMap<u16, usize> = HashMap::new();
    let mut pred_sizes: HashMap<u16, usize> = HashMap::new();
    let mut overlaps: HashMap<(u16, u16), usize> = HashMap::new();
    for (&a, &b) in reference.labels().iter().zip(prediction.labels()) {
        if a != 0 {
            *ref_sizes.entry(a).or_default() += 1;
        }
        if b != 0 {
            *pred_sizes.entry(b).or_default() += 1;
        }
        if a != 0 && b != 0 {
            *overlaps.entry((a, b)).or_default() += 1;
        }
    }
    let mut rows: Vec<u16> = ref_sizes.keys().copied().collect();
    let mut cols: Vec<u16> = pred_sizes.keys().copied().collect();
    rows.sort_unstable();
    cols.sort_unstable();

    let mut scores = Vec::with_capacity(rows.len() * cols.len());
    for &r in &rows {
        for &c in &cols {
            let inter = overlaps.get(&(r, c)).copied().unwrap_or(0) as f64;
            let a = ref_sizes[&r] as f64;
            let b = pred_sizes[&c] as f64;
            let s = match score {
                MatchScore::Iou => inter / (a + b - inter),
                MatchScore::Dsc => 2.0 * inter / (a + b),
            };
            scores.push(s);
        }
    }
    ScoreMatrix::new(rows, cols, scores)
}

/// Applies the strict `IoU > xi` rule to a matching whose scores are IoUs.
///
/// A matched pair at or below the threshold dissolves into one FN and one
/// FP; unmatched references are FN, unmatched predictions FP.
pub fn classify_detections(assignment: &Assignment, xi: f64) -> DetectionOutcome {
    let mut tp_pairs = Vec::new();
    let mut false_negatives = assignment.unmatched_refs.len();
    let mut false_positives = assignment.unmatched_preds.len();
    for &(r, p, s) in &assignment.pairs {
        if s > xi {
            tp_pairs.push((r, p, s));
        } else {
            false_negatives += 1;
            false_positives += 1;
        }
    }
    DetectionOutcome {
        true_positives: tp_pairs.len(),
        false_positives,
        false_negatives,
        tp_pairs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn matrix(rows: usize, cols: usize, scores: Vec<f64>) -> ScoreMatrix {
        ScoreMatrix::new(
            (1..=rows as u16).collect(),
            (1..=cols as u16).collect(),
            scores,
        )
        .unwrap()
    }

    /// Brute-force optimal total over all size-k pair subsets.
    fn brute_force_max(scores: &ScoreMatrix) -> f64 {
        let n = scores.row_labels().len();
        let m = scores.col_labels().len();
        let k = n.min(m);
        let mut best = f64::NEG_INFINITY;
        let mut cols: Vec<usize> = (0..m).collect();
        // iterate over ordered selections of k cols for rows if n <= m,
        // otherwise k rows for cols, via permutations of the larger side
        fn permutations(items: &mut Vec<usize>, k: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if prefix.len() == k {
                out.push(prefix.clone());
                return;
            }
            for i in 0..items.len() {
                let v = items.remove(i);
                prefix.push(v);
                permutations(items, k, prefix, out);
                prefix.pop();
                items.insert(i, v);
            }
        }
        let mut out = Vec::new();
        if n <= m {
            permutations(&mut cols, k, &mut Vec::new(), &mut out);
            for sel in &out {
                let total: f64 = sel.iter().enumerate().map(|(r, &c)| scores.score(r, c)).sum();
                best = best.max(total);
            }
        } else {
            let mut rows_idx: Vec<usize> = (0..n).collect();
            permutations(&mut rows_idx, k, &mut Vec::new(), &mut out);
            for sel in &out {
                let mut picks: Vec<(usize, usize)> =
                    sel.iter().enumerate().map(|(c, &r)| (r, c)).collect();
                picks.sort_unstable();
                let total: f64 = picks.iter().map(|&(r, c)| scores.score(r, c)).sum();
                best = best.max(total);
            }
        }
        best
    }

    #[test]
    fn single_entry_matrix() {
        let a = hungarian_match(&matrix(1, 1, vec![0.7]));
        assert_eq!(a.pairs, vec![(1, 1, 0.7)]);
        assert!(a.unmatched_refs.is_empty());
        assert!(a.unmatched_preds.is_empty());
    }

    #[test]
    fn two_by_two_prefers_diagonal() {
        // brute force over both permutations: 0.9+0.8 > 0.1+0.2
        let a = hungarian_match(&matrix(2, 2, vec![0.9, 0.1, 0.2, 0.8]));
        assert_eq!(a.pairs, vec![(1, 1, 0.9), (2, 2, 0.8)]);
        assert!((a.total_score() - 1.7).abs() < 1e-15);
    }

    #[test]
    fn random_matrices_match_permutation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..200 {
            let n = rng.gen_range(1..=6);
            let m = rng.gen_range(1..=6);
            let scores: Vec<f64> = (0..n * m).map(|_| rng.gen::<f64>()).collect();
            let mat = matrix(n, m, scores);
            let got = hungarian_match(&mat).total_score();
            let want = brute_force_max(&mat);
            assert_eq!(got, want, "trial {trial} ({n}x{m})");
        }
    }

    #[test]
    fn empty_matrix_yields_empty_assignment() {
        let mat = ScoreMatrix::new(vec![], vec![1, 2], vec![]).unwrap();
        let a = hungarian_match(&mat);
        assert!(a.pairs.is_empty());
        assert_eq!(a.unmatched_preds, vec![1, 2]);
    }

    #[test]
    fn ties_break_lexicographically() {
        // every assignment totals 1.0; lexicographic minimum is the diagonal
        let a = hungarian_match(&matrix(2, 2, vec![0.5, 0.5, 0.5, 0.5]));
        assert_eq!(a.pairs, vec![(1, 1, 0.5), (2, 2, 0.5)]);

        // anti-diagonal is uniquely optimal; lex order cannot override it
        let a = hungarian_match(&matrix(2, 2, vec![0.0, 1.0, 1.0, 0.0]));
        assert_eq!(a.pairs, vec![(1, 2, 1.0), (2, 1, 1.0)]);

        // more refs than preds, all scores tied: smallest ref label wins
        let mat = ScoreMatrix::new(vec![1, 2, 3], vec![9], vec![0.5, 0.5, 0.5]).unwrap();
        let a = hungarian_match(&mat);
        assert_eq!(a.pairs, vec![(1, 9, 0.5)]);
        assert_eq!(a.unmatched_refs, vec![2, 3]);
    }

    #[test]
    fn optimal_match_may_skip_low_reference_labels() {
        // matching ref 1 would cost 0.8: the optimum skips it
        let mat = ScoreMatrix::new(vec![1, 2], vec![9], vec![0.1, 0.9]).unwrap();
        let a = hungarian_match(&mat);
        assert_eq!(a.pairs, vec![(2, 9, 0.9)]);
        assert_eq!(a.unmatched_refs, vec![1]);

        // among tied skip choices the smallest matched ref wins
        let mat = ScoreMatrix::new(vec![1, 2, 3], vec![9], vec![0.2, 0.9, 0.9]).unwrap();
        let a = hungarian_match(&mat);
        assert_eq!(a.pairs, vec![(2, 9, 0.9)]);
        assert_eq!(a.unmatched_refs, vec![1, 3]);
    }

    #[test]
    fn lexicographic_sequence_with_surplus_references() {
        // all totals tie; the lex-min pair sequence keeps the two lowest
        // refs and pairs them with ascending preds
        let mat = ScoreMatrix::new(vec![1, 2, 3], vec![7, 8], vec![0.5; 6]).unwrap();
        let a = hungarian_match(&mat);
        assert_eq!(a.pairs, vec![(1, 7, 0.5), (2, 8, 0.5)]);
        assert_eq!(a.unmatched_refs, vec![3]);
    }

    #[test]
    fn label_permutation_permutes_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let n = rng.gen_range(1..=5);
            let m = rng.gen_range(1..=5);
            let scores: Vec<f64> = (0..n * m).map(|_| rng.gen::<f64>()).collect();
            let base = matrix(n, m, scores.clone());
            let a = hungarian_match(&base);

            // relabel rows as 11.., reversing order, and permute score rows to match
            let new_labels: Vec<u16> = (0..n as u16).map(|i| 11 + i).collect();
            let mut permuted = vec![0.0; n * m];
            for r in 0..n {
                let src = n - 1 - r; // old row that now carries label 11 + r
                for c in 0..m {
                    permuted[r * m + c] = scores[src * m + c];
                }
            }
            let relabeled = ScoreMatrix::new(
                new_labels,
                (1..=m as u16).collect(),
                permuted,
            )
            .unwrap();
            let b = hungarian_match(&relabeled);
            // same pairs and scores modulo the relabeling
            // old row i -> label 11 + (n-1-i)
            let mut mapped: Vec<(u16, u16, f64)> = a
                .pairs
                .iter()
                .map(|&(r, p, s)| (11 + (n as u16 - r), p, s))
                .collect();
            mapped.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let got: Vec<(u16, u16, f64)> = b.pairs.clone();
            assert_eq!(got, mapped);
        }
    }

    fn mask_of(width: u32, height: u32, pixels: &[(u32, u32, u16)]) -> LabelMask {
        let mut labels = vec![0u16; (width * height) as usize];
        for &(r, c, v) in pixels {
            labels[(r * width + c) as usize] = v;
        }
        LabelMask::new(width, height, labels).unwrap()
    }

    #[test]
    fn single_instance_pair_matches_regardless_of_score() {
        let r = mask_of(4, 4, &[(0, 0, 3), (0, 1, 3)]);
        let p = mask_of(4, 4, &[(3, 3, 8)]);
        for score in [MatchScore::Iou, MatchScore::Dsc] {
            let a = match_instances(&r, &p, score).unwrap();
            assert_eq!(a.pairs.len(), 1);
            assert_eq!((a.pairs[0].0, a.pairs[0].1), (3, 8));
            assert_eq!(a.pairs[0].2, 0.0);
        }
    }

    #[test]
    fn crossed_labels_maximize_total_iou() {
        // pred 2 sits on ref 1, pred 1 on ref 2
        let r = mask_of(4, 2, &[(0, 0, 1), (0, 1, 1), (1, 0, 2), (1, 1, 2)]);
        let p = mask_of(4, 2, &[(0, 0, 2), (0, 1, 2), (1, 0, 1), (1, 1, 1)]);
        let a = match_instances(&r, &p, MatchScore::Iou).unwrap();
        let pairs: Vec<(u16, u16)> = a.pairs.iter().map(|&(x, y, _)| (x, y)).collect();
        assert_eq!(pairs, vec![(1, 2), (2, 1)]);
        assert_eq!(a.total_score(), 2.0);
    }

    #[test]
    fn surplus_references_stay_unmatched() {
        let r = mask_of(6, 1, &[(0, 0, 1), (0, 2, 2), (0, 4, 3)]);
        let p = mask_of(6, 1, &[(0, 0, 5)]);
        let a = match_instances(&r, &p, MatchScore::Dsc).unwrap();
        assert_eq!(a.pairs.len(), 1);
        assert_eq!(a.unmatched_refs.len(), 2);
        assert!(a.unmatched_preds.is_empty());
    }

    #[test]
    fn detection_rule_follows_strict_threshold() {
        let below = Assignment {
            pairs: vec![(1, 1, 0.25)],
            unmatched_refs: vec![],
            unmatched_preds: vec![],
        };
        let out = classify_detections(&below, 0.3);
        assert_eq!(
            (out.true_positives, out.false_negatives, out.false_positives),
            (0, 1, 1)
        );

        let at_threshold = Assignment {
            pairs: vec![(1, 1, 0.3)],
            unmatched_refs: vec![],
            unmatched_preds: vec![],
        };
        let out = classify_detections(&at_threshold, 0.3);
        assert_eq!(out.true_positives, 0, "IoU exactly at xi is not a TP");

        let extra_pred = Assignment {
            pairs: vec![(1, 1, 1.0), (2, 2, 1.0)],
            unmatched_refs: vec![],
            unmatched_preds: vec![3],
        };
        let out = classify_detections(&extra_pred, 0.3);
        assert_eq!(
            (out.true_positives, out.false_negatives, out.false_positives),
            (2, 0, 1)
        );
    }

    #[test]
    fn detection_counts_are_conserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..200 {
            let n = rng.gen_range(0..5);
            let m = rng.gen_range(0..5);
            let scores: Vec<f64> = (0..n * m).map(|_| rng.gen::<f64>()).collect();
            let mat = ScoreMatrix::new(
                (1..=n as u16).collect(),
                (1..=m as u16).collect(),
                scores,
            )
            .unwrap();
            let a = hungarian_match(&mat);
            let out = classify_detections(&a, 0.3);
            assert_eq!(out.true_positives + out.false_negatives, n);
            assert_eq!(out.true_positives + out.false_positives, m);
        }
    }

    #[test]
    fn zero_overlap_pairs_classify_like_low_iou() {
        let r = mask_of(4, 1, &[(0, 0, 1)]);
        let p = mask_of(4, 1, &[(0, 3, 1)]);
        let a = match_instances(&r, &p, MatchScore::Iou).unwrap();
        assert_eq!(a.pairs.len(), 1);
        let out = classify_detections(&a, 0.3);
        assert_eq!(
            (out.true_positives, out.false_negatives, out.false_positives),
            (0, 1, 1)
        );
    }
}
