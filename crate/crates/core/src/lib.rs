//! Evaluation and ranking toolkit for instrument segmentation and detection
//! benchmarks.
//!
//! The crate covers the full evaluation pipeline of a segmentation
//! challenge:
//!
//! * [`mask`] — label masks, instance views, boundary extraction and the
//!   accepted mask file formats;
//! * [`metrics`] — DSC, IoU and the normalized surface dice with a pixel
//!   tolerance, backed by the exact distance fields in [`distance`];
//! * [`matching`] — Hungarian instance matching and the strict
//!   `IoU > xi` TP/FN/FP rule;
//! * [`instance_metrics`] — multi-instance DSC/NSD and detection average
//!   precision;
//! * [`ranking`] — accuracy (pairwise significance) and robustness
//!   (percentile) leaderboards with competition tie semantics;
//! * [`stats`] — the one-sided Wilcoxon signed-rank test, bootstrap rank
//!   stability and per-case rank frequencies;
//! * [`report`] — stratified summaries, worst-case mining, cross-stage
//!   comparison and inter-rater tolerance derivation;
//! * [`export`] — CSV/JSON leaderboard and bootstrap exports with full
//!   configuration provenance.
//!
//! All computations are deterministic: rankings break ties canonically,
//! and bootstrap resampling derives every replicate from the seed and the
//! replicate index alone.

pub mod distance;
pub mod error;
pub mod export;
pub mod instance_metrics;
pub mod mask;
pub mod matching;
pub mod metrics;
pub mod ranking;
pub mod report;
pub mod stats;

pub use distance::{distance_field, DistanceField};
pub use error::{Error, Result};
pub use export::Provenance;
pub use instance_metrics::{
    average_precision, case_detection_outcome, mi_dsc, mi_metric, mi_nsd, DetectionRecord,
    PRCurve, PairMetric,
};
pub use mask::{encode_mask, load_mask, CaseRecord, InstanceView, LabelMask, MaskFormat, Pixel};
pub use matching::{
    classify_detections, hungarian_match, match_instances, score_matrix, Assignment,
    DetectionOutcome, MatchScore, ScoreMatrix,
};
pub use metrics::{dsc, iou, nsd, MetricConfig};
pub use ranking::{
    competition_ranks, detection_rank, impute_missing, robustness_rank, significance_rank,
    LeaderboardEntry, MetricTable, RankingConfig,
};
pub use report::{
    derive_tau, stage_comparison, stratify_by_instrument_count, worst_cases, worst_cases_by,
    CaseAggregate, InstrumentBucket, StageSummary, StratifiedStats, WorstCaseRow,
    WorstCasesReport,
};
pub use stats::{
    bootstrap_rankings, interpolated_quantile, per_case_rank_frequencies, wilcoxon_one_sided,
    BootstrapSummary, Ranker, TestResult,
};
