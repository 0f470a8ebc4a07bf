//! Leaderboard and bootstrap exports: CSV for diffing, JSON with the full
//! configuration for provenance.

use serde::Serialize;

use crate::ranking::LeaderboardEntry;
use crate::stats::{BootstrapSummary, Ranker};

/// Configuration snapshot embedded in every export.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tau: f64,
    pub xi: f64,
    pub alpha: f64,
    pub percentile: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for Provenance {
    fn default() -> Self {
        Self {
            tau: 13.0,
            xi: 0.3,
            alpha: 0.05,
            percentile: 0.05,
            b: None,
            seed: None,
        }
    }
}

#[derive(Serialize)]
struct LeaderboardDoc<'a> {
    mode: &'a str,
    metric: &'a str,
    config: &'a Provenance,
    entries: &'a [LeaderboardEntry],
}

#[derive(Serialize)]
struct BootstrapDoc<'a> {
    ranker: Ranker,
    metric: &'a str,
    config: &'a Provenance,
    summary: &'a BootstrapSummary,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `team,aggregate,rank` with aggregates fixed to `decimals` places.
pub fn leaderboard_csv(entries: &[LeaderboardEntry], decimals: usize) -> String {
    let mut out = String::from("team,aggregate,rank\n");
    for e in entries {
        out.push_str(&format!(
            "{},{:.*},{}\n",
            csv_field(&e.team),
            decimals,
            e.aggregate,
            e.rank
        ));
    }
    out
}

/// JSON leaderboard document embedding the run configuration.
pub fn leaderboard_json(
    mode: &str,
    metric: &str,
    config: &Provenance,
    entries: &[LeaderboardEntry],
) -> String {
    let doc = LeaderboardDoc {
        mode,
        metric,
        config,
        entries,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable document");
    s.push('\n');
    s
}

/// `algorithm,rank,frequency` rows for every (algorithm, rank) cell —
/// the data behind rank heatmaps and blob plots.
pub fn bootstrap_csv(summary: &BootstrapSummary) -> String {
    let mut out = String::from("algorithm,rank,frequency\n");
    for (a, name) in summary.algorithms.iter().enumerate() {
        for (r, &count) in summary.rank_frequency[a].iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", csv_field(name), r + 1, count));
        }
    }
    out
}

/// JSON bootstrap document with the (b, seed, ranker, config) header.
pub fn bootstrap_json(
    ranker: Ranker,
    metric: &str,
    config: &Provenance,
    summary: &BootstrapSummary,
) -> String {
    let doc = BootstrapDoc {
        ranker,
        metric,
        config,
        summary,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable document");
    s.push('\n');
    s
}
