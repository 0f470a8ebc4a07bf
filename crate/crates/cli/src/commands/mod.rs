pub mod bootstrap;
pub mod evaluate;
pub mod match_case;
pub mod rank;
pub mod report;
pub mod tau;

use std::path::Path;

use crate::config::Settings;
use crate::{usage, Failure};

/// Applies flag overrides on top of config-file settings.
pub struct Overrides {
    pub tau: Option<f64>,
    pub xi: Option<f64>,
    pub alpha: Option<f64>,
    pub percentile: Option<f64>,
    pub b: Option<usize>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub task: Option<String>,
    pub mode: Option<String>,
}

impl Overrides {
    pub fn none() -> Self {
        Self {
            tau: None,
            xi: None,
            alpha: None,
            percentile: None,
            b: None,
            seed: None,
            jobs: None,
            task: None,
            mode: None,
        }
    }
}

pub fn resolve_settings(
    config: Option<&Path>,
    overrides: Overrides,
) -> std::result::Result<Settings, Failure> {
    let mut settings = Settings::load(config).map_err(usage)?;
    if let Some(v) = overrides.tau {
        settings.tau = v;
    }
    if let Some(v) = overrides.xi {
        settings.xi = v;
    }
    if let Some(v) = overrides.alpha {
        settings.alpha = v;
    }
    if let Some(v) = overrides.percentile {
        settings.percentile = v;
    }
    if let Some(v) = overrides.b {
        settings.b = v;
    }
    if let Some(v) = overrides.seed {
        settings.seed = v;
    }
    if let Some(v) = overrides.jobs {
        settings.jobs = v;
    }
    if overrides.task.is_some() {
        settings.task = overrides.task;
    }
    if overrides.mode.is_some() {
        settings.mode = overrides.mode;
    }
    segbench::MetricConfig::new(settings.tau, settings.xi).map_err(usage)?;
    segbench::RankingConfig {
        alpha: settings.alpha,
        percentile: settings.percentile,
    }
    .validate()
    .map_err(usage)?;
    if settings.jobs == 0 {
        return Err(usage(anyhow::anyhow!("jobs must be at least 1")));
    }
    Ok(settings)
}

pub fn provenance(settings: &Settings, with_bootstrap: bool) -> segbench::Provenance {
    segbench::Provenance {
        tau: settings.tau,
        xi: settings.xi,
        alpha: settings.alpha,
        percentile: settings.percentile,
        b: with_bootstrap.then_some(settings.b),
        seed: with_bootstrap.then_some(settings.seed),
    }
}
