//! Run settings: defaults, overridden by a `key = value` config file,
//! overridden in turn by command-line flags.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

/// Numeric and mode settings shared across subcommands.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub tau: f64,
    pub xi: f64,
    pub alpha: f64,
    pub percentile: f64,
    pub b: usize,
    pub seed: u64,
    pub jobs: usize,
    pub task: Option<String>,
    pub mode: Option<String>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            tau: 13.0,
            xi: 0.3,
            alpha: 0.05,
            percentile: 0.05,
            b: 1000,
            seed: 0,
            jobs: 1,
            task: None,
            mode: None,
        }
    }
}

impl Settings {
    /// Loads defaults, then the config file if given.
    pub fn load(config_path: Option<&Path>) -> Result<Self> {
        let mut settings = Self::default();
        if let Some(path) = config_path {
            let pairs = parse_config_file(path)?;
            settings.apply(&pairs)?;
        }
        Ok(settings)
    }

    fn apply(&mut self, pairs: &HashMap<String, String>) -> Result<()> {
        for (key, value) in pairs {
            match key.as_str() {
                "tau" => self.tau = parse_num(key, value)?,
                "xi" => self.xi = parse_num(key, value)?,
                "alpha" => self.alpha = parse_num(key, value)?,
                "percentile" => self.percentile = parse_num(key, value)?,
                "b" => self.b = parse_num(key, value)?,
                "seed" => self.seed = parse_num(key, value)?,
                "jobs" => self.jobs = parse_num(key, value)?,
                "task" => self.task = Some(value.clone()),
                "mode" => self.mode = Some(value.clone()),
                other => anyhow::bail!("unknown config key {other:?}"),
            }
        }
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| anyhow::anyhow!("config key {key} has invalid value {value:?}"))
}

/// `key = value` lines; `#` starts a comment; blank lines ignored.
fn parse_config_file(path: &Path) -> Result<HashMap<String, String>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut pairs = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("line {} is not `key = value`", lineno + 1))?;
        pairs.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(pairs)
}
