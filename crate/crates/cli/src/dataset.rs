//! Dataset layout: `<root>/references/<stage>/<case>.<ext>` for references
//! and `<root>/<team>/<stage>/<case>.<ext>` for predictions, with stages
//! named `1`, `2`, `3`. Masks are PNG (`.png`) or plain grid text (`.txt`).

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use segbench::{load_mask, CaseRecord, LabelMask, MaskFormat};

pub const REFERENCES_DIR: &str = "references";

/// Loads a mask file, choosing the format from the extension.
pub fn load_mask_file(path: &Path) -> Result<LabelMask> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some("txt") => MaskFormat::PlainGridText,
        _ => MaskFormat::GrayscaleImage,
    };
    load_mask(&bytes, format).with_context(|| format!("cannot decode {}", path.display()))
}

fn is_mask_file(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("png") | Some("txt")
    )
}

/// Case ids and paths in one stage directory, sorted by case id.
pub fn list_stage_cases(stage_dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut cases = Vec::new();
    let entries = fs::read_dir(stage_dir)
        .with_context(|| format!("cannot list {}", stage_dir.display()))?;
    for entry in entries {
        let path = entry?.path();
        if path.is_file() && is_mask_file(&path) {
            let case_id = path
                .file_stem()
                .and_then(|s| s.to_str())
                .context("non-UTF-8 file name")?
                .to_string();
            cases.push((case_id, path));
        }
    }
    cases.sort();
    Ok(cases)
}

/// Team directories under the dataset root (everything but `references`),
/// sorted.
pub fn discover_teams(root: &Path) -> Result<Vec<String>> {
    let mut teams = Vec::new();
    let entries =
        fs::read_dir(root).with_context(|| format!("cannot list {}", root.display()))?;
    for entry in entries {
        let entry = entry?;
        if entry.path().is_dir() {
            let name = entry.file_name().to_string_lossy().to_string();
            if name != REFERENCES_DIR {
                teams.push(name);
            }
        }
    }
    teams.sort();
    Ok(teams)
}

/// Stage directories under `<root>/references`, ascending.
pub fn discover_stages(root: &Path) -> Result<Vec<u8>> {
    let refs = root.join(REFERENCES_DIR);
    let mut stages = Vec::new();
    let entries =
        fs::read_dir(&refs).with_context(|| format!("cannot list {}", refs.display()))?;
    for entry in entries {
        let entry = entry?;
        if entry.path().is_dir() {
            if let Ok(stage) = entry.file_name().to_string_lossy().parse::<u8>() {
                if (1..=3).contains(&stage) {
                    stages.push(stage);
                }
            }
        }
    }
    stages.sort_unstable();
    if stages.is_empty() {
        anyhow::bail!("no stage directories under {}", refs.display());
    }
    Ok(stages)
}

/// Reads the cases metadata CSV: `case_id,stage,surgery_type,instrument_count`.
pub fn read_cases_csv(path: &Path) -> Result<Vec<CaseRecord>> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let mut records = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != 4 {
            anyhow::bail!("row {} has {} fields, expected 4", i + 2, record.len());
        }
        records.push(CaseRecord {
            case_id: record[0].to_string(),
            stage: record[1]
                .parse()
                .with_context(|| format!("bad stage in row {}", i + 2))?,
            surgery_type: record[2].to_string(),
            team: String::new(),
            instrument_count: record[3]
                .parse()
                .with_context(|| format!("bad instrument_count in row {}", i + 2))?,
        });
    }
    Ok(records)
}
