//! Aggregation of run manifests into one pass/fail summary.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::run::{Manifest, RunStatus, MANIFEST};
use crate::error::{Error, Result};

pub const SUMMARY: &str = "summary.json";

/// Criteria in the order they are reported.
pub const CRITERIA: [&str; 5] = ["max_principle", "rh_traces", "admissibility", "contraction", "residual"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Absent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    /// Directory relative to the bundle root; `.` for the root itself.
    pub path: String,
    pub subcommand: String,
    pub status: RunStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: Vec<RunEntry>,
    pub criteria: BTreeMap<String, Status>,
    /// Runs that stopped on a numerical failure.
    pub numerical_failures: usize,
    pub pass: bool,
}

fn read_manifest(path: &Path) -> Result<Option<Manifest>> {
    if !path.is_file() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| Error::argument(format!("unreadable manifest {}: {e}", path.display())))
}

/// Reads `manifest.json` in `dir` and in each immediate subdirectory.
/// Criteria no run checked are `absent`; one failing run makes a criterion fail.
pub fn report_bundle(dir: &Path) -> Result<Summary> {
    if !dir.is_dir() {
        return Err(Error::config("--output-dir", format!("{} is not a directory", dir.display())));
    }
    let mut found: Vec<(String, Manifest)> = Vec::new();
    if let Some(m) = read_manifest(&dir.join(MANIFEST))? {
        found.push((".".into(), m));
    }
    let mut subdirs: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    for sub in subdirs {
        if let Some(m) = read_manifest(&sub.join(MANIFEST))? {
            let name = sub.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            found.push((name, m));
        }
    }

    let mut criteria: BTreeMap<String, Status> = CRITERIA.iter().map(|c| (c.to_string(), Status::Absent)).collect();
    for (_, m) in &found {
        let v = &m.verdicts;
        for (name, flag) in [
            ("max_principle", v.max_principle),
            ("rh_traces", v.rh_traces),
            ("admissibility", v.admissibility),
            ("contraction", v.contraction),
            ("residual", v.residual),
        ] {
            if let Some(ok) = flag {
                let slot = criteria.get_mut(name).expect("known criterion");
                *slot = match (*slot, ok) {
                    (Status::Fail, _) | (_, false) => Status::Fail,
                    _ => Status::Pass,
                };
            }
        }
    }
    let numerical_failures = found.iter().filter(|(_, m)| m.status == RunStatus::NumericalFailure).count();
    let pass = numerical_failures == 0 && criteria.values().all(|s| *s != Status::Fail);
    Ok(Summary {
        runs: found
            .into_iter()
            .map(|(path, m)| RunEntry {
                path,
                subcommand: m.subcommand,
                status: m.status,
            })
            .collect(),
        criteria,
        numerical_failures,
        pass,
    })
}
