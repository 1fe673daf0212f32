use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clangevin::samplers::{cause_breakdown, samples_from_csv, AcceptanceStats, ChainSummary};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn artifact_version() -> String {
    format!("clangevin {}", env!("CARGO_PKG_VERSION"))
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension(format!(
        "{}.partial",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

pub fn read_samples(path: &Path) -> Result<(Vec<String>, Vec<DVector<f64>>), CliError> {
    samples_from_csv(&read_text(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub type SampleSet = (Vec<String>, Vec<Vec<DVector<f64>>>);

/// Reads several sample files that must share one header.
pub fn read_sample_set(paths: &[PathBuf]) -> Result<SampleSet, CliError> {
    let mut columns: Option<Vec<String>> = None;
    let mut chains = Vec::new();
    for p in paths {
        let (cols, rows) = read_samples(p)?;
        match &columns {
            Some(c) if *c != cols => {
                return Err(CliError::Config(format!("{} has different columns from the first file", p.display())))
            }
            None => columns = Some(cols),
            _ => {}
        }
        chains.push(rows);
    }
    let columns = columns.ok_or_else(|| CliError::Config("no sample files given".into()))?;
    Ok((columns, chains))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub steps: usize,
    pub accepted: usize,
    pub acceptance_rate: f64,
}

/// Record of one run, sufficient to reproduce its files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub command: String,
    pub mode: String,
    pub config_checksum: String,
    pub seed: u64,
    pub species: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_mesh: Option<usize>,
    pub stride: usize,
    pub totals: Totals,
    pub rejections: BTreeMap<String, usize>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub chains: Vec<ChainSummary>,
    pub files: Vec<String>,
    /// Free-form provenance of the starting point.
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub start: BTreeMap<String, serde_json::Value>,
    pub config: serde_json::Value,
}

impl Manifest {
    pub fn totals_from(stats: &AcceptanceStats) -> (Totals, BTreeMap<String, usize>) {
        (
            Totals { steps: stats.steps, accepted: stats.accepted, acceptance_rate: stats.rate() },
            cause_breakdown(stats),
        )
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(MANIFEST_NAME);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_atomic(&path, &(text + "\n"))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        serde_json::from_str(&read_text(path)?)
            .map_err(|e| CliError::Config(format!("malformed manifest {}: {e}", path.display())))
    }
}
