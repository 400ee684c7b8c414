//! Run manifests, numerical gates and manifest comparison.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{LabError, LabResult};
use crate::table::Table;

pub const MANIFEST_FILE: &str = "manifest.json";

/// One pass/fail check on a measured value. Gates with `required = false`
/// are diagnostics and never change the exit code.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub name: String,
    pub description: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
    pub required: bool,
}

impl Gate {
    pub fn at_most(name: impl Into<String>, description: impl Into<String>, value: f64, threshold: f64) -> Self {
        Gate::new(name, description, value, threshold, value <= threshold)
    }

    pub fn at_least(name: impl Into<String>, description: impl Into<String>, value: f64, threshold: f64) -> Self {
        Gate::new(name, description, value, threshold, value >= threshold)
    }

    /// Strict `value > threshold`.
    pub fn above(name: impl Into<String>, description: impl Into<String>, value: f64, threshold: f64) -> Self {
        Gate::new(name, description, value, threshold, value > threshold)
    }

    pub fn holds(name: impl Into<String>, description: impl Into<String>, ok: bool) -> Self {
        Gate::new(name, description, if ok { 1.0 } else { 0.0 }, 1.0, ok)
    }

    fn new(name: impl Into<String>, description: impl Into<String>, value: f64, threshold: f64, passed: bool) -> Self {
        Gate { name: name.into(), description: description.into(), value, threshold, passed, required: true }
    }

    pub fn diagnostic(mut self) -> Self {
        self.required = false;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
    pub rows: usize,
    pub columns: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub label: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfConvergence {
    pub tolerance: f64,
    pub directory: String,
    /// Largest relative change per `file:column` among rows whose value is at
    /// least the amplitude floor.
    pub max_relative_change: BTreeMap<String, f64>,
    pub limit: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub experiment: String,
    pub code_version: String,
    pub config: ExperimentConfig,
    pub outputs: Vec<OutputFile>,
    pub gates: Vec<Gate>,
    pub self_convergence: Option<SelfConvergence>,
    pub timings: Vec<Timing>,
    pub total_seconds: f64,
    pub warnings: Vec<String>,
    pub passed: bool,
}

impl RunManifest {
    pub fn load(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path).map_err(LabError::io(path))?;
        serde_json::from_str(&text).map_err(|source| LabError::Json { path: path.to_path_buf(), source })
    }

    pub fn gate(&self, name: &str) -> Option<&Gate> {
        self.gates.iter().find(|g| g.name == name)
    }

    pub fn failed_gates(&self) -> Vec<&Gate> {
        self.gates.iter().filter(|g| g.required && !g.passed).collect()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub(crate) fn write_table(dir: &Path, table: &Table) -> LabResult<OutputFile> {
    let csv = table.to_csv();
    let path = dir.join(&table.name);
    std::fs::write(&path, csv.as_bytes()).map_err(LabError::io(&path))?;
    Ok(OutputFile {
        file: table.name.clone(),
        sha256: sha256_hex(csv.as_bytes()),
        rows: table.rows.len(),
        columns: table.columns.clone(),
    })
}

pub(crate) fn read_table(dir: &Path, file: &str) -> LabResult<Table> {
    let path = dir.join(file);
    let text = std::fs::read_to_string(&path).map_err(LabError::io(&path))?;
    Table::parse(file, &text)
}

/// `|a − b| / max(|a|, |b|)`, zero when both vanish. NaN only if an entry is NaN.
pub fn relative_difference(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnDiff {
    pub file: String,
    pub column: String,
    pub max_relative_difference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub experiment: String,
    pub left: PathBuf,
    pub right: PathBuf,
    pub columns: Vec<ColumnDiff>,
    pub max_relative_difference: f64,
}

fn mismatch(field: &str, left: impl ToString, right: impl ToString) -> LabError {
    LabError::SchemaMismatch { field: field.into(), left: left.to_string(), right: right.to_string() }
}

/// Column-wise relative differences between the outputs of two runs of the
/// same experiment on the same family.
pub fn compare(left: &Path, right: &Path) -> LabResult<CompareReport> {
    let (a, b) = (RunManifest::load(left)?, RunManifest::load(right)?);
    if a.experiment != b.experiment {
        return Err(mismatch("experiment", &a.experiment, &b.experiment));
    }
    if a.config.family != b.config.family {
        let show = |m: &RunManifest| format!("{}(delta={})", m.config.family.name, m.config.family.delta);
        return Err(mismatch("family", show(&a), show(&b)));
    }
    let files = |m: &RunManifest| m.outputs.iter().map(|o| o.file.clone()).collect::<Vec<_>>();
    if files(&a) != files(&b) {
        return Err(mismatch("outputs", files(&a).join(" "), files(&b).join(" ")));
    }
    let dir = |p: &Path| p.parent().map(Path::to_path_buf).unwrap_or_default();
    let (da, db) = (dir(left), dir(right));
    let mut columns = Vec::new();
    for out in &a.outputs {
        let (ta, tb) = (read_table(&da, &out.file)?, read_table(&db, &out.file)?);
        if ta.columns != tb.columns {
            return Err(mismatch(&format!("columns of {}", out.file), ta.columns.join(","), tb.columns.join(",")));
        }
        if ta.rows.len() != tb.rows.len() {
            return Err(mismatch(&format!("rows of {}", out.file), ta.rows.len(), tb.rows.len()));
        }
        for (j, name) in ta.columns.iter().enumerate() {
            let d = ta
                .rows
                .iter()
                .zip(&tb.rows)
                .map(|(ra, rb)| relative_difference(ra[j], rb[j]))
                .fold(0.0, |m: f64, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) });
            columns.push(ColumnDiff { file: out.file.clone(), column: name.clone(), max_relative_difference: d });
        }
    }
    let max = columns.iter().map(|c| c.max_relative_difference).fold(0.0, f64::max);
    Ok(CompareReport {
        experiment: a.experiment,
        left: left.to_path_buf(),
        right: right.to_path_buf(),
        columns,
        max_relative_difference: max,
    })
}
