//! Configurable experiment runner: JSON configs in, CSV tables plus a
//! `manifest.json` with digests, gates and timings out.

pub mod config;
pub mod error;
pub mod experiments;
pub mod manifest;
pub mod table;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{LabError, LabResult, GATE_FAILURE};
pub use manifest::{compare, CompareReport, Gate, RunManifest, MANIFEST_FILE};

use experiments::{execute, Outcome};
use manifest::{read_table, relative_difference, write_table, SelfConvergence};

/// Subdirectory holding the tolerance-halved rerun.
pub const SELF_CHECK_DIR: &str = "self_check";
/// Largest relative amplitude change allowed when the tolerance is halved.
pub const SELF_CHECK_LIMIT: f64 = 0.1;
/// Entries smaller than this are left out of the self-convergence comparison.
const COMPARISON_FLOOR: f64 = 1e-12;

/// Output directory: explicit flag, then the config, then `out/<experiment>`.
pub fn resolve_output_dir(cfg: &ExperimentConfig, flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(cfg.experiment.name()))
}

fn write_run(cfg: &ExperimentConfig, dir: &Path, outcome: &Outcome, start: Instant) -> LabResult<RunManifest> {
    std::fs::create_dir_all(dir).map_err(error::LabError::io(dir))?;
    let outputs = outcome.tables.iter().map(|t| write_table(dir, t)).collect::<LabResult<Vec<_>>>()?;
    Ok(RunManifest {
        schema_version: config::SCHEMA_VERSION,
        experiment: cfg.experiment.name().to_string(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        outputs,
        passed: outcome.gates.iter().all(|g| g.passed || !g.required),
        gates: outcome.gates.clone(),
        self_convergence: None,
        timings: outcome.timings.clone(),
        total_seconds: start.elapsed().as_secs_f64(),
        warnings: outcome.warnings.clone(),
    })
}

fn save(dir: &Path, m: &RunManifest) -> LabResult<()> {
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(m).map_err(|source| LabError::Json { path: path.clone(), source })?;
    std::fs::write(&path, text + "\n").map_err(LabError::io(&path))
}

/// Largest relative change per `file:column` between two runs.
fn amplitude_changes(columns: &[(String, String)], left: &Path, right: &Path) -> LabResult<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (file, column) in columns {
        let (a, b) = (read_table(left, file)?, read_table(right, file)?);
        let missing = || LabError::Table { name: file.clone(), reason: format!("no column {column}") };
        let (ca, cb) = (a.column(column).ok_or_else(missing)?, b.column(column).ok_or_else(missing)?);
        let change = ca
            .iter()
            .zip(&cb)
            .filter(|(x, y)| x.abs() >= COMPARISON_FLOOR && y.abs() >= COMPARISON_FLOOR)
            .map(|(x, y)| relative_difference(*x, *y))
            .fold(0.0, f64::max);
        out.insert(format!("{file}:{column}"), change);
    }
    Ok(out)
}

/// Runs one experiment into `dir` and writes its manifest. With `self_check`
/// the experiment is repeated at half the tolerance in `dir/self_check` and
/// the amplitude columns of both runs are compared.
pub fn run(cfg: &ExperimentConfig, dir: &Path, self_check: bool) -> LabResult<RunManifest> {
    let start = Instant::now();
    let outcome = execute(cfg)?;
    let mut manifest = write_run(cfg, dir, &outcome, start)?;
    if self_check {
        let half = cfg.with_tolerance(cfg.tolerance / 2.0);
        let sub = dir.join(SELF_CHECK_DIR);
        let t = Instant::now();
        let rerun = execute(&half)?;
        let sub_manifest = write_run(&half, &sub, &rerun, t)?;
        save(&sub, &sub_manifest)?;
        let changes = amplitude_changes(&outcome.amplitude_columns, dir, &sub)?;
        let worst = changes.values().copied().fold(0.0, f64::max);
        let gate = Gate::at_most(
            "self_convergence",
            "max relative amplitude change when the tolerance is halved",
            worst,
            SELF_CHECK_LIMIT,
        );
        manifest.passed &= gate.passed;
        manifest.gates.push(gate);
        manifest.self_convergence = Some(SelfConvergence {
            tolerance: half.tolerance,
            directory: SELF_CHECK_DIR.to_string(),
            max_relative_change: changes,
            limit: SELF_CHECK_LIMIT,
            passed: worst <= SELF_CHECK_LIMIT,
        });
        manifest.timings.push(manifest::Timing { label: "self check".into(), seconds: t.elapsed().as_secs_f64() });
    }
    manifest.total_seconds = start.elapsed().as_secs_f64();
    save(dir, &manifest)?;
    Ok(manifest)
}
