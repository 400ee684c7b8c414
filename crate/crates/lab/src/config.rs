//! Versioned JSON experiment configuration.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use nonadiabatic_core::hamiltonians::{FamilyKind, HamiltonianFamily};

use crate::error::{LabError, LabResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    LzSweep,
    ErfProfile,
    SuperadiabaticScan,
    DecayRate,
    BoTransmit,
    BoPacket,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::LzSweep => "lz-sweep",
            ExperimentKind::ErfProfile => "erf-profile",
            ExperimentKind::SuperadiabaticScan => "superadiabatic-scan",
            ExperimentKind::DecayRate => "decay-rate",
            ExperimentKind::BoTransmit => "bo-transmit",
            ExperimentKind::BoPacket => "bo-packet",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub name: String,
    pub delta: f64,
}

impl FamilySpec {
    pub fn build(&self) -> LabResult<HamiltonianFamily> {
        let built = match self.name.as_str() {
            "zener" => HamiltonianFamily::zener(self.delta),
            "constant_gap" => HamiltonianFamily::constant_gap(self.delta),
            "tanh_model" => HamiltonianFamily::tanh_model(self.delta),
            other => return Err(LabError::ConfigInvalid(format!("unknown family {other:?}"))),
        };
        built.map_err(|e| LabError::ConfigInvalid(format!("family {}: {e}", self.name)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    pub e0: f64,
    pub g: f64,
    pub window: [f64; 2],
    #[serde(default)]
    pub j1: f64,
    #[serde(default)]
    pub j2: f64,
    #[serde(default = "one")]
    pub p0: f64,
    #[serde(default)]
    pub p1: f64,
}

fn one() -> f64 {
    1.0
}

/// Experiment-specific knobs; unset fields take the experiment's default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Settings {
    /// Superadiabatic level used for endpoint readout (lz-sweep).
    pub readout_q: Option<usize>,
    /// Deepest hierarchy level built (erf-profile, superadiabatic-scan β table).
    pub q_max: Option<usize>,
    /// Number of grid points for hierarchies and histories.
    pub grid_points: Option<usize>,
    /// Orders whose ‖U − V_q‖ slope in ε is measured.
    pub slope_orders: Option<Vec<usize>>,
    /// ε and deepest level of the optimal-truncation scan.
    pub scan_epsilon: Option<f64>,
    pub scan_q_max: Option<usize>,
    /// Loop radii, as fractions of Im z₀ (decay-rate).
    pub radius_fractions: Option<Vec<f64>>,
    pub energy: Option<f64>,
    pub x_max: Option<f64>,
    pub density: Option<DensitySpec>,
    pub times: Option<Vec<f64>>,
    pub nodes: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    pub family: FamilySpec,
    pub epsilon_grid: Vec<f64>,
    /// Time window for the propagator experiments.
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    /// Integrator tolerance (per unit time for the propagator).
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Run the tolerance-halving rerun even without `--self-check`.
    #[serde(default)]
    pub self_check: bool,
    #[serde(default)]
    pub settings: Settings,
}

fn default_tolerance() -> f64 {
    1e-10
}

impl ExperimentConfig {
    pub fn from_json(text: &str, origin: &Path) -> LabResult<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| LabError::ConfigInvalid(format!("{}: {e}", origin.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path).map_err(LabError::io(path))?;
        Self::from_json(&text, path)
    }

    pub fn validate(&self) -> LabResult<()> {
        let bad = |m: String| Err(LabError::ConfigInvalid(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if self.epsilon_grid.is_empty() {
            return bad("epsilon_grid is empty".into());
        }
        if let Some(e) = self.epsilon_grid.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            return bad(format!("epsilon {e} outside (0, 1]"));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1e-3) {
            return bad(format!("tolerance {} outside (0, 1e-3)", self.tolerance));
        }
        if let Some([a, b]) = self.window {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return bad(format!("window [{a}, {b}] is not an increasing finite interval"));
            }
        }
        let family = self.family.build()?;
        let allowed: &[&str] = match self.experiment {
            ExperimentKind::LzSweep => &["zener", "constant_gap"],
            ExperimentKind::ErfProfile => &["zener", "constant_gap"],
            ExperimentKind::SuperadiabaticScan => &["zener", "constant_gap", "tanh_model"],
            ExperimentKind::DecayRate => &["zener", "tanh_model"],
            ExperimentKind::BoTransmit | ExperimentKind::BoPacket => &["tanh_model"],
        };
        if !allowed.contains(&family.name()) {
            return bad(format!("{} does not support family {}", self.experiment, family.name()));
        }
        if matches!(self.experiment, ExperimentKind::BoPacket) {
            if self.settings.density.is_none() {
                return bad("bo-packet needs settings.density".into());
            }
            if !self.epsilon_grid.windows(2).all(|w| w[1] < w[0]) {
                return bad("bo-packet needs a strictly decreasing epsilon_grid".into());
            }
        }
        if let Some(t) = &self.settings.times {
            if t.is_empty() {
                return bad("settings.times is empty".into());
            }
        }
        Ok(())
    }

    pub fn window_or(&self, default: (f64, f64)) -> (f64, f64) {
        self.window.map(|[a, b]| (a, b)).unwrap_or(default)
    }

    /// Same experiment at a different integrator tolerance.
    pub fn with_tolerance(&self, tolerance: f64) -> Self {
        ExperimentConfig { tolerance, ..self.clone() }
    }
}

pub(crate) fn is_zener(f: &HamiltonianFamily) -> bool {
    matches!(f.kind, FamilyKind::Zener)
}
