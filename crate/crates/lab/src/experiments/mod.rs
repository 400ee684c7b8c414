//! The six experiments. Each maps a config (at a given tolerance) to tables,
//! gates and timings; writing files is left to the runner.

mod bo;
mod decay;
mod erf;
mod scan;
mod sweep;

use std::time::Instant;

use nonadiabatic_core::asymptotics::linear_fit;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{LabError, LabResult};
use crate::manifest::{Gate, Timing};
use crate::table::Table;

#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub gates: Vec<Gate>,
    pub timings: Vec<Timing>,
    pub warnings: Vec<String>,
    /// `(file, column)` pairs checked by the tolerance-halving rerun.
    pub amplitude_columns: Vec<(String, String)>,
}

impl Outcome {
    fn time(&mut self, label: impl Into<String>, start: Instant) {
        self.timings.push(Timing { label: label.into(), seconds: start.elapsed().as_secs_f64() });
    }

    fn amplitude(&mut self, file: &str, column: &str) {
        self.amplitude_columns.push((file.to_string(), column.to_string()));
    }
}

pub fn execute(cfg: &ExperimentConfig) -> LabResult<Outcome> {
    cfg.validate()?;
    match cfg.experiment {
        ExperimentKind::LzSweep => sweep::run(cfg),
        ExperimentKind::ErfProfile => erf::run(cfg),
        ExperimentKind::SuperadiabaticScan => scan::run(cfg),
        ExperimentKind::DecayRate => decay::run(cfg),
        ExperimentKind::BoTransmit => bo::transmit(cfg),
        ExperimentKind::BoPacket => bo::packet(cfg),
    }
}

/// Attaches the failing (family, ε, E) coordinates to a core error.
pub(crate) fn at(cfg: &ExperimentConfig, epsilon: Option<f64>, energy: Option<f64>) -> impl Fn(nonadiabatic_core::Error) -> LabError + '_ {
    move |source| LabError::Numerical { family: cfg.family.name.clone(), epsilon, energy, source }
}

/// Slope of `ln y` against `ln x`.
pub(crate) fn log_log_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (b, _, r2) = linear_fit(&lx, &ly);
    (b, r2)
}

/// Prints `0.1` as `0.1` and `0.125` as `0.125`, for file names.
pub(crate) fn tag(v: f64) -> String {
    let s = format!("{v}");
    s.replace('-', "m")
}

/// Amplitudes below this are under the propagator's accuracy budget.
pub(crate) const AMPLITUDE_FLOOR: f64 = nonadiabatic_core::asymptotics::AMPLITUDE_FLOOR;

pub(crate) fn floor_warning(what: &str, epsilon: f64, predicted: f64) -> Option<String> {
    (predicted < AMPLITUDE_FLOOR).then(|| {
        format!("{what}: predicted amplitude {predicted:.3e} at epsilon={epsilon} is below the {AMPLITUDE_FLOOR:.0e} accuracy floor")
    })
}
