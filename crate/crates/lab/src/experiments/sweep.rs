use std::f64::consts::{PI, SQRT_2};
use std::time::Instant;

use rayon::prelude::*;

use nonadiabatic_core::asymptotics::{fit_exponential, lz_amplitude};
use nonadiabatic_core::propagator::{evolve_u, transition_from_propagator, Basis, EvolutionSpec};

use super::{at, floor_warning, Outcome};
use crate::config::{is_zener, ExperimentConfig};
use crate::error::LabResult;
use crate::manifest::Gate;
use crate::table::Table;

const RATIO_BAND: f64 = 0.1;
const GAMMA_BAND: f64 = 0.03;
const PREFACTOR_BAND: f64 = 0.15;

/// Scattering amplitude per ε against the closed form `G e^{−γ/ε}`.
pub fn run(cfg: &ExperimentConfig) -> LabResult<Outcome> {
    let family = cfg.family.build()?;
    let delta = family.delta;
    let zener = is_zener(&family);
    // Zener: γ = πδ²/4, G = 1. Constant gap: γ = δ, G = √2.
    let (gamma, g) = if zener { (PI * delta * delta / 4.0, 1.0) } else { (delta, SQRT_2) };
    let predict = |e: f64| if zener { lz_amplitude(delta, e) } else { g * (-gamma / e).exp() };
    let (t0, t1) = cfg.window_or((-40.0, 40.0));
    let q = cfg.settings.readout_q.unwrap_or(if zener { 2 } else { 3 });

    let mut out = Outcome::default();
    let points = cfg
        .epsilon_grid
        .par_iter()
        .map(|&eps| {
            let start = Instant::now();
            let err = at(cfg, Some(eps), None);
            let spec = EvolutionSpec::new(eps, t0, t1)
                .map_err(&err)?
                .with_tolerance(cfg.tolerance)
                .with_basis(Basis::Superadiabatic(q));
            let u = evolve_u(&family, &spec).map_err(&err)?;
            let a = transition_from_propagator(&family, &spec, &u.u_matrix).map_err(&err)?;
            Ok((eps, a, u, start))
        })
        .collect::<LabResult<Vec<_>>>()?;

    let prediction = if zener { "lz_prediction" } else { "prediction" };
    let mut table = Table::new(
        "amplitudes.csv",
        &["epsilon", "measured_amplitude", prediction, "ratio", "unitarity_defect", "accepted_steps"],
    );
    let mut worst: f64 = 0.0;
    for (eps, a, u, start) in &points {
        let p = predict(*eps);
        out.warnings.extend(floor_warning("lz-sweep", *eps, p));
        worst = worst.max((a / p - 1.0).abs());
        table.push(vec![*eps, *a, p, a / p, u.unitarity_defect, u.accepted_steps as f64]);
        out.time(format!("epsilon={eps}"), *start);
    }
    out.tables.push(table);
    out.amplitude("amplitudes.csv", "measured_amplitude");
    out.gates.push(Gate::at_most("amplitude_ratio", "max |measured/predicted − 1| over the grid", worst, RATIO_BAND));

    let data: Vec<(f64, f64)> = points.iter().map(|(e, a, ..)| (*e, *a)).collect();
    let fit = fit_exponential(&data).map_err(at(cfg, None, None))?;
    let mut summary = Table::new("fit.csv", &["gamma", "prefactor", "gamma_prediction", "prefactor_prediction", "r_squared"]);
    summary.push(vec![fit.gamma, fit.g, gamma, g, fit.r_squared]);
    out.tables.push(summary);
    out.gates.push(Gate::at_most("gamma", "|fitted γ / predicted − 1|", (fit.gamma / gamma - 1.0).abs(), GAMMA_BAND));
    out.gates.push(Gate::at_most("prefactor", "|fitted G / predicted − 1|", (fit.g / g - 1.0).abs(), PREFACTOR_BAND));
    Ok(out)
}
