use std::f64::consts::PI;
use std::time::Instant;

use nonadiabatic_core::asymptotics::{decay_rate, decay_rate_with_radius, natural_time};

use super::{at, floor_warning, Outcome};
use crate::config::{is_zener, ExperimentConfig};
use crate::error::LabResult;
use crate::manifest::{relative_difference, Gate};
use crate::table::Table;

const ROUTE_AGREEMENT: f64 = 1e-6;
const DEFORMATION_LIMIT: f64 = 1e-8;

/// Route ids in `routes.csv`.
pub const ROUTE_CLOSED_FORM: f64 = 0.0;
pub const ROUTE_CONTOUR: f64 = 1.0;
pub const ROUTE_NATURAL_TIME: f64 = 2.0;

/// Decay rate γ by independent routes, and its invariance under loop deformation.
pub fn run(cfg: &ExperimentConfig) -> LabResult<Outcome> {
    let family = cfg.family.build()?;
    let err = at(cfg, None, None);
    let start = Instant::now();
    let gap = family.gap_function();
    let contour = decay_rate(&gap).map_err(&err)?;
    let natural = natural_time(&family, contour.z0).map_err(&err)?.im.abs();

    let mut routes = vec![(ROUTE_CONTOUR, contour.gamma), (ROUTE_NATURAL_TIME, natural)];
    if is_zener(&family) {
        routes.insert(0, (ROUTE_CLOSED_FORM, PI * family.delta * family.delta / 4.0));
    }
    let reference = routes[0].1;
    let mut table = Table::new("routes.csv", &["route", "gamma", "relative_difference"]);
    for &(id, g) in &routes {
        table.push(vec![id, g, relative_difference(g, reference)]);
    }
    let spread = routes
        .iter()
        .flat_map(|a| routes.iter().map(move |b| relative_difference(a.1, b.1)))
        .fold(0.0, f64::max);
    let mut out = Outcome::default();
    out.tables.push(table);
    out.amplitude("routes.csv", "gamma");
    out.gates.push(Gate::at_most("route_agreement", "max pairwise relative difference of γ over routes", spread, ROUTE_AGREEMENT));

    let fractions = cfg.settings.radius_fractions.clone().unwrap_or_else(|| vec![0.125, 0.25, 0.5]);
    let mut deform = Table::new("deformation.csv", &["radius", "gamma", "relative_change"]);
    let mut worst: f64 = 0.0;
    for f in fractions {
        let r = decay_rate_with_radius(&gap, contour.z0, f * contour.z0.im).map_err(&err)?;
        let change = relative_difference(r.gamma, contour.gamma);
        worst = worst.max(change);
        deform.push(vec![r.contour_radius, r.gamma, change]);
    }
    out.tables.push(deform);
    out.gates.push(Gate::at_most("deformation", "max relative change of γ under loop deformation", worst, DEFORMATION_LIMIT));

    let mut amps = Table::new("amplitudes.csv", &["epsilon", "predicted_amplitude"]);
    for &eps in &cfg.epsilon_grid {
        let a = (-contour.gamma / eps).exp();
        out.warnings.extend(floor_warning("decay-rate", eps, a));
        amps.push(vec![eps, a]);
    }
    out.tables.push(amps);
    out.time("routes and deformation", start);
    Ok(out)
}
