use std::time::Instant;

use rayon::prelude::*;

use nonadiabatic_core::linalg::Mat2;
use nonadiabatic_core::propagator::{evolve_superadiabatic, evolve_u, EvolutionSpec};
use nonadiabatic_core::superadiabatic::{build_hierarchy, uniform_grid, ProjectorHierarchy};

use super::{at, log_log_slope, Outcome};
use crate::config::ExperimentConfig;
use crate::error::LabResult;
use crate::manifest::Gate;
use crate::table::Table;

const SLOPE_BAND: f64 = 0.2;
const DEPTH_LIMIT: f64 = 1e-2;
const CONVEX_FROM: usize = 3;

struct Defects {
    values: Vec<f64>,
    hierarchy: ProjectorHierarchy,
}

fn defects(cfg: &ExperimentConfig, eps: f64, q_max: usize, grid: &[f64]) -> LabResult<Defects> {
    let family = cfg.family.build()?;
    let err = at(cfg, Some(eps), None);
    let (t0, t1) = cfg.window_or((-10.0, 10.0));
    let spec = EvolutionSpec::new(eps, t0, t1).map_err(&err)?.with_tolerance(cfg.tolerance);
    let (u, vs) = rayon::join(|| evolve_u(&family, &spec), || evolve_superadiabatic(&family, &spec, q_max));
    let u: Mat2 = u.map_err(&err)?.u_matrix;
    let values = vs.map_err(&err)?.iter().map(|v| (u - v.u_matrix).norm()).collect();
    let hierarchy = build_hierarchy(&family, eps, grid, q_max).map_err(&err)?;
    Ok(Defects { values, hierarchy })
}

/// Second differences of `ln v[from..]` are non-negative and first ones positive.
fn log_convex_increasing(v: &[f64]) -> bool {
    let l: Vec<f64> = v.iter().map(|x| x.ln()).collect();
    l.windows(2).all(|w| w[1] > w[0]) && l.windows(3).all(|w| w[2] - 2.0 * w[1] + w[0] >= 0.0)
}

/// ‖U − V_q‖ against ε and q, the β_q table and the optimal-truncation scan.
pub fn run(cfg: &ExperimentConfig) -> LabResult<Outcome> {
    let s = &cfg.settings;
    let orders = s.slope_orders.clone().unwrap_or_else(|| vec![0, 1, 2]);
    let q_slopes = orders.iter().copied().max().unwrap_or(0);
    let (t0, t1) = cfg.window_or((-10.0, 10.0));
    let grid = uniform_grid(t0, t1, s.grid_points.unwrap_or(2001));
    let scan_eps = s.scan_epsilon.unwrap_or(0.05);
    let scan_q = s.scan_q_max.unwrap_or(38);
    let beta_q = s.q_max.unwrap_or(12).min(scan_q);

    let mut out = Outcome::default();
    let start = Instant::now();
    let per_eps = cfg
        .epsilon_grid
        .par_iter()
        .map(|&eps| defects(cfg, eps, q_slopes, &grid))
        .collect::<LabResult<Vec<_>>>()?;
    out.time("epsilon sweep", start);

    let mut table = Table::new("defects.csv", &["epsilon", "q", "defect", "beta", "proxy"]);
    for (eps, d) in cfg.epsilon_grid.iter().zip(&per_eps) {
        for q in 0..=q_slopes {
            table.push(vec![*eps, q as f64, d.values[q], d.hierarchy.beta_estimates[q], d.hierarchy.error_proxies[q]]);
        }
    }
    out.tables.push(table);
    out.amplitude("defects.csv", "defect");

    let mut slopes = Table::new("slopes.csv", &["q", "slope", "expected", "r_squared"]);
    for &q in &orders {
        let ys: Vec<f64> = per_eps.iter().map(|d| d.values[q]).collect();
        let (slope, r2) = log_log_slope(&cfg.epsilon_grid, &ys);
        let expected = (q + 1) as f64;
        slopes.push(vec![q as f64, slope, expected, r2]);
        out.gates.push(Gate::at_most(
            format!("slope_q{q}"),
            "|d ln‖U − V_q‖ / d ln ε − (q + 1)|",
            (slope - expected).abs(),
            SLOPE_BAND,
        ));
        if q % 2 == 1 {
            // Real symmetric families: odd levels keep the order of the level below.
            out.gates.push(
                Gate::at_most(format!("slope_q{q}_paired"), "|slope − q| for odd q", (slope - q as f64).abs(), SLOPE_BAND)
                    .diagnostic(),
            );
        }
    }
    out.tables.push(slopes);

    let start = Instant::now();
    let d = defects(cfg, scan_eps, scan_q, &grid)?;
    out.time(format!("scan epsilon={scan_eps} q_max={scan_q}"), start);
    let mut scan = Table::new("scan.csv", &["q", "defect", "beta", "proxy"]);
    for q in 0..=scan_q {
        scan.push(vec![q as f64, d.values[q], d.hierarchy.beta_estimates[q], d.hierarchy.error_proxies[q]]);
    }
    out.tables.push(scan);
    out.amplitude("scan.csv", "defect");

    let beta = &d.hierarchy.beta_estimates[CONVEX_FROM..=beta_q];
    out.gates.push(Gate::holds(
        "beta_log_convex",
        format!("ln β_q convex and increasing for q = {CONVEX_FROM}..={beta_q}"),
        log_convex_increasing(beta),
    ));
    for parity in 0..2 {
        let sub: Vec<f64> = (CONVEX_FROM..=beta_q).filter(|q| q % 2 == parity).map(|q| d.hierarchy.beta_estimates[q]).collect();
        let label = if parity == 0 { "even" } else { "odd" };
        out.gates.push(
            Gate::holds(format!("beta_log_convex_{label}"), format!("ln β_q convex and increasing over {label} q"), log_convex_increasing(&sub))
                .diagnostic(),
        );
    }

    let (q_min, min) = d
        .values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });
    let last = *d.values.last().expect("q = 0 is always present");
    let interior = q_min > 0 && q_min < scan_q && last > min;
    let mut summary =
        Table::new("scan_summary.csv", &["epsilon", "argmin_q", "min_defect", "q0_defect", "proxy_q_star", "heuristic_q"]);
    summary.push(vec![scan_eps, q_min as f64, min, d.values[0], d.hierarchy.q_star as f64, d.hierarchy.heuristic_q]);
    out.tables.push(summary);
    out.gates.push(Gate::holds("interior_minimum", format!("‖U − V_q‖ at ε = {scan_eps} has an interior minimum in q"), interior));
    out.gates.push(Gate::at_most("minimum_depth", "min_q ‖U − V_q‖ / ‖U − V_0‖", min / d.values[0], DEPTH_LIMIT));
    Ok(out)
}
