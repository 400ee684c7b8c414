use std::f64::consts::SQRT_2;
use std::time::Instant;

use nonadiabatic_core::asymptotics::{erf_switch, lz_amplitude};
use nonadiabatic_core::propagator::StepControl;
use nonadiabatic_core::superadiabatic::{build_hierarchy, erf_profile_fit, transition_history, uniform_grid};

use super::{at, floor_warning, tag, Outcome};
use crate::config::{is_zener, ExperimentConfig};
use crate::error::LabResult;
use crate::manifest::Gate;
use crate::table::Table;

const RESIDUAL_LIMIT: f64 = 0.05;
const WIDTH_BAND: f64 = 0.15;
const EXCURSION_FACTOR: f64 = 5.0;

/// Transition history in the optimal superadiabatic basis, its erf fit, and
/// the instantaneous-basis history for contrast.
pub fn run(cfg: &ExperimentConfig) -> LabResult<Outcome> {
    let family = cfg.family.build()?;
    let delta = family.delta;
    let predict = |e: f64| if is_zener(&family) { lz_amplitude(delta, e) } else { SQRT_2 * (-delta / e).exp() };
    let (t0, t1) = cfg.window_or((-20.0, 20.0));
    let grid = uniform_grid(t0, t1, cfg.settings.grid_points.unwrap_or(4001));
    let q_max = cfg.settings.q_max.unwrap_or(16);
    let control = StepControl { initial_step: 1e-3, tolerance_per_unit_time: cfg.tolerance };

    let mut out = Outcome::default();
    let mut summary = Table::new(
        "summary.csv",
        &[
            "epsilon",
            "q_star",
            "final_amplitude",
            "prediction",
            "fit_amplitude",
            "fit_center",
            "fit_width",
            "width_prediction",
            "max_residual",
            "excursion_ratio",
        ],
    );
    for &eps in &cfg.epsilon_grid {
        let start = Instant::now();
        let err = at(cfg, Some(eps), None);
        let h = build_hierarchy(&family, eps, &grid, q_max).map_err(&err)?;
        let q = h.q_star;
        let best = transition_history(&family, &h, q, &control).map_err(&err)?;
        let inst = transition_history(&family, &h, 0, &control).map_err(&err)?;
        let fit = erf_profile_fit(&best, delta, eps).map_err(&err)?;
        let a = best.final_value();
        let p = predict(eps);
        out.warnings.extend(floor_warning("erf-profile", eps, p));

        let name = format!("profile_eps{}.csv", tag(eps));
        let mut profile = Table::new(&name, &["t", "c2", "c2_instantaneous", "erf_model", "residual"]);
        for ((&t, &c), &ci) in best.times.iter().zip(&best.coefficients).zip(&inst.coefficients) {
            let model = fit.amplitude * erf_switch((t - fit.center) / fit.width);
            profile.push(vec![t, c, ci, model, (c - model).abs() / fit.amplitude]);
        }
        out.tables.push(profile);

        let peak = inst.coefficients.iter().copied().fold(0.0, f64::max);
        let width_pred = (2.0 * delta * eps).sqrt();
        summary.push(vec![
            eps,
            q as f64,
            a,
            p,
            fit.amplitude,
            fit.center,
            fit.width,
            width_pred,
            fit.max_residual,
            peak / a,
        ]);
        out.gates.push(Gate::at_most(
            format!("residual_eps{}", tag(eps)),
            "sup |history − fitted erf| / amplitude",
            fit.max_residual,
            RESIDUAL_LIMIT,
        ));
        out.gates.push(Gate::at_most(
            format!("width_eps{}", tag(eps)),
            "|fitted width / √(2δε) − 1|",
            (fit.width / width_pred - 1.0).abs(),
            WIDTH_BAND,
        ));
        out.gates.push(Gate::at_least(
            format!("excursion_eps{}", tag(eps)),
            "max instantaneous-basis |c₂| / final amplitude",
            peak / a,
            EXCURSION_FACTOR,
        ));
        out.time(format!("epsilon={eps}"), start);
    }
    out.tables.insert(0, summary);
    out.amplitude("summary.csv", "final_amplitude");
    out.amplitude("summary.csv", "fit_amplitude");
    Ok(out)
}
