use std::f64::consts::PI;

use nonadiabatic_core::bo_scattering::*;
use nonadiabatic_core::hamiltonians::HamiltonianFamily;
use nonadiabatic_core::quadrature::integrate_adaptive;
use nonadiabatic_core::{Error, C64};

fn tanh(delta: f64) -> ElectronicModel {
    ElectronicModel::new(&HamiltonianFamily::tanh_model(delta).unwrap()).unwrap()
}

fn opts() -> StationaryOptions {
    StationaryOptions::default()
}

fn small_delta_rate(delta: f64, energy: f64) -> f64 {
    // E₂(0) = 0 when the coupling is switched off, so k_c = √(2E).
    delta * delta * PI / (4.0 * (2.0 * energy).sqrt())
}

fn uniform(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

fn moments(xs: &[f64], f: &[Spinor]) -> (f64, f64, f64) {
    let w: Vec<f64> = f.iter().map(|v| v[0].norm_sqr() + v[1].norm_sqr()).collect();
    let m0: f64 = w.iter().sum();
    let m1 = xs.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() / m0;
    let m2 = xs.iter().zip(&w).map(|(x, w)| (x - m1).powi(2) * w).sum::<f64>() / m0;
    (m0, m1, m2.sqrt())
}

#[test]
fn flux_is_conserved_across_energies_and_epsilons() {
    let model = tanh(0.25);
    for e in [0.7, 0.8, 1.0] {
        for eps in [0.5, 0.3, 0.2] {
            let s = solve_stationary(&model, e, eps, &opts()).unwrap();
            assert!(s.flux_defect < 1e-8, "E={e} eps={eps}: {}", s.flux_defect);
            assert!(s.drift < DRIFT_LIMIT);
        }
    }
}

#[test]
fn transmitted_amplitude_at_moderate_epsilon() {
    // Oracles: the flux balance and a rerun at a hundredfold tighter tolerance.
    let model = tanh(0.25);
    let s = solve_stationary(&model, 0.8, 0.35, &opts()).unwrap();
    let tight = solve_stationary(&model, 0.8, 0.35, &StationaryOptions { tolerance: 1e-12, ..opts() }).unwrap();
    let balance: f64 = s.coefficients.iter().zip(CHANNELS).map(|(c, (_, sg))| -(sg as f64) * c.norm_sqr()).sum();
    assert!((balance - 1.0).abs() < 1e-10);
    for (a, b) in s.coefficients.iter().zip(&tight.coefficients) {
        assert!((a - b).norm() < 1e-8);
    }
    let c1 = s.coefficient(1, -1).norm();
    assert!(c1 > 0.0 && c1 < 1.0);
    // Reflection is exponentially smaller than transmission.
    assert!(s.coefficient(1, 1).norm() < 1e-6 && s.coefficient(2, 1).norm() < 1e-6);
    let li = loop_integral(&model, 0.8).unwrap();
    assert!((c1 / (-li.value.im / 0.35f64.powi(2)).exp() - 1.0).abs() < 1e-2);
}

#[test]
fn mirrored_model_has_the_same_transition() {
    let f = HamiltonianFamily::tanh_model(0.25).unwrap();
    let a = solve_stationary(&ElectronicModel::new(&f).unwrap(), 0.8, 0.3, &opts()).unwrap();
    let b = solve_stationary(&ElectronicModel::new(&f.mirrored().unwrap()).unwrap(), 0.8, 0.3, &opts()).unwrap();
    for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
        assert!((x.norm() - y.norm()).abs() < 1e-8);
    }
}

#[test]
fn families_without_limits_are_rejected() {
    assert!(ElectronicModel::new(&HamiltonianFamily::zener(1.0).unwrap()).is_err());
}

#[test]
fn small_window_is_detected() {
    let r = solve_stationary(&tanh(0.25), 0.8, 0.3, &StationaryOptions { x_max: 2.0, ..opts() });
    assert!(matches!(r, Err(Error::WindowTooSmall { .. })));
}

#[test]
fn loop_integral_matches_straight_line_route() {
    // Oracle: shrinking the loop onto the segment [0, z₀] gives ∫₀^{z₀}(k₂ − k₁) dz.
    let model = tanh(0.25);
    let e = 0.8;
    let li = loop_integral(&model, e).unwrap();
    let gap = model.family.gap_function();
    let z0 = li.z0;
    let (v, _) = integrate_adaptive(
        |s| {
            let rho = gap.rho(z0 * s);
            ((2.0 * e - rho).sqrt() - (2.0 * e + rho).sqrt()) * z0
        },
        0.0,
        1.0,
        1e-14,
        1e-13,
    )
    .unwrap();
    assert!((li.value - v).norm() < 1e-10, "{} vs {}", li.value, v);
    assert!(li.value.im > 0.0 && li.error_estimate < 1e-10);
    // A real symmetric family only picks up a sign along the loop.
    assert!((li.theta_zeta.re.rem_euclid(PI)).min(PI - li.theta_zeta.re.rem_euclid(PI)) < 1e-10);
    assert!(li.theta_zeta.im.abs() < 1e-10);
}

#[test]
fn contour_rate_against_small_coupling_formula() {
    for (delta, tol) in [(0.1, 0.01), (0.25, 0.03)] {
        let li = loop_integral(&tanh(delta), 0.8).unwrap();
        let rel = (li.value.im / small_delta_rate(delta, 0.8) - 1.0).abs();
        assert!(rel < tol, "delta={delta}: {rel}");
    }
    let r = loop_integral(&tanh(0.5), 0.8).unwrap().value.im / loop_integral(&tanh(0.25), 0.8).unwrap().value.im;
    assert!((r / 4.0 - 1.0).abs() < 0.15, "ratio {r}");
}

#[test]
fn contour_part_of_alpha_decreases_with_energy() {
    let model = tanh(0.25);
    let rates: Vec<f64> = [0.65, 0.8, 0.95, 1.1].iter().map(|&e| loop_integral(&model, e).unwrap().value.im).collect();
    assert!(rates.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn alpha_at_the_density_centre_is_the_contour_term() {
    let model = tanh(0.25);
    let d = EnergyDensity::gaussian(0.8, 5.0, (0.7, 0.9)).unwrap();
    let ak = alpha_kappa(&model, &d, 0.8).unwrap();
    assert_eq!(ak.alpha, ak.loop_integral.value.im);
    assert!((ak.alpha - 0.0388).abs() < 0.0388 * 0.02);
    assert!((ak.kappa - (-ak.loop_integral.value.re - ak.omega1_plus)).abs() < 1e-15);
}

#[test]
fn measured_slope_quadruples_when_coupling_doubles() {
    let eps = [0.5, 0.42, 0.35, 0.3, 0.25];
    let a = transmitted_log_slope(&tanh(0.25), 0.8, &eps, &opts()).unwrap();
    let b = transmitted_log_slope(&tanh(0.5), 0.8, &eps, &opts()).unwrap();
    assert!(a.slope_vs_inv_eps2 < 0.0 && b.slope_vs_inv_eps2 < 0.0);
    assert!((b.slope_vs_inv_eps2 / a.slope_vs_inv_eps2 / 4.0 - 1.0).abs() < 0.15);
    assert!(a.fit_quality > 0.999);
}

#[test]
fn too_few_usable_epsilons() {
    let r = transmitted_log_slope(&tanh(0.25), 0.8, &[0.5, 0.4, 0.3], &opts());
    assert!(matches!(r, Err(Error::InsufficientData { needed: 4, got: 3 })));
}

#[test]
fn alpha_minimum_is_shifted_up_in_energy() {
    let model = tanh(0.25);
    let d = EnergyDensity::gaussian(0.8, 5.0, (0.7, 0.9)).unwrap();
    let m = minimize_alpha(&model, &d).unwrap();
    assert!(m.e_star > d.e0 && m.alpha_star < m.alpha_e0);
    assert!(m.alpha_kk > 0.0);
    assert!((m.k_star - (2.0 * (m.e_star - m.e1_plus)).sqrt()).abs() < 1e-15);
    // Pure Gaussian exponent: the minimum sits at E₀.
    let (e, g) = golden_minimize(|e| Ok(d.big_g(e)), 0.7, 0.9, 41, 1e-10).unwrap();
    assert!((e - 0.8).abs() < 1e-7 && g < 1e-14);
}

#[test]
fn minimum_outside_the_window_is_reported() {
    let model = tanh(0.25);
    let d = EnergyDensity::gaussian(0.8, 5.0, (0.75, 0.8002)).unwrap();
    assert!(matches!(minimize_alpha(&model, &d), Err(Error::MinimumOnBoundary { .. })));
}

fn packet_setup() -> (ElectronicModel, EnergyDensity, ScatteringRecord) {
    let model = tanh(0.25);
    let d = EnergyDensity::gaussian(0.8, 40.0, (0.6, 1.0)).unwrap();
    let rec = ScatteringRecord::new(&model, &d).unwrap();
    (model, d, rec)
}

#[test]
fn predicted_packet_norm_center_and_width() {
    let (_, _, rec) = packet_setup();
    let eps = 0.25;
    let (t1, t2) = (20.0, 35.0);
    let a1 = rec.center(t1);
    let xs = uniform(a1 - 20.0, a1 + 50.0, 60_000);
    let f1 = predicted_transmitted_packet(&rec, eps, t1, &xs).unwrap();
    let f2 = predicted_transmitted_packet(&rec, eps, t2, &xs).unwrap();
    assert!((l2_norm(&xs, &f1) / rec.predicted_norm(eps) - 1.0).abs() < 1e-8);
    let (_, c1, w1) = moments(&xs, &f1);
    let (_, c2, w2) = moments(&xs, &f2);
    assert!(((rec.center(t2) - rec.center(t1)) / (t2 - t1) - rec.minimum.k_star).abs() < 1e-8);
    assert!(((c2 - c1) / (t2 - t1) - rec.minimum.k_star).abs() < 1e-6);
    // |φ₀|² has standard deviation ε|A|/√2 since Re(B̄A) = 1.
    for (w, t) in [(w1, t1), (w2, t2)] {
        assert!((w / (eps * rec.big_a(t).norm() / 2f64.sqrt()) - 1.0).abs() < 1e-6);
    }
    assert!((rec.big_a(t2) - rec.big_a(t1) - C64::new(0.0, rec.b() * (t2 - t1))).norm() < 1e-12);
}

#[test]
fn broken_normalization_is_rejected() {
    let (_, _, mut rec) = packet_setup();
    rec.minimum.alpha_kk = -1.0;
    let r = predicted_transmitted_packet(&rec, 0.25, 10.0, &[0.0, 1.0]);
    assert!(matches!(r, Err(Error::NormalizationViolation { .. })));
}

#[test]
fn transmitted_packet_norm_obeys_plancherel() {
    // Oracle: ‖∫ f(k)e^{ixk/ε²}dk‖² = 2πε²∫|f|²dk, which in E reads πε²∫|Q c₁⁻|² dE.
    let (model, d, rec) = packet_setup();
    let eps = 0.3;
    let t = 25.0;
    let a = rec.center(t);
    let xs = uniform(a - 25.0, a + 25.0, 40_000);
    let grid = solve_energy_grid(&model, &d, eps, 96, &opts(), &[]).unwrap();
    let field = packet_field(&model, &grid, &d, t, &xs, ChannelFilter::Channel { level: 1, sigma: -1 }).unwrap();
    let oracle: f64 = grid
        .solutions
        .iter()
        .zip(&grid.weights)
        .map(|(s, w)| w * (d.q(s.energy, eps) * s.coefficient(1, -1)).norm_sqr())
        .sum::<f64>()
        * PI
        * eps
        * eps;
    assert!((l2_norm(&xs, &field).powi(2) / oracle - 1.0).abs() < 0.02);
}

#[test]
fn transmitted_packet_is_gaussian_for_non_constant_amplitude() {
    let model = tanh(0.25);
    let mut d = EnergyDensity::gaussian(0.8, 40.0, (0.6, 1.0)).unwrap();
    d.p1 = 2.0;
    d.j1 = 1.5;
    let rec = ScatteringRecord::new(&model, &d).unwrap();
    let eps = 0.25;
    let t = 25.0;
    let a = rec.center(t);
    let xs = uniform(a - 15.0, a + 15.0, 20_000);
    let p = synthesize_packet(&model, &d, eps, t, &xs, ChannelFilter::Channel { level: 1, sigma: -1 }, 64, &opts()).unwrap();
    let dens: Vec<f64> = p.field.iter().map(|v| v[0].norm_sqr() + v[1].norm_sqr()).collect();
    let (_, c, w) = moments(&xs, &p.field);
    let peak = dens.iter().copied().fold(0.0, f64::max);
    let mass = p.norm * p.norm;
    let resid = xs
        .iter()
        .zip(&dens)
        .map(|(x, v)| (v - mass / (w * (2.0 * PI).sqrt()) * (-(x - c).powi(2) / (2.0 * w * w)).exp()).abs())
        .fold(0.0, f64::max);
    assert!(resid <= 0.05 * peak, "{}", resid / peak);
    // The amplitude slope enters the transmitted shape only at the next order in ε.
    let m = phase_free_mismatch(&xs, &p.field, &predicted_transmitted_packet(&rec, eps, t, &xs).unwrap());
    let eps2 = 0.18;
    let xs2 = uniform(a - 12.0, a + 12.0, 30_000);
    let p2 = synthesize_packet(&model, &d, eps2, t, &xs2, ChannelFilter::Channel { level: 1, sigma: -1 }, 64, &opts()).unwrap();
    let m2 = phase_free_mismatch(&xs2, &p2.field, &predicted_transmitted_packet(&rec, eps2, t, &xs2).unwrap());
    // First order in ε: the ratio tracks eps2 / eps.
    assert!(m < 0.1 && (m2 / m - eps2 / eps).abs() < 0.1);
}

#[test]
fn early_field_on_the_left_matches_the_incoming_packet() {
    let model = tanh(0.25);
    let d = EnergyDensity::gaussian(0.8, 40.0, (0.6, 1.0)).unwrap();
    let eps = 0.3;
    let xs = uniform(-60.0, 0.0, 6000);
    let interior: Vec<f64> = xs.iter().copied().filter(|x| x.abs() < 12.0).collect();
    let grid = solve_energy_grid(&model, &d, eps, 96, &opts(), &interior).unwrap();
    let mut last = f64::INFINITY;
    for t in [-10.0, -20.0, -45.0] {
        let full = packet_field(&model, &grid, &d, t, &xs, ChannelFilter::All).unwrap();
        let free = free_packet(&grid, &d, t, &xs, -1, ChannelFilter::Channel { level: 2, sigma: -1 }).unwrap();
        let m = phase_free_mismatch(&xs, &full, &free);
        assert!(m < last, "t={t}: {m} after {last}");
        last = m;
    }
    assert!(last < 1e-3);
}

#[test]
fn single_energy_node_gives_one_eigenfunction() {
    let model = tanh(0.25);
    let d = EnergyDensity::gaussian(0.8, 40.0, (0.6, 1.0)).unwrap();
    let grid = solve_energy_grid(&model, &d, 0.3, 1, &opts(), &[]).unwrap();
    let xs = [15.0, 20.0, 31.0];
    let f = packet_field(&model, &grid, &d, 0.0, &xs, ChannelFilter::All).unwrap();
    let s = &grid.solutions[0];
    let weight = d.q(s.energy, 0.3) * grid.weights[0];
    let phi = free_packet(
        &EnergyGrid { weights: vec![1.0], ..grid.clone() },
        &EnergyDensity { g: 1e-300, ..d },
        0.0,
        &xs,
        1,
        ChannelFilter::All,
    )
    .unwrap();
    for (a, b) in f.iter().zip(&phi) {
        for i in 0..2 {
            assert!((a[i] - weight * b[i]).norm() < 1e-12 * weight.norm());
        }
    }
}
