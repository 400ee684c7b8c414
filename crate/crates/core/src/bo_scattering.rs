//! One nuclear dimension, two electronic levels: stationary scattering,
//! complex-contour decay exponents and transmitted wave packets.
//!
//! # Stationary problem
//!
//! `−(ε⁴/2)Φ'' + h(x)Φ = EΦ` is written for `y = (Φ, ε²Φ')` as
//! `y' = ε⁻²[[0, I], [W, 0]]y` with `W = 2(h − E)`. Each fourth-order
//! commutator-free Magnus step exponentiates a generator of the same block
//! shape, and `exp([[0, pI], [Q, 0]]) = [[C, pS], [QS, C]]` with
//! `C = cosh√(pQ)`, `S = sinh√(pQ)/√(pQ)` is evaluated exactly from the
//! spectrum of the 2×2 symmetric matrix `pQ`. The oscillation at wavelength
//! `∝ ε²` is thus carried by the exponentials rather than resolved by steps.
//!
//! # Coefficient frame
//!
//! With real adiabatic eigenvectors `φ_j(x)` (so `⟨φ_j, φ_j'⟩ = 0`),
//! momenta `k_j = √(2(E − E_j))` and phases `S_j(x) = ∫₀ˣ k_j`, the local
//! coefficients are defined by
//!
//! ```text
//! Φ      = Σ_{j,σ} φ_j c_j^σ w_j^σ
//! ε²Φ'   = Σ_{j,σ} (−iσk_j) φ_j c_j^σ w_j^σ,      w_j^σ = e^{−iσS_j/ε²}/√(2k_j),
//! ```
//!
//! i.e. the WKB ansatz together with first-derivative matching. The map is
//! invertible for `k_j > 0`, and substituting it into the equation gives
//! `c' = O(|h'|)` with oscillating coefficients, so `c` is constant wherever
//! `h` is. Projection is explicit: with `p = φ_j·Φ`, `r = φ_j·ε²Φ'`,
//! `c_j^∓ w_j^∓ = (p ± r/(ik_j))/2`.
//!
//! The Wronskian-type current `2 Im(Φ†ε²Φ')` is exactly conserved by the
//! equation and equals `Σ_j (|c_j^−|² − |c_j^+|²)` identically, which is the
//! flux check.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::asymptotics::{find_complex_zero, linear_fit};
use crate::contour::{path_integral, Path, SqrtTracker};
use crate::error::{Error, Result};
use crate::hamiltonians::HamiltonianFamily;
use crate::linalg::{C64, I, ONE, ZERO};
use crate::propagator::{ALPHA1, ALPHA2, C1, C2, MIN_STEP, ROUNDING_FLOOR};
use crate::quadrature::{gauss_legendre, integrate_adaptive};

pub type Spinor = [C64; 2];
type Sym = [[f64; 2]; 2];

/// Coefficient order used throughout: `(j, σ)` for `c_1^−, c_1^+, c_2^−, c_2^+`.
pub const CHANNELS: [(usize, i8); 4] = [(1, -1), (1, 1), (2, -1), (2, 1)];

pub fn channel_index(level: usize, sigma: i8) -> usize {
    2 * (level - 1) + usize::from(sigma > 0)
}

/// Adiabatic data at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalLevels {
    pub e1: f64,
    pub e2: f64,
    pub phi1: [f64; 2],
    pub phi2: [f64; 2],
}

impl LocalLevels {
    fn from_matrix(m: Sym, angle: Option<f64>) -> Self {
        let tr = 0.5 * (m[0][0] + m[1][1]);
        let d = 0.5 * (m[0][0] - m[1][1]);
        let b = m[0][1];
        let th = angle.unwrap_or_else(|| b.atan2(d));
        let (s, c) = (0.5 * th).sin_cos();
        let split = d * th.cos() + b * th.sin();
        LocalLevels { e1: tr - split, e2: tr + split, phi1: [-s, c], phi2: [c, s] }
    }

    pub fn energy(&self, level: usize) -> f64 {
        if level == 1 { self.e1 } else { self.e2 }
    }

    pub fn vector(&self, level: usize) -> [f64; 2] {
        if level == 1 { self.phi1 } else { self.phi2 }
    }

    pub fn momentum(&self, level: usize, energy: f64) -> f64 {
        (2.0 * (energy - self.energy(level))).max(0.0).sqrt()
    }
}

/// A family that is real symmetric on the real axis and has limits at ±∞,
/// with its adiabatic levels labelled as in the scattering setup: `E₁ < E₂`
/// at `−∞`, continued analytically. When the coupling vanishes identically the
/// levels cross and keep the eigenvectors they have at `−∞`.
#[derive(Clone, Debug, PartialEq)]
pub struct ElectronicModel {
    pub family: HamiltonianFamily,
    frozen_angle: Option<f64>,
    limit_lo: Sym,
    limit_hi: Sym,
}

fn real_symmetric(m: &crate::linalg::Mat2) -> Result<Sym> {
    let defect = m.0.iter().flatten().map(|v| v.im.abs()).fold(0.0, f64::max).max((m.0[0][1] - m.0[1][0]).norm());
    if defect > 1e-13 {
        return Err(Error::NonHermitianInput { defect });
    }
    Ok([[m.0[0][0].re, m.0[0][1].re], [m.0[1][0].re, m.0[1][1].re]])
}

impl ElectronicModel {
    pub fn new(family: &HamiltonianFamily) -> Result<Self> {
        let (lo, hi) = family
            .limits
            .ok_or_else(|| Error::InvalidParameter(format!("{} has no limits at infinity", family.name())))?;
        for x in [-3.0, -0.5, 0.0, 0.7, 2.0] {
            real_symmetric(&family.at(x))?;
        }
        let limit_lo = real_symmetric(&lo)?;
        let limit_hi = real_symmetric(&hi)?;
        let frozen_angle = (family.delta == 0.0).then(|| 0.0f64.atan2(0.5 * (limit_lo[0][0] - limit_lo[1][1])));
        Ok(ElectronicModel { family: family.clone(), frozen_angle, limit_lo, limit_hi })
    }

    pub fn levels(&self, x: f64) -> LocalLevels {
        let m = self.family.at(x);
        LocalLevels::from_matrix([[m.0[0][0].re, m.0[0][1].re], [m.0[1][0].re, m.0[1][1].re]], self.frozen_angle)
    }

    /// Levels of `h(−∞)` (`side < 0`) or `h(+∞)`.
    pub fn limit_levels(&self, side: i8) -> LocalLevels {
        LocalLevels::from_matrix(if side < 0 { self.limit_lo } else { self.limit_hi }, self.frozen_angle)
    }

    fn w_matrix(&self, x: f64, energy: f64) -> Sym {
        let m = self.family.at(x);
        [
            [2.0 * (m.0[0][0].re - energy), 2.0 * m.0[0][1].re],
            [2.0 * m.0[1][0].re, 2.0 * (m.0[1][1].re - energy)],
        ]
    }

    /// `sup_x E₂(x)` over the limits and a fine grid of `[−x_max, x_max]`.
    pub fn upper_level_sup(&self, x_max: f64) -> f64 {
        let n = 4000;
        let grid = (0..=n).map(|i| -x_max + 2.0 * x_max * i as f64 / n as f64);
        grid.map(|x| self.levels(x).e2)
            .chain([self.limit_levels(-1).e2, self.limit_levels(1).e2])
            .fold(f64::MIN, f64::max)
    }

    /// `∫₀ˣ k_j(y) dy`.
    pub fn phase_integral(&self, level: usize, energy: f64, x: f64) -> Result<f64> {
        if x == 0.0 {
            return Ok(0.0);
        }
        let f = |y: f64| C64::new(self.levels(y).momentum(level, energy), 0.0);
        Ok(integrate_adaptive(f, 0.0, x, 1e-12, 1e-13)?.0.re)
    }

    /// `ω_j^± = lim_{x→±∞} (∫₀ˣ k_j − x k_j(±∞))`, as `∫` of the decaying
    /// difference over the half line mapped to `[0, 1)` by `y = s/(1−s)`.
    pub fn omega(&self, level: usize, energy: f64, side: i8) -> Result<f64> {
        let sign = if side < 0 { -1.0 } else { 1.0 };
        let k_inf = self.limit_levels(side).momentum(level, energy);
        let f = |s: f64| {
            let y = s / (1.0 - s);
            let v = (self.levels(sign * y).momentum(level, energy) - k_inf) / ((1.0 - s) * (1.0 - s));
            C64::new(if v.is_finite() { v } else { 0.0 }, 0.0)
        };
        Ok(sign * integrate_adaptive(f, 0.0, 1.0, 1e-12, 1e-12)?.0.re)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelData {
    pub energy: f64,
    /// `k_j(−∞, E)` for `j = 1, 2`.
    pub k_minus: [f64; 2],
    /// `k_j(+∞, E)`.
    pub k_plus: [f64; 2],
    pub omega_minus: [f64; 2],
    pub omega_plus: [f64; 2],
}

impl ChannelData {
    pub fn new(model: &ElectronicModel, energy: f64, x_max: f64) -> Result<Self> {
        let threshold = model.upper_level_sup(x_max);
        if !(energy > threshold) {
            return Err(Error::EnergyOutsideWindow { energy, threshold });
        }
        let (lo, hi) = (model.limit_levels(-1), model.limit_levels(1));
        Ok(ChannelData {
            energy,
            k_minus: [lo.momentum(1, energy), lo.momentum(2, energy)],
            k_plus: [hi.momentum(1, energy), hi.momentum(2, energy)],
            omega_minus: [model.omega(1, energy, -1)?, model.omega(2, energy, -1)?],
            omega_plus: [model.omega(1, energy, 1)?, model.omega(2, energy, 1)?],
        })
    }

    pub fn omega1_plus(&self) -> f64 {
        self.omega_plus[0]
    }

    pub fn omega2_minus(&self) -> f64 {
        self.omega_minus[1]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StationaryOptions {
    pub x_max: f64,
    /// Local error allowed per unit length of `x`.
    pub tolerance: f64,
    /// Continue to `1.25·x_max` and require the coefficients to have settled.
    pub drift_check: bool,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        StationaryOptions { x_max: 12.0, tolerance: 1e-10, drift_check: true }
    }
}

/// Drift between `x_max` and `1.25·x_max` above which the window is too small.
pub const DRIFT_LIMIT: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct StationarySolution {
    pub energy: f64,
    pub epsilon: f64,
    pub x_max: f64,
    pub channels: ChannelData,
    /// `c_j^σ(x_max)` in [`CHANNELS`] order; the incoming data at `−x_max` is
    /// `c_2^− = 1`, all others zero.
    pub coefficients: [C64; 4],
    /// `|Σ(|c^−|² − |c^+|²)(x_max) − 1|`.
    pub flux_defect: f64,
    /// Largest coefficient change between `x_max` and `1.25·x_max` (0 if unchecked).
    pub drift: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Local coefficients at the requested interior sample points.
    pub samples: Vec<CoefficientSample>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoefficientSample {
    pub x: f64,
    pub coefficients: [C64; 4],
    /// `S_j(x) = ∫₀ˣ k_j`.
    pub phases: [f64; 2],
}

impl StationarySolution {
    pub fn coefficient(&self, level: usize, sigma: i8) -> C64 {
        self.coefficients[channel_index(level, sigma)]
    }
}

fn sym_mul(a: &Sym, b: &Sym) -> Sym {
    let mut r = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

fn sym_apply(a: &Sym, v: &Spinor) -> Spinor {
    [v[0] * a[0][0] + v[1] * a[0][1], v[0] * a[1][0] + v[1] * a[1][1]]
}

/// `(cosh √λ, sinh √λ / √λ)` continued to `λ ≤ 0`.
fn cosh_sinhc(l: f64) -> (f64, f64) {
    if l < 0.0 {
        let w = (-l).sqrt();
        (w.cos(), if w < 1e-4 { 1.0 - w * w / 6.0 } else { w.sin() / w })
    } else {
        let w = l.sqrt();
        (w.cosh(), if w < 1e-4 { 1.0 + w * w / 6.0 } else { w.sinh() / w })
    }
}

/// Applies `exp([[0, pI], [Q, 0]])` to `(Φ, Ψ)`.
fn block_exp_apply(p: f64, q: &Sym, y: &[Spinor; 2]) -> [Spinor; 2] {
    let n = [[p * q[0][0], p * q[0][1]], [p * q[1][0], p * q[1][1]]];
    let m = 0.5 * (n[0][0] + n[1][1]);
    let r = (0.25 * (n[0][0] - n[1][1]).powi(2) + n[0][1] * n[1][0]).max(0.0).sqrt();
    let (cp, sp) = cosh_sinhc(m + r);
    let (cm, sm) = cosh_sinhc(m - r);
    // f(N) = ½(f₊ + f₋)I + (f₊ − f₋)/(2r)·(N − mI); the divided difference is
    // harmless for small r because (N − mI) has norm r.
    let fun = |fp: f64, fm: f64| -> Sym {
        let a = 0.5 * (fp + fm);
        let b = if r > 0.0 { (fp - fm) / (2.0 * r) } else { 0.0 };
        [[a + b * (n[0][0] - m), b * n[0][1]], [b * n[1][0], a + b * (n[1][1] - m)]]
    };
    let c = fun(cp, cm);
    let s = fun(sp, sm);
    let qs = sym_mul(q, &s);
    let (phi, psi) = (y[0], y[1]);
    let cphi = sym_apply(&c, &phi);
    let spsi = sym_apply(&s, &psi);
    let qsphi = sym_apply(&qs, &phi);
    let cpsi = sym_apply(&c, &psi);
    [
        [cphi[0] + spsi[0] * p, cphi[1] + spsi[1] * p],
        [qsphi[0] + cpsi[0], qsphi[1] + cpsi[1]],
    ]
}

fn lin(a: f64, x: &Sym, b: f64, y: &Sym, s: f64) -> Sym {
    let mut r = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = s * (a * x[i][j] + b * y[i][j]);
        }
    }
    r
}

struct Stepper<'a> {
    model: &'a ElectronicModel,
    energy: f64,
    eps2: f64,
}

impl Stepper<'_> {
    fn cf4(&self, x: f64, s: f64, y: &[Spinor; 2]) -> [Spinor; 2] {
        let w1 = self.model.w_matrix(x + C1 * s, self.energy);
        let w2 = self.model.w_matrix(x + C2 * s, self.energy);
        let p = 0.5 * s / self.eps2;
        let first = block_exp_apply(p, &lin(ALPHA2, &w1, ALPHA1, &w2, s / self.eps2), y);
        block_exp_apply(p, &lin(ALPHA1, &w1, ALPHA2, &w2, s / self.eps2), &first)
    }

    /// Largest local wavenumber `√|λ(W)|/ε²`, used to cap the step.
    fn frequency(&self, x: f64) -> f64 {
        let w = self.model.w_matrix(x, self.energy);
        let m = 0.5 * (w[0][0] + w[1][1]);
        let r = (0.25 * (w[0][0] - w[1][1]).powi(2) + w[0][1] * w[1][0]).sqrt();
        (m.abs() + r).sqrt() / self.eps2
    }
}

fn dist(a: &[Spinor; 2], b: &[Spinor; 2]) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(u, v)| (u - v).norm_sqr()).sum::<f64>().sqrt()
}

/// Local coefficients from the state, given the phases `S_j(x)`.
fn coefficients_at(loc: &LocalLevels, energy: f64, phases: [f64; 2], eps2: f64, y: &[Spinor; 2]) -> [C64; 4] {
    let mut c = [ZERO; 4];
    for level in 1..=2 {
        let u = loc.vector(level);
        let k = loc.momentum(level, energy);
        let p = y[0][0] * u[0] + y[0][1] * u[1];
        let r = y[1][0] * u[0] + y[1][1] * u[1];
        let q = r / (I * k);
        let norm = (2.0 * k).sqrt();
        let phase = phases[level - 1] / eps2;
        // w^σ = e^{−iσS/ε²}/√(2k)
        c[channel_index(level, -1)] = 0.5 * (p + q) * norm * C64::from_polar(1.0, -phase);
        c[channel_index(level, 1)] = 0.5 * (p - q) * norm * C64::from_polar(1.0, phase);
    }
    c
}

fn state_from(loc: &LocalLevels, energy: f64, phases: [f64; 2], eps2: f64, c: &[C64; 4]) -> [Spinor; 2] {
    let mut y = [[ZERO; 2]; 2];
    for &(level, sigma) in &CHANNELS {
        let u = loc.vector(level);
        let k = loc.momentum(level, energy);
        let w = C64::from_polar(1.0, -(sigma as f64) * phases[level - 1] / eps2) / (2.0 * k).sqrt();
        let a = c[channel_index(level, sigma)] * w;
        let da = a * (-I * (sigma as f64) * k);
        for i in 0..2 {
            y[0][i] += a * u[i];
            y[1][i] += da * u[i];
        }
    }
    y
}

fn flux(c: &[C64; 4]) -> f64 {
    CHANNELS.iter().map(|&(l, s)| -(s as f64) * c[channel_index(l, s)].norm_sqr()).sum()
}

pub fn solve_stationary(model: &ElectronicModel, energy: f64, epsilon: f64, options: &StationaryOptions) -> Result<StationarySolution> {
    solve_stationary_sampled(model, energy, epsilon, options, &[])
}

/// As [`solve_stationary`], also recording the local coefficients at the
/// given points of `(−x_max, x_max)`.
pub fn solve_stationary_sampled(
    model: &ElectronicModel,
    energy: f64,
    epsilon: f64,
    options: &StationaryOptions,
    samples: &[f64],
) -> Result<StationarySolution> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    let x_max = options.x_max;
    if !(x_max > 0.0 && options.tolerance > 0.0) {
        return Err(Error::InvalidParameter("x_max and tolerance must be positive".into()));
    }
    let channels = ChannelData::new(model, energy, x_max)?;
    let eps2 = epsilon * epsilon;
    let stepper = Stepper { model, energy, eps2 };

    let mut targets: Vec<f64> = samples.iter().copied().filter(|x| x.abs() < x_max).collect();
    targets.sort_by(f64::total_cmp);
    targets.dedup();
    let n_samples = targets.len();
    targets.push(x_max);
    let x_end = if options.drift_check { 1.25 * x_max } else { x_max };
    if options.drift_check {
        targets.push(x_end);
    }

    let mut phases = [model.phase_integral(1, energy, -x_max)?, model.phase_integral(2, energy, -x_max)?];
    let mut incoming = [ZERO; 4];
    incoming[channel_index(2, -1)] = ONE;
    let mut y = state_from(&model.levels(-x_max), energy, phases, eps2, &incoming);

    let tol = options.tolerance;
    let mut x = -x_max;
    let mut h = 0.1 * eps2;
    let mut prev_e = 1.0f64;
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let mut recorded: Vec<CoefficientSample> = Vec::with_capacity(targets.len());
    let mut last_target = x;
    for &target in &targets {
        while x < target {
            let remaining = target - x;
            let cap = 0.9 * PI / stepper.frequency(x).max(stepper.frequency((x + h).min(target)));
            let lands = h.min(cap) >= remaining;
            let step = if lands { remaining } else { h.min(cap) };
            let full = stepper.cf4(x, step, &y);
            let half = stepper.cf4(x + 0.5 * step, 0.5 * step, &stepper.cf4(x, 0.5 * step, &y));
            let err = dist(&full, &half) / 15.0;
            let allowed = tol * step + ROUNDING_FLOOR;
            if err <= allowed || step <= MIN_STEP {
                if err > allowed {
                    return Err(Error::StepUnderflow { t: x, step });
                }
                y = half;
                x = if lands { target } else { x + step };
                accepted += 1;
                let e = (err / allowed).max(1e-10);
                let fac = (0.9 * e.powf(-0.14) * prev_e.powf(0.08)).clamp(0.2, 5.0);
                prev_e = e;
                h = if lands { h.max(step * fac) } else { step * fac };
            } else {
                rejected += 1;
                h = step * (0.9 * (allowed / err).powf(0.2)).clamp(0.1, 0.9);
                if h < MIN_STEP {
                    return Err(Error::StepUnderflow { t: x, step: h });
                }
            }
        }
        for (j, ph) in phases.iter_mut().enumerate() {
            let f = |s: f64| C64::new(model.levels(s).momentum(j + 1, energy), 0.0);
            *ph += integrate_adaptive(f, last_target, target, 1e-12, 1e-13)?.0.re;
        }
        last_target = target;
        recorded.push(CoefficientSample { x: target, coefficients: coefficients_at(&model.levels(target), energy, phases, eps2, &y), phases });
    }

    let coefficients = recorded[n_samples].coefficients;
    let drift = if options.drift_check {
        let end = recorded[n_samples + 1].coefficients;
        coefficients.iter().zip(&end).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    } else {
        0.0
    };
    if drift > DRIFT_LIMIT {
        return Err(Error::WindowTooSmall { drift });
    }
    recorded.truncate(n_samples);
    Ok(StationarySolution {
        energy,
        epsilon,
        x_max,
        channels,
        coefficients,
        flux_defect: (flux(&coefficients) - 1.0).abs(),
        drift,
        accepted_steps: accepted,
        rejected_steps: rejected,
        samples: recorded,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogSlope {
    /// Slope of `ln|c_1^−|` against `1/ε²`.
    pub slope_vs_inv_eps2: f64,
    pub intercept: f64,
    /// `r²` of the linear fit.
    pub fit_quality: f64,
    /// `(ε, |c_1^−|)` for every solve.
    pub points: Vec<(f64, f64)>,
}

/// Transmitted amplitudes below this are treated as unresolved.
pub const TRANSMITTED_FLOOR: f64 = 1e-10;

pub fn transmitted_log_slope(model: &ElectronicModel, energy: f64, epsilons: &[f64], options: &StationaryOptions) -> Result<LogSlope> {
    let points = epsilons
        .par_iter()
        .map(|&e| Ok((e, solve_stationary(model, energy, e, options)?.coefficient(1, -1).norm())))
        .collect::<Result<Vec<_>>>()?;
    let usable: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.1 > TRANSMITTED_FLOOR).collect();
    if usable.len() < 4 {
        return Err(Error::InsufficientData { needed: 4, got: usable.len() });
    }
    let xs: Vec<f64> = usable.iter().map(|p| 1.0 / (p.0 * p.0)).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept, r2) = linear_fit(&xs, &ys);
    Ok(LogSlope { slope_vs_inv_eps2: slope, intercept, fit_quality: r2, points })
}

/// `∫_ζ k₂(z, E) dz` over the loop from the origin around the complex
/// crossing, on the side where its imaginary part is positive, together with
/// the eigenvector monodromy `θ(ζ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopIntegral {
    pub value: C64,
    pub error_estimate: f64,
    /// Crossing point encircled by the chosen loop.
    pub z0: C64,
    /// `θ(ζ)`, defined by `e^{−iθ(ζ)} = φ₁(0)ᵀ·(φ₂ continued along ζ)`.
    pub theta_zeta: C64,
}

const LOOP_ORDER: usize = 24;

fn k2_loop(model: &ElectronicModel, energy: f64, z0: C64, radius: f64) -> Result<(C64, f64)> {
    let gap = model.family.gap_function();
    let origin = C64::new(0.0, 0.0);
    let path = Path::loop_around(origin, z0, radius);
    let trace = |z: C64| model.family.at_complex(z).trace();
    let k0 = C64::new(model.levels(0.0).momentum(2, energy), 0.0);
    path_integral(&path, LOOP_ORDER, radius / 2.0, || {
        let mut rho = SqrtTracker::new(gap.rho(origin));
        let mut k = SqrtTracker::new(k0);
        let gap = &gap;
        move |z| {
            let r = rho.next(gap.rho_squared(z), z)?;
            k.next(2.0 * energy - trace(z) - r, z)
        }
    })
}

/// Continues `φ₂` along the loop with the bilinear normalisation `φᵀφ = 1`,
/// which for a 2×2 symmetric family is parallel transport.
fn eigenvector_monodromy(model: &ElectronicModel, z0: C64, radius: f64) -> Result<C64> {
    let gap = model.family.gap_function();
    let origin = C64::new(0.0, 0.0);
    let path = Path::loop_around(origin, z0, radius);
    let mut rho = SqrtTracker::new(gap.rho(origin));
    let start = model.levels(0.0);
    let mut v: Spinor = [C64::new(start.phi2[0], 0.0), C64::new(start.phi2[1], 0.0)];
    for (z, _) in path.nodes(2 * LOOP_ORDER, radius / 2.0).into_iter().chain([(origin, ZERO)]) {
        let r = rho.next(gap.rho_squared(z), z)?;
        let m = model.family.at_complex(z);
        let lambda = 0.5 * (m.trace() + r);
        let a: Spinor = [m.0[0][1], lambda - m.0[0][0]];
        let b: Spinor = [lambda - m.0[1][1], m.0[1][0]];
        let w = if a[0].norm() + a[1].norm() >= b[0].norm() + b[1].norm() { a } else { b };
        let n = (w[0] * w[0] + w[1] * w[1]).sqrt();
        let mut u = [w[0] / n, w[1] / n];
        if (u[0] * v[0] + u[1] * v[1]).re < 0.0 {
            u = [-u[0], -u[1]];
        }
        v = u;
    }
    Ok(start.phi1[0] * v[0] + start.phi1[1] * v[1])
}

pub fn loop_integral(model: &ElectronicModel, energy: f64) -> Result<LoopIntegral> {
    let z_up = find_complex_zero(&model.family.gap_function())?;
    let radius = z_up.im / 4.0;
    let (up, err) = k2_loop(model, energy, z_up, radius)?;
    let (z0, value, error_estimate) =
        if up.im >= 0.0 { (z_up, up, err) } else { let (v, e) = k2_loop(model, energy, z_up.conj(), radius)?; (z_up.conj(), v, e) };
    Ok(LoopIntegral { value, error_estimate, z0, theta_zeta: I * eigenvector_monodromy(model, z0, radius)?.ln() })
}

/// Energy density `Q(E,ε) = e^{−G/ε²}e^{−iJ/ε²}P(E)` supported on a window,
/// with `G = g(E−E₀)²/2`, `J = j₁(E−E₀) + j₂(E−E₀)²/2`, `P = p₀ + p₁(E−E₀)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyDensity {
    pub e0: f64,
    pub g: f64,
    pub window: (f64, f64),
    pub j1: f64,
    pub j2: f64,
    pub p0: f64,
    pub p1: f64,
}

impl EnergyDensity {
    pub fn gaussian(e0: f64, g: f64, window: (f64, f64)) -> Result<Self> {
        let d = EnergyDensity { e0, g, window, j1: 0.0, j2: 0.0, p0: 1.0, p1: 0.0 };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0) {
            return Err(Error::InvalidParameter(format!("density curvature g must be positive, got {}", self.g)));
        }
        if !(self.window.0 < self.e0 && self.e0 < self.window.1) {
            return Err(Error::InvalidParameter("E0 must be interior to the energy window".into()));
        }
        Ok(())
    }

    pub fn big_g(&self, e: f64) -> f64 {
        0.5 * self.g * (e - self.e0).powi(2)
    }

    pub fn big_j(&self, e: f64) -> f64 {
        let d = e - self.e0;
        self.j1 * d + 0.5 * self.j2 * d * d
    }

    pub fn amplitude(&self, e: f64) -> f64 {
        self.p0 + self.p1 * (e - self.e0)
    }

    pub fn q(&self, e: f64, epsilon: f64) -> C64 {
        if e < self.window.0 || e > self.window.1 {
            return ZERO;
        }
        let eps2 = epsilon * epsilon;
        C64::from_polar((-self.big_g(e) / eps2).exp(), -self.big_j(e) / eps2) * self.amplitude(e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaKappa {
    pub alpha: f64,
    pub kappa: f64,
    pub loop_integral: LoopIntegral,
    pub omega1_plus: f64,
}

/// `α = G + Im∫_ζ k₂`, `κ = J − Re∫_ζ k₂ − ω₁⁺`.
pub fn alpha_kappa(model: &ElectronicModel, density: &EnergyDensity, energy: f64) -> Result<AlphaKappa> {
    let li = loop_integral(model, energy)?;
    let omega1_plus = model.omega(1, energy, 1)?;
    Ok(AlphaKappa {
        alpha: density.big_g(energy) + li.value.im,
        kappa: density.big_j(energy) - li.value.re - omega1_plus,
        loop_integral: li,
        omega1_plus,
    })
}

/// Grid bracketing followed by golden-section refinement to `tol`.
pub fn golden_minimize(f: impl Fn(f64) -> Result<f64>, lo: f64, hi: f64, grid: usize, tol: f64) -> Result<(f64, f64)> {
    let grid = grid.max(3);
    let xs: Vec<f64> = (0..grid).map(|i| lo + (hi - lo) * i as f64 / (grid - 1) as f64).collect();
    let fs = xs.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    let best = (0..grid).min_by(|&a, &b| fs[a].total_cmp(&fs[b])).unwrap();
    let (mut a, mut b) = (xs[best.saturating_sub(1)], xs[(best + 1).min(grid - 1)]);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut d) = (b - r * (b - a), a + r * (b - a));
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaMinimum {
    pub e_star: f64,
    pub k_star: f64,
    pub alpha_star: f64,
    pub alpha_e0: f64,
    /// `d²α(E(k))/dk²` at `k*`, with `E(k) = k²/2 + E₁(+∞)`.
    pub alpha_kk: f64,
    pub kappa_star: f64,
    /// `dκ(E(k))/dk` and `d²κ(E(k))/dk²` at `k*`.
    pub kappa_k: f64,
    pub kappa_kk: f64,
    pub e1_plus: f64,
    pub theta_zeta: C64,
}

const K_STEP: f64 = 1e-3;

pub fn minimize_alpha(model: &ElectronicModel, density: &EnergyDensity) -> Result<AlphaMinimum> {
    let (lo, hi) = density.window;
    let alpha = |e: f64| Ok(alpha_kappa(model, density, e)?.alpha);
    let (e_star, alpha_star) = golden_minimize(alpha, lo, hi, 41, 1e-10)?;
    if (e_star - lo).min(hi - e_star) < 0.01 * (hi - lo) {
        return Err(Error::MinimumOnBoundary { e_star, lo, hi });
    }
    let e1_plus = model.limit_levels(1).e1;
    let k_star = (2.0 * (e_star - e1_plus)).sqrt();
    let at_k = |k: f64| alpha_kappa(model, density, 0.5 * k * k + e1_plus);
    let (m, c, p) = (at_k(k_star - K_STEP)?, at_k(k_star)?, at_k(k_star + K_STEP)?);
    let h2 = K_STEP * K_STEP;
    Ok(AlphaMinimum {
        e_star,
        k_star,
        alpha_star,
        alpha_e0: alpha(density.e0)?,
        alpha_kk: (p.alpha - 2.0 * c.alpha + m.alpha) / h2,
        kappa_star: c.kappa,
        kappa_k: (p.kappa - m.kappa) / (2.0 * K_STEP),
        kappa_kk: (p.kappa - 2.0 * c.kappa + m.kappa) / h2,
        e1_plus,
        theta_zeta: c.loop_integral.theta_zeta,
    })
}

/// Which parts of the generalized eigenfunctions enter a synthesized packet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelFilter {
    All,
    Channel { level: usize, sigma: i8 },
}

impl ChannelFilter {
    fn admits(&self, level: usize, sigma: i8) -> bool {
        match *self {
            ChannelFilter::All => true,
            ChannelFilter::Channel { level: l, sigma: s } => l == level && s == sigma,
        }
    }
}

/// Generalized eigenfunctions on a Gauss–Legendre grid over the density window.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyGrid {
    pub weights: Vec<f64>,
    pub solutions: Vec<StationarySolution>,
    pub limits: (LocalLevels, LocalLevels),
}

pub fn solve_energy_grid(
    model: &ElectronicModel,
    density: &EnergyDensity,
    epsilon: f64,
    nodes: usize,
    options: &StationaryOptions,
    interior: &[f64],
) -> Result<EnergyGrid> {
    let rule = gauss_legendre(nodes);
    let (lo, hi) = density.window;
    let half = 0.5 * (hi - lo);
    let points: Vec<(f64, f64)> = rule.0.iter().zip(&rule.1).map(|(x, w)| (lo + half * (x + 1.0), half * w)).collect();
    let solutions = points
        .par_iter()
        .map(|&(e, _)| solve_stationary_sampled(model, e, epsilon, options, interior))
        .collect::<Result<Vec<_>>>()?;
    Ok(EnergyGrid {
        weights: points.iter().map(|p| p.1).collect(),
        solutions,
        limits: (model.limit_levels(-1), model.limit_levels(1)),
    })
}

/// `∫ Q(E,ε) Φ(x,E,ε) e^{−itE/ε²} dE` on `x_grid`, restricted by `filter`.
/// Outside `[−x_max, x_max]` the asymptotic plane waves are used; interior
/// points must be among the sample points the grid was solved with.
pub fn packet_field(
    model: &ElectronicModel,
    grid: &EnergyGrid,
    density: &EnergyDensity,
    t: f64,
    x_grid: &[f64],
    filter: ChannelFilter,
) -> Result<Vec<Spinor>> {
    let x_max = grid.solutions.first().map_or(0.0, |s| s.x_max);
    let mut regions = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        regions.push(if x.abs() < x_max {
            let idx = grid.solutions[0].samples.iter().position(|s| s.x == x).ok_or_else(|| {
                Error::InvalidParameter(format!("x = {x} is inside the window but was not sampled"))
            })?;
            Region::Interior(model.levels(x), idx)
        } else {
            Region::Side(if x > 0.0 { 1 } else { -1 })
        });
    }
    superpose(grid, density, t, x_grid, filter, &regions)
}

/// The freely propagating packet built from the coefficients at `−∞`
/// (`side < 0`) or `+∞`, evaluated with the plane-wave form at every point.
pub fn free_packet(grid: &EnergyGrid, density: &EnergyDensity, t: f64, x_grid: &[f64], side: i8, filter: ChannelFilter) -> Result<Vec<Spinor>> {
    superpose(grid, density, t, x_grid, filter, &vec![Region::Side(side); x_grid.len()])
}

#[derive(Clone, Copy)]
enum Region {
    Interior(LocalLevels, usize),
    Side(i8),
}

fn superpose(grid: &EnergyGrid, density: &EnergyDensity, t: f64, x_grid: &[f64], filter: ChannelFilter, regions: &[Region]) -> Result<Vec<Spinor>> {
    let Some(first) = grid.solutions.first() else {
        return Err(Error::InvalidParameter("empty energy grid".into()));
    };
    let epsilon = first.epsilon;
    let eps2 = epsilon * epsilon;
    let mut incoming = [ZERO; 4];
    incoming[channel_index(2, -1)] = ONE;
    let mut out = vec![[ZERO; 2]; x_grid.len()];
    for (sol, &w) in grid.solutions.iter().zip(&grid.weights) {
        let e = sol.energy;
        let q = density.q(e, epsilon) * w * C64::from_polar(1.0, -t * e / eps2);
        if q == ZERO {
            continue;
        }
        let ch = &sol.channels;
        for ((&x, region), slot) in x_grid.iter().zip(regions).zip(out.iter_mut()) {
            // c w with w = e^{−iσS/ε²}/√(2k), S → x k(±∞) + ω^± outside the window.
            let (loc, c, phases, ks): (LocalLevels, &[C64; 4], [f64; 2], [f64; 2]) = match *region {
                Region::Interior(loc, idx) => {
                    let sample = &sol.samples[idx];
                    (loc, &sample.coefficients, sample.phases, [loc.momentum(1, e), loc.momentum(2, e)])
                }
                Region::Side(side) if side > 0 => {
                    (grid.limits.1, &sol.coefficients, [x * ch.k_plus[0] + ch.omega_plus[0], x * ch.k_plus[1] + ch.omega_plus[1]], ch.k_plus)
                }
                Region::Side(_) => {
                    (grid.limits.0, &incoming, [x * ch.k_minus[0] + ch.omega_minus[0], x * ch.k_minus[1] + ch.omega_minus[1]], ch.k_minus)
                }
            };
            for &(level, sigma) in &CHANNELS {
                let cj = c[channel_index(level, sigma)];
                if !filter.admits(level, sigma) || cj == ZERO {
                    continue;
                }
                let k = ks[level - 1];
                let amp = q * cj * C64::from_polar(1.0, -(sigma as f64) * phases[level - 1] / eps2) / (2.0 * k).sqrt();
                let u = loc.vector(level);
                slot[0] += amp * u[0];
                slot[1] += amp * u[1];
            }
        }
    }
    Ok(out)
}

/// Trapezoidal `L²` norm of a spinor field on a sorted grid.
pub fn l2_norm(x_grid: &[f64], field: &[Spinor]) -> f64 {
    let d: Vec<f64> = field.iter().map(|f| f[0].norm_sqr() + f[1].norm_sqr()).collect();
    trapezoid(x_grid, &d).sqrt()
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(a, b)| 0.5 * (a[1] - a[0]) * (b[0] + b[1])).sum()
}

/// `min_φ ‖f − e^{iφ}g‖ / ‖g‖`.
pub fn phase_free_mismatch(x_grid: &[f64], f: &[Spinor], g: &[Spinor]) -> f64 {
    let ff: Vec<f64> = f.iter().map(|v| v[0].norm_sqr() + v[1].norm_sqr()).collect();
    let gg: Vec<f64> = g.iter().map(|v| v[0].norm_sqr() + v[1].norm_sqr()).collect();
    let cross: Vec<C64> = f.iter().zip(g).map(|(a, b)| b[0].conj() * a[0] + b[1].conj() * a[1]).collect();
    let re: Vec<f64> = cross.iter().map(|c| c.re).collect();
    let im: Vec<f64> = cross.iter().map(|c| c.im).collect();
    let overlap = C64::new(trapezoid(x_grid, &re), trapezoid(x_grid, &im)).norm();
    let (nf, ng) = (trapezoid(x_grid, &ff), trapezoid(x_grid, &gg));
    (nf + ng - 2.0 * overlap).max(0.0).sqrt() / ng.sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthesizedPacket {
    pub field: Vec<Spinor>,
    pub norm: f64,
    /// Relative change of the norm when the energy grid is doubled.
    pub refinement_change: f64,
}

/// Maximum relative change of the packet norm under energy-grid doubling.
pub const QUADRATURE_GATE: f64 = 0.01;

#[allow(clippy::too_many_arguments)]
pub fn synthesize_packet(
    model: &ElectronicModel,
    density: &EnergyDensity,
    epsilon: f64,
    t: f64,
    x_grid: &[f64],
    filter: ChannelFilter,
    nodes: usize,
    options: &StationaryOptions,
) -> Result<SynthesizedPacket> {
    let interior: Vec<f64> = x_grid.iter().copied().filter(|x| x.abs() < options.x_max).collect();
    let coarse = solve_energy_grid(model, density, epsilon, nodes, options, &interior)?;
    let fine = solve_energy_grid(model, density, epsilon, 2 * nodes, options, &interior)?;
    let f0 = packet_field(model, &coarse, density, t, x_grid, filter)?;
    let f1 = packet_field(model, &fine, density, t, x_grid, filter)?;
    let (n0, n1) = (l2_norm(x_grid, &f0), l2_norm(x_grid, &f1));
    let change = if n1 > 0.0 { (n1 - n0).abs() / n1 } else { 0.0 };
    if change > QUADRATURE_GATE {
        return Err(Error::QuadratureUnderResolved { change });
    }
    Ok(SynthesizedPacket { field: f1, norm: n1, refinement_change: change })
}

/// Everything the transmitted-packet prediction depends on.
#[derive(Clone, Debug, PartialEq)]
pub struct ScatteringRecord {
    pub density: EnergyDensity,
    pub minimum: AlphaMinimum,
    /// `φ₁(+∞)`.
    pub phi1_plus: [f64; 2],
}

impl ScatteringRecord {
    pub fn new(model: &ElectronicModel, density: &EnergyDensity) -> Result<Self> {
        Ok(ScatteringRecord { density: *density, minimum: minimize_alpha(model, density)?, phi1_plus: model.limit_levels(1).phi1 })
    }

    pub fn eta(&self) -> f64 {
        self.minimum.k_star
    }

    pub fn b(&self) -> f64 {
        1.0 / self.minimum.alpha_kk.sqrt()
    }

    /// Centre `a₊(t) = ∂ₖκ + k*t`.
    pub fn center(&self, t: f64) -> f64 {
        self.minimum.kappa_k + self.minimum.k_star * t
    }

    pub fn big_a(&self, t: f64) -> C64 {
        C64::new(self.minimum.alpha_kk, self.minimum.kappa_kk + t) * self.b()
    }

    pub fn action(&self, t: f64) -> f64 {
        (0.5 * self.minimum.k_star * self.minimum.k_star - self.minimum.e1_plus) * t
    }

    /// `ε^{3/2}π^{3/4}e^{−α*/ε²}|P(E*)|√k*/(∂ₖ²α)^{1/4}`, the predicted norm.
    pub fn predicted_norm(&self, epsilon: f64) -> f64 {
        let m = &self.minimum;
        epsilon.powf(1.5) * PI.powf(0.75) * (-m.alpha_star / (epsilon * epsilon)).exp() * self.density.amplitude(m.e_star).abs() * m.k_star.sqrt()
            / m.alpha_kk.powf(0.25)
    }
}

/// `φ₀(A, B, ε², a, η, x)`.
pub fn coherent_state(a_cap: C64, b_cap: f64, epsilon: f64, a: f64, eta: f64, x: f64) -> C64 {
    let eps2 = epsilon * epsilon;
    let pre = (PI.powf(0.25) * epsilon.sqrt() * a_cap.sqrt()).inv();
    let d = x - a;
    pre * (-(b_cap * d * d) / (2.0 * a_cap * eps2) + I * (eta * d / eps2)).exp()
}

/// The Gaussian transmitted packet on level 1 predicted at time `t`.
pub fn predicted_transmitted_packet(record: &ScatteringRecord, epsilon: f64, t: f64, x_grid: &[f64]) -> Result<Vec<Spinor>> {
    let m = &record.minimum;
    let (b, a_cap) = (record.b(), record.big_a(t));
    let defect = (b * a_cap.re - 1.0).abs();
    if !(defect <= 1e-10) {
        return Err(Error::NormalizationViolation { defect });
    }
    let eps2 = epsilon * epsilon;
    let phase = (record.action(t) - (m.kappa_star - m.k_star * m.kappa_k)) / eps2;
    let scalar = (-I * m.theta_zeta).exp() * C64::from_polar(record.predicted_norm(epsilon), phase) * record.density.amplitude(m.e_star).signum();
    let (a, eta) = (record.center(t), record.eta());
    let u = record.phi1_plus;
    Ok(x_grid
        .iter()
        .map(|&x| {
            let v = scalar * coherent_state(a_cap, b, epsilon, a, eta, x);
            [v * u[0], v * u[1]]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tanh(delta: f64) -> ElectronicModel {
        ElectronicModel::new(&HamiltonianFamily::tanh_model(delta).unwrap()).unwrap()
    }

    #[test]
    fn levels_are_eigenpairs() {
        let model = tanh(0.25);
        for x in [-5.0, -0.3, 0.0, 0.4, 7.0] {
            let l = model.levels(x);
            let h = model.family.at(x);
            for level in 1..=2 {
                let u = l.vector(level);
                for i in 0..2 {
                    let hu = h.0[i][0].re * u[0] + h.0[i][1].re * u[1];
                    assert!((hu - l.energy(level) * u[i]).abs() < 1e-14);
                }
            }
            assert!(l.e1 < l.e2);
        }
        // Level 2 is mostly the second diabatic state at −∞ and the first at +∞.
        assert!(model.limit_levels(-1).phi2[1] > 0.99 && model.limit_levels(1).phi2[0] > 0.99);
    }

    #[test]
    fn block_exponential_matches_series() {
        let q: Sym = [[-3.0, 0.4], [0.4, -1.5]];
        let p = 0.7;
        let y: [Spinor; 2] = [[C64::new(0.3, 0.1), C64::new(-0.2, 0.5)], [C64::new(1.0, 0.0), C64::new(0.0, -0.4)]];
        // Oracle: Taylor series of the 4×4 exponential.
        let apply = |v: &[Spinor; 2]| -> [Spinor; 2] { [[v[1][0] * p, v[1][1] * p], sym_apply(&q, &v[0])] };
        let mut term = y;
        let mut sum = y;
        for n in 1..60 {
            let next = apply(&term);
            term = [[next[0][0] / n as f64, next[0][1] / n as f64], [next[1][0] / n as f64, next[1][1] / n as f64]];
            for a in 0..2 {
                for b in 0..2 {
                    sum[a][b] += term[a][b];
                }
            }
        }
        assert!(dist(&block_exp_apply(p, &q, &y), &sum) < 1e-14);
    }

    #[test]
    fn frame_round_trip() {
        let model = tanh(0.25);
        let loc = model.levels(0.3);
        let c = [C64::new(0.1, 0.2), C64::new(-0.3, 0.0), C64::new(0.9, -0.1), C64::new(0.0, 0.05)];
        let y = state_from(&loc, 0.8, [0.4, -1.1], 0.09, &c);
        let back = coefficients_at(&loc, 0.8, [0.4, -1.1], 0.09, &y);
        for (a, b) in c.iter().zip(&back) {
            assert!((a - b).norm() < 1e-14);
        }
        // Current identity.
        let current = 2.0 * (y[0][0].conj() * y[1][0] + y[0][1].conj() * y[1][1]).im;
        assert!((current - flux(&c)).abs() < 1e-14);
    }

    #[test]
    fn decoupled_channels_stay_decoupled() {
        let model = ElectronicModel::new(&HamiltonianFamily::tanh_decoupled()).unwrap();
        let s = solve_stationary(&model, 0.8, 0.35, &StationaryOptions::default()).unwrap();
        assert!(s.coefficient(1, -1).norm() < 1e-12 && s.coefficient(1, 1).norm() < 1e-12);
        assert!((s.coefficient(2, -1).norm() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn energy_below_threshold_is_rejected() {
        let model = tanh(0.25);
        let r = solve_stationary(&model, 0.5, 0.3, &StationaryOptions::default());
        assert!(matches!(r, Err(Error::EnergyOutsideWindow { .. })));
    }

    #[test]
    fn omega_matches_direct_integral() {
        let model = tanh(0.25);
        let e = 0.8;
        let k_inf = model.limit_levels(1).momentum(1, e);
        // Oracle: plain truncated integral; the integrand decays like e^{−2y}.
        let (direct, _) = integrate_adaptive(|y| C64::new(model.levels(y).momentum(1, e) - k_inf, 0.0), 0.0, 30.0, 1e-13, 1e-13).unwrap();
        assert!((model.omega(1, e, 1).unwrap() - direct.re).abs() < 1e-12);
    }

    #[test]
    fn coherent_state_is_normalized() {
        let b = 0.3;
        let a_cap = C64::new(1.0 / b, 2.5);
        let xs: Vec<f64> = (0..=8000).map(|i| -10.0 + 20.0 * i as f64 / 8000.0).collect();
        let f: Vec<Spinor> = xs.iter().map(|&x| [coherent_state(a_cap, b, 0.4, 1.0, 0.7, x), ZERO]).collect();
        assert!((l2_norm(&xs, &f) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn golden_section_finds_quadratic_minimum() {
        let (x, fx) = golden_minimize(|x| Ok((x - 0.123).powi(2) + 2.0), 0.0, 1.0, 11, 1e-10).unwrap();
        assert!((x - 0.123).abs() < 1e-7 && (fx - 2.0).abs() < 1e-14);
    }
}
