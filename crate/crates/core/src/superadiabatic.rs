//! Iterated superadiabatic projectors.
//!
//! Level `q` is built from `H_q = H − iεK_{q−1}` (with `K_{−1} = 0`): `P_q` is the
//! spectral projector of `H_q` onto the branch continued from the lower
//! eigenvalue of `H`, and `K_q = [∂ₜP_q, P_q]`. Since `K_q` is anti-Hermitian,
//! every `H_q` is Hermitian for real `t`.
//!
//! Derivatives are never taken by differencing. At each time the whole
//! construction runs on Taylor jets, so level `q` consumes `q` orders of the
//! expansion of `H` and is exact to rounding. A Riesz contour projector of the
//! evaluated `H_q` is kept as an independent check on the jet value.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::asymptotics::erf_switch;
use crate::error::{Error, Result};
use crate::hamiltonians::HamiltonianFamily;
use crate::jet::{Jet, JetMat2};
use crate::linalg::{riesz_projector, vec_norm, Mat2, Vec2, C64, I, ONE};
use crate::propagator::{integrate_generators, Basis, StepControl};

/// A level counts as closed once its half-gap falls below this fraction of
/// the instantaneous one.
const GAP_CLOSURE_FRACTION: f64 = 0.25;
const RIESZ_NODES: usize = 64;

/// One hierarchy level evaluated at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Level {
    pub h: Mat2,
    pub p: Mat2,
    pub k: Mat2,
    /// Half the eigenvalue separation of `h`.
    pub half_gap: f64,
}

/// Levels `0..=q_max` at time `t`.
pub fn levels_at(family: &HamiltonianFamily, t: f64, epsilon: f64, q_max: usize) -> Result<Vec<Level>> {
    let n = q_max + 2;
    let h = family.jet(t, n);
    let mut hq = h.clone();
    let mut prev_s: Option<C64> = None;
    let mut s_base = 0.0;
    let mut out = Vec::with_capacity(q_max + 1);
    let half = C64::new(0.5, 0.0);
    for q in 0..=q_max {
        let m = &hq.0;
        let d = (m[0][0].clone() - m[1][1].clone()).scale(half);
        let disc = d.clone() * d.clone() + m[0][1].clone() * m[1][0].clone();
        let root = disc.value().sqrt();
        let s0 = match prev_s {
            None => root,
            Some(p) => {
                if (root - p).norm() <= (-root - p).norm() {
                    root
                } else {
                    -root
                }
            }
        };
        if q == 0 {
            s_base = s0.norm();
        }
        if !s0.norm().is_finite() || s0.norm() < GAP_CLOSURE_FRACTION * s_base || s0.norm() == 0.0 {
            return Err(Error::GapClosure { q, t });
        }
        let s = disc.sqrt_with_root(s0);
        let len = s.len();
        let inv = s.recip();
        // P_low = ½(I − (H_q − tr/2)/s)
        let one = Jet::constant(ONE, len);
        let p = JetMat2([
            [(one.clone() - d.clone() * inv.clone()).scale(half), (-(m[0][1].clone() * inv.clone())).scale(half)],
            [(-(m[1][0].clone() * inv.clone())).scale(half), (one + d * inv).scale(half)],
        ]);
        let dp = p.derivative();
        let k = dp.commutator(&p.truncate(dp.len()));
        out.push(Level { h: hq.value(), p: p.value(), k: k.value(), half_gap: s0.norm() });
        prev_s = Some(s0);
        if q < q_max {
            hq = h.truncate(k.len()).add(&k.scale(-I * epsilon));
        }
    }
    Ok(out)
}

/// Riesz projector of `h` onto its lower eigenvalue, as a check of a jet value.
pub fn riesz_check(level: &Level) -> Option<Mat2> {
    let tr = level.h.trace() * 0.5;
    riesz_projector(&level.h, tr - level.half_gap, level.half_gap, RIESZ_NODES)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectorHierarchy {
    pub epsilon: f64,
    pub grid: Vec<f64>,
    /// `levels[q][i]` is level `q` at `grid[i]`.
    pub levels: Vec<Vec<Level>>,
    /// `β_q = sup‖K_q − K_{q−1}‖ / ε^q`.
    pub beta_estimates: Vec<f64>,
    /// `β_q ε^{q+1}`.
    pub error_proxies: Vec<f64>,
    /// `sup‖P_q − P_0‖` per level.
    pub projector_deviation: Vec<f64>,
    pub q_star: usize,
    /// False when the proxy has no interior minimum and `q_star = q_max`.
    pub q_star_interior: bool,
    /// `min gap / ε`, the heuristic optimal order.
    pub heuristic_q: f64,
    /// Largest `‖P_q − P_q^{Riesz}‖` over the grid.
    pub riesz_discrepancy: f64,
}

pub const DEFAULT_Q_MAX: usize = 12;

pub fn build_hierarchy(family: &HamiltonianFamily, epsilon: f64, grid: &[f64], q_max: usize) -> Result<ProjectorHierarchy> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    if grid.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let per_point: Vec<Vec<Level>> = grid
        .par_iter()
        .map(|&t| levels_at(family, t, epsilon, q_max))
        .collect::<Result<_>>()?;
    let mut levels = vec![Vec::with_capacity(grid.len()); q_max + 1];
    let mut riesz_discrepancy = 0.0f64;
    for point in &per_point {
        for (q, l) in point.iter().enumerate() {
            let r = riesz_check(l).ok_or(Error::GapClosure { q, t: f64::NAN })?;
            riesz_discrepancy = riesz_discrepancy.max((r - l.p).norm());
            levels[q].push(*l);
        }
    }
    let mut beta = Vec::with_capacity(q_max + 1);
    let mut proxies = Vec::with_capacity(q_max + 1);
    let mut deviation = Vec::with_capacity(q_max + 1);
    for q in 0..=q_max {
        let sup = (0..grid.len())
            .map(|i| {
                let prev = if q == 0 { Mat2::zero() } else { levels[q - 1][i].k };
                (levels[q][i].k - prev).norm()
            })
            .fold(0.0, f64::max);
        beta.push(sup / epsilon.powi(q as i32));
        proxies.push(sup * epsilon);
        deviation.push((0..grid.len()).map(|i| (levels[q][i].p - levels[0][i].p).norm()).fold(0.0, f64::max));
    }
    let (q_star, q_star_interior) = optimal_index(&proxies);
    let min_gap = levels[0].iter().map(|l| 2.0 * l.half_gap).fold(f64::INFINITY, f64::min);
    Ok(ProjectorHierarchy {
        epsilon,
        grid: grid.to_vec(),
        levels,
        beta_estimates: beta,
        error_proxies: proxies,
        projector_deviation: deviation,
        q_star,
        q_star_interior,
        heuristic_q: min_gap / epsilon,
        riesz_discrepancy,
    })
}

fn optimal_index(proxies: &[f64]) -> (usize, bool) {
    if proxies.iter().all(|&p| p == 0.0) {
        return (0, true);
    }
    let (idx, _) = proxies
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });
    (idx, idx + 1 < proxies.len())
}

/// Index minimising `β_q ε^{q+1}`.
pub fn optimal_q(hierarchy: &ProjectorHierarchy) -> usize {
    hierarchy.q_star
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransitionHistory {
    pub times: Vec<f64>,
    /// `|c₂(tᵢ)|`, the weight outside the occupied level.
    pub coefficients: Vec<f64>,
    pub basis: Basis,
}

impl TransitionHistory {
    pub fn final_value(&self) -> f64 {
        *self.coefficients.last().unwrap_or(&0.0)
    }
}

/// Unit vector spanning the range of a rank-one projector.
pub fn range_vector(p: &Mat2) -> Vec2 {
    let c0 = [p.0[0][0], p.0[1][0]];
    let c1 = [p.0[0][1], p.0[1][1]];
    let v = if vec_norm(&c0) >= vec_norm(&c1) { c0 } else { c1 };
    let n = vec_norm(&v);
    [v[0] / n, v[1] / n]
}

/// Evolves the occupied level-`q` state from the first grid time and records
/// `‖(I − P_q(tᵢ))ψ(tᵢ)‖` at every grid time of the hierarchy.
pub fn transition_history(
    family: &HamiltonianFamily,
    hierarchy: &ProjectorHierarchy,
    q: usize,
    control: &StepControl,
) -> Result<TransitionHistory> {
    let level = hierarchy
        .levels
        .get(q)
        .ok_or_else(|| Error::InvalidParameter(format!("level {q} not in hierarchy")))?;
    let grid = &hierarchy.grid;
    let (t0, t1) = (grid[0], *grid.last().unwrap());
    let runs = integrate_generators(|t| Ok(vec![family.at(t)]), 1, hierarchy.epsilon, t0, t1, control, grid)?;
    let history = runs[0].history.as_ref().expect("samples were requested");
    let psi0 = range_vector(&level[0].p);
    let mut coefficients = Vec::with_capacity(grid.len());
    for ((_, u), l) in history.iter().zip(level) {
        let psi = u.mul_vec(&psi0);
        let out = (Mat2::identity() - l.p).mul_vec(&psi);
        coefficients.push(vec_norm(&out).min(1.0));
    }
    let basis = if q == 0 { Basis::Instantaneous } else { Basis::Superadiabatic(q) };
    Ok(TransitionHistory { times: grid.to_vec(), coefficients, basis })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErfFit {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
    /// `sup |data − model| / amplitude`.
    pub max_residual: f64,
}

fn erf_model(a: f64, c: f64, w: f64, t: f64) -> f64 {
    a * erf_switch((t - c) / w)
}

/// Levenberg–Marquardt fit of `A·½(erf((t−c)/w) + 1)`; the width is seeded
/// with `√(2δε)`.
pub fn erf_profile_fit(history: &TransitionHistory, delta: f64, epsilon: f64) -> Result<ErfFit> {
    let (ts, ys) = (&history.times, &history.coefficients);
    if ts.len() < 4 {
        return Err(Error::InsufficientData { needed: 4, got: ts.len() });
    }
    let a0 = history.final_value();
    let c0 = ts
        .iter()
        .zip(ys)
        .find(|(_, &y)| y >= 0.5 * a0)
        .map(|(&t, _)| t)
        .unwrap_or(0.5 * (ts[0] + ts[ts.len() - 1]));
    let mut x = Vector3::new(a0.max(f64::MIN_POSITIVE), c0, (2.0 * delta * epsilon).sqrt());
    // Residuals are scaled by the seed amplitude so the damping is dimensionless.
    let scale = 1.0 / x[0];
    let cost = |x: &Vector3<f64>| -> f64 {
        ts.iter().zip(ys).map(|(&t, &y)| ((y - erf_model(x[0], x[1], x[2], t)) * scale).powi(2)).sum()
    };
    let mut lambda = 1e-3;
    let mut current = cost(&x);
    for _ in 0..200 {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for (&t, &y) in ts.iter().zip(ys) {
            let u = (t - x[1]) / x[2];
            let g = (-u * u).exp() / std::f64::consts::PI.sqrt();
            let j = Vector3::new(erf_switch(u), -x[0] * g / x[2], -x[0] * g * u / x[2]) * scale;
            let r = (y - erf_model(x[0], x[1], x[2], t)) * scale;
            jtj += j * j.transpose();
            jtr += j * r;
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut damped = jtj;
            for i in 0..3 {
                damped[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
            }
            let Some(step) = damped.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = x + step;
            if trial[2] <= 0.0 || !trial.iter().all(|v| v.is_finite()) {
                lambda *= 10.0;
                continue;
            }
            let c = cost(&trial);
            if c < current {
                let rel = (current - c) / current.max(1e-300);
                x = trial;
                current = c;
                lambda = (lambda / 10.0).max(1e-12);
                improved = rel > 1e-14;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let (a, c, w) = (x[0], x[1], x[2]);
    let max_residual = ts
        .iter()
        .zip(ys)
        .map(|(&t, &y)| (y - erf_model(a, c, w, t)).abs())
        .fold(0.0, f64::max)
        / a.abs();
    if !(max_residual <= 0.5) {
        return Err(Error::FitDiverged { residual: max_residual });
    }
    Ok(ErfFit { amplitude: a, center: c, width: w, max_residual })
}

/// Uniform grid of `n` points on `[a, b]`.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}
