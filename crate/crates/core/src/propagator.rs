//! Unitary integration of `iε ∂ₜU = G(t) U` for Hermitian 2×2 generators.
//!
//! Steps use the two-exponential commutator-free Magnus scheme of order four.
//! The classical fourth-order Magnus step (with its commutator term) is built
//! from the same two Gauss-point evaluations and the difference of the two
//! serves as the local error estimate. Every sub-step is an exact 2×2
//! unitary, so the unitarity defect only measures rounding; it is monitored
//! and never corrected by renormalisation.

use crate::error::{Error, Result};
use crate::hamiltonians::HamiltonianFamily;
use crate::linalg::{commutator, unitary_step, Mat2, I};
use crate::superadiabatic::levels_at;

pub(crate) const SQRT3: f64 = 1.732_050_807_568_877_2;
pub(crate) const C1: f64 = 0.5 - SQRT3 / 6.0;
pub(crate) const C2: f64 = 0.5 + SQRT3 / 6.0;
pub(crate) const ALPHA1: f64 = (3.0 - 2.0 * SQRT3) / 12.0;
pub(crate) const ALPHA2: f64 = (3.0 + 2.0 * SQRT3) / 12.0;
pub(crate) const MIN_STEP: f64 = 1e-12;
/// Rounding level of the embedded difference; a step is never rejected below it.
pub(crate) const ROUNDING_FLOOR: f64 = 32.0 * f64::EPSILON;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    pub initial_step: f64,
    /// Local error allowed per unit of integration time.
    pub tolerance_per_unit_time: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl { initial_step: 1e-2, tolerance_per_unit_time: 1e-10 }
    }
}

impl StepControl {
    pub fn halved(&self) -> Self {
        StepControl { tolerance_per_unit_time: self.tolerance_per_unit_time / 2.0, ..*self }
    }
}

/// Basis used to read out transition amplitudes at the interval endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    Fixed,
    Instantaneous,
    Superadiabatic(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolutionSpec {
    pub epsilon: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub step_control: StepControl,
    pub basis_out: Basis,
}

impl EvolutionSpec {
    pub fn new(epsilon: f64, t_start: f64, t_end: f64) -> Result<Self> {
        let spec = EvolutionSpec {
            epsilon,
            t_start,
            t_end,
            step_control: StepControl::default(),
            basis_out: Basis::Instantaneous,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.step_control.tolerance_per_unit_time = tol;
        self
    }

    pub fn with_basis(mut self, basis: Basis) -> Self {
        self.basis_out = basis;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1], got {}", self.epsilon)));
        }
        if !(self.step_control.tolerance_per_unit_time > 0.0) || !(self.step_control.initial_step > 0.0) {
            return Err(Error::InvalidParameter("step control must be positive".into()));
        }
        if !self.t_start.is_finite() || !self.t_end.is_finite() {
            return Err(Error::InvalidParameter("interval endpoints must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropagatorResult {
    pub u_matrix: Mat2,
    pub unitarity_defect: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub history: Option<Vec<(f64, Mat2)>>,
}

/// Integrates `count` propagators that share one step sequence. `generators(t)`
/// returns the `count` Hermitian generators at `t`; the step is accepted only
/// when every level meets the tolerance. Propagators are recorded at each of
/// the (monotone, in-interval) `samples`.
pub fn integrate_generators<F>(
    mut generators: F,
    count: usize,
    epsilon: f64,
    t_start: f64,
    t_end: f64,
    control: &StepControl,
    samples: &[f64],
) -> Result<Vec<PropagatorResult>>
where
    F: FnMut(f64) -> Result<Vec<Mat2>>,
{
    let dir = if t_end >= t_start { 1.0 } else { -1.0 };
    let span = (t_end - t_start).abs();
    let mut us = vec![Mat2::identity(); count];
    let mut histories: Vec<Vec<(f64, Mat2)>> = vec![Vec::new(); count];
    let mut pending: Vec<f64> = samples
        .iter()
        .copied()
        .filter(|s| (s - t_start) * dir >= 0.0 && (t_end - s) * dir >= 0.0)
        .collect();
    pending.sort_by(|a, b| (a * dir).total_cmp(&(b * dir)));
    let mut next_sample = 0;
    let record = |t: f64, us: &[Mat2], histories: &mut Vec<Vec<(f64, Mat2)>>| {
        for (h, u) in histories.iter_mut().zip(us) {
            h.push((t, *u));
        }
    };
    while next_sample < pending.len() && pending[next_sample] == t_start {
        record(t_start, &us, &mut histories);
        next_sample += 1;
    }

    let tol = control.tolerance_per_unit_time;
    let max_step = (span / 8.0).max(MIN_STEP);
    let mut h = control.initial_step.min(max_step).max(MIN_STEP);
    let mut t = t_start;
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let mut prev_e = 1.0f64;
    while (t_end - t) * dir > 0.0 {
        let target = if next_sample < pending.len() { pending[next_sample] } else { t_end };
        let remaining = (target - t).abs();
        let lands = h >= remaining;
        let step = if lands { remaining } else { h };
        let hs = step * dir;
        let g1 = generators(t + C1 * hs)?;
        let g2 = generators(t + C2 * hs)?;
        // Keep each sub-step inside the Magnus convergence region.
        let phase = g1.iter().chain(&g2).map(traceless_norm).fold(0.0, f64::max) * step / epsilon;
        if phase > std::f64::consts::PI && step > MIN_STEP {
            h = (step * 0.9 * std::f64::consts::PI / phase).max(MIN_STEP);
            rejected += 1;
            continue;
        }
        let mut err = 0.0f64;
        let mut steps = Vec::with_capacity(count);
        for (a, b) in g1.iter().zip(&g2) {
            let (cf4, m4) = magnus_pair(a, b, hs / epsilon);
            err = err.max((cf4 - m4).norm());
            steps.push(cf4);
        }
        let allowed = tol * step + ROUNDING_FLOOR;
        if err <= allowed || step <= MIN_STEP {
            if err > allowed {
                return Err(Error::StepUnderflow { t, step });
            }
            for (u, s) in us.iter_mut().zip(steps) {
                *u = s * *u;
            }
            accepted += 1;
            t = if lands { target } else { t + hs };
            while next_sample < pending.len() && pending[next_sample] == t {
                record(t, &us, &mut histories);
                next_sample += 1;
            }
            // PI control on the normalised error e = err/allowed (exponents 0.7/5, 0.4/5).
            let e = (err / allowed).max(1e-10);
            let fac = (0.9 * e.powf(-0.14) * prev_e.powf(0.08)).clamp(0.2, 5.0);
            prev_e = e;
            // A step shortened to land on a sample says nothing about the next one.
            h = if lands { h.max(step * fac) } else { step * fac };
            h = h.min(max_step);
        } else {
            rejected += 1;
            let fac = (0.9 * (allowed / err).powf(0.25)).clamp(0.1, 0.9);
            h = (step * fac).max(MIN_STEP * 0.5);
            if h < MIN_STEP {
                return Err(Error::StepUnderflow { t, step: h });
            }
        }
    }
    Ok(us
        .into_iter()
        .zip(histories)
        .map(|(u, hist)| PropagatorResult {
            unitarity_defect: u.unitarity_defect(),
            u_matrix: u,
            accepted_steps: accepted,
            rejected_steps: rejected,
            history: if samples.is_empty() { None } else { Some(hist) },
        })
        .collect())
}

/// Commutator-free and classical fourth-order Magnus steps for generators
/// `a`, `b` sampled at the two Gauss points, with `scale = h/ε`.
pub fn magnus_pair(a: &Mat2, b: &Mat2, scale: f64) -> (Mat2, Mat2) {
    let cf4 = unitary_step(&(a.scale_real(ALPHA1) + b.scale_real(ALPHA2)), scale)
        * unitary_step(&(a.scale_real(ALPHA2) + b.scale_real(ALPHA1)), scale);
    // Ω = −i(h/ε)(a+b)/2 − (√3/12)(h/ε)²[b,a] = −iG
    let gen = (*a + *b).scale_real(0.5 * scale) + commutator(b, a).scale(-I * (SQRT3 / 12.0 * scale * scale));
    (cf4, unitary_step(&gen, 1.0))
}

/// Fixed-step commutator-free propagation, for convergence studies.
pub fn fixed_step(generator: impl Fn(f64) -> Mat2, epsilon: f64, t_start: f64, t_end: f64, steps: usize) -> Mat2 {
    let h = (t_end - t_start) / steps as f64;
    let mut u = Mat2::identity();
    for n in 0..steps {
        let t = t_start + n as f64 * h;
        u = magnus_pair(&generator(t + C1 * h), &generator(t + C2 * h), h / epsilon).0 * u;
    }
    u
}

fn traceless_norm(g: &Mat2) -> f64 {
    let d = 0.5 * (g.0[0][0] - g.0[1][1]);
    (d.norm_sqr() + g.0[0][1].norm_sqr().max(g.0[1][0].norm_sqr())).sqrt()
}

fn single(mut v: Vec<PropagatorResult>) -> PropagatorResult {
    v.pop().expect("one level")
}

/// `U_ε(t_end, t_start)` for `iε∂ₜU = H(t)U`.
pub fn evolve_u(family: &HamiltonianFamily, spec: &EvolutionSpec) -> Result<PropagatorResult> {
    evolve_u_sampled(family, spec, &[])
}

pub fn evolve_u_sampled(family: &HamiltonianFamily, spec: &EvolutionSpec, samples: &[f64]) -> Result<PropagatorResult> {
    spec.validate()?;
    integrate_generators(
        |t| Ok(vec![family.at(t)]),
        1,
        spec.epsilon,
        spec.t_start,
        spec.t_end,
        &spec.step_control,
        samples,
    )
    .map(single)
}

/// Adiabatic comparison evolution generated by `H + iε[∂ₜP, P]`; it maps
/// `ran P(s)` onto `ran P(t)`.
pub fn evolve_v(family: &HamiltonianFamily, spec: &EvolutionSpec) -> Result<PropagatorResult> {
    evolve_superadiabatic(family, spec, 0).map(single)
}

/// Superadiabatic evolutions `V_q`, q = 0..=q_max, generated by
/// `H_q + iεK_q`, all integrated on one shared step sequence.
pub fn evolve_superadiabatic(family: &HamiltonianFamily, spec: &EvolutionSpec, q_max: usize) -> Result<Vec<PropagatorResult>> {
    spec.validate()?;
    let eps = spec.epsilon;
    integrate_generators(
        |t| {
            let levels = levels_at(family, t, eps, q_max)?;
            levels
                .iter()
                .map(|l| {
                    let g = l.h + l.k.scale(I * eps);
                    let defect = g.hermiticity_defect();
                    if defect > 1e-12 * g.norm().max(1.0) {
                        return Err(Error::NonHermitianInput { defect });
                    }
                    Ok(g)
                })
                .collect()
        },
        q_max + 1,
        eps,
        spec.t_start,
        spec.t_end,
        &spec.step_control,
        &[],
    )
}

/// Readout projector (occupied = lower level) at `t` for the given basis.
pub fn readout_projector(family: &HamiltonianFamily, basis: Basis, t: f64, reference_t: f64, epsilon: f64) -> Result<Mat2> {
    match basis {
        Basis::Fixed => Ok(family.frame(reference_t)?.p_low),
        Basis::Instantaneous => Ok(family.frame(t)?.p_low),
        Basis::Superadiabatic(q) => Ok(levels_at(family, t, epsilon, q)?[q].p),
    }
}

/// `‖(I − Π(t_end)) U Π(t_start)‖` with Π chosen by `spec.basis_out`.
pub fn adiabatic_defect(family: &HamiltonianFamily, spec: &EvolutionSpec) -> Result<f64> {
    let u = evolve_u(family, spec)?;
    transition_from_propagator(family, spec, &u.u_matrix)
}

pub fn transition_from_propagator(family: &HamiltonianFamily, spec: &EvolutionSpec, u: &Mat2) -> Result<f64> {
    let p0 = readout_projector(family, spec.basis_out, spec.t_start, spec.t_start, spec.epsilon)?;
    let p1 = readout_projector(family, spec.basis_out, spec.t_end, spec.t_start, spec.epsilon)?;
    Ok(((Mat2::identity() - p1) * *u * p0).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use std::f64::consts::PI;

    fn static_family(m: Mat2) -> HamiltonianFamily {
        HamiltonianFamily::constant(m).unwrap()
    }

    #[test]
    fn zero_length_interval_is_identity() {
        let f = HamiltonianFamily::zener(1.0).unwrap();
        let r = evolve_u(&f, &EvolutionSpec::new(0.3, 2.0, 2.0).unwrap()).unwrap();
        assert_eq!(r.u_matrix, Mat2::identity());
        assert_eq!(r.accepted_steps, 0);
    }

    #[test]
    fn constant_generator_matches_closed_form() {
        let f = static_family(Mat2::pauli_z().scale_real(0.5));
        let r = evolve_u(&f, &EvolutionSpec::new(1.0, 0.0, 2.0 * PI).unwrap()).unwrap();
        let expected = Mat2::diag(C64::from_polar(1.0, -PI), C64::from_polar(1.0, PI));
        assert!(r.u_matrix.max_abs_diff(&expected) < 1e-13);
    }

    #[test]
    fn rejects_bad_epsilon() {
        assert!(EvolutionSpec::new(0.0, 0.0, 1.0).is_err());
        assert!(EvolutionSpec::new(1.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn static_v_equals_u() {
        let m = Mat2::new(C64::new(0.3, 0.0), C64::new(0.2, 0.1), C64::new(0.2, -0.1), C64::new(-0.5, 0.0));
        let f = static_family(m);
        let spec = EvolutionSpec::new(0.2, -1.0, 3.0).unwrap();
        let u = evolve_u(&f, &spec).unwrap();
        let v = evolve_v(&f, &spec).unwrap();
        assert!(u.u_matrix.max_abs_diff(&v.u_matrix) < 1e-12);
        assert!(adiabatic_defect(&f, &spec).unwrap() < 1e-12);
    }

    #[test]
    fn fourth_order_convergence() {
        // Error ratio ≈ 2⁴ per halving of the step.
        let f = HamiltonianFamily::zener(1.0).unwrap();
        let run = |n: usize| fixed_step(|t| f.at(t), 0.5, -2.0, 2.0, n);
        let reference = run(2048);
        let e1 = run(32).max_abs_diff(&reference);
        let e2 = run(64).max_abs_diff(&reference);
        let ratio = e1 / e2;
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
        // Both schemes are fourth order, so their difference is O(h⁵) per step.
        let diff = |h: f64| {
            let (x, y) = magnus_pair(&f.at(0.3 + C1 * h), &f.at(0.3 + C2 * h), h / 0.5);
            (x - y).norm()
        };
        let r = diff(0.1) / diff(0.05);
        assert!(r > 28.0 && r < 36.0, "estimator ratio {r}");
    }
}
