//! Closed-form amplitudes, complex crossing points, contour decay rates, the
//! natural time parametrisation and exponential-law fits.

use std::f64::consts::PI;

use crate::contour::{path_integral, Path, SqrtTracker};
use crate::error::{Error, Result};
use crate::hamiltonians::{GapFunction, HamiltonianFamily};
use crate::linalg::C64;
use crate::quadrature::integrate_adaptive;

/// Landau–Zener amplitude `e^{−πδ²/(4ε)}`.
pub fn lz_amplitude(delta: f64, epsilon: f64) -> f64 {
    (-PI * delta * delta / (4.0 * epsilon)).exp()
}

/// `½(erf x + 1)`, written through `erfc` so the lower tail keeps full
/// relative accuracy.
pub fn erf_switch(x: f64) -> f64 {
    0.5 * libm::erfc(-x)
}

/// Newton iteration on `ρ²` from the family's seed. Returns the zero in the
/// upper half-plane.
pub fn find_complex_zero(gap: &GapFunction) -> Result<C64> {
    let mut z = gap.zero_guess;
    for _ in 0..100 {
        let (f, df) = gap.rho_squared_with_derivative(z);
        if f.norm() < 1e-14 {
            break;
        }
        if df.norm() == 0.0 || !df.norm().is_finite() {
            return Err(Error::NoConvergence { iterations: 100 });
        }
        let dz = f / df;
        z -= dz;
        if dz.norm() < 1e-15 * z.norm().max(1.0) {
            break;
        }
    }
    // ρ vanishes like a square root, so convergence is judged on ρ².
    let (f, _) = gap.rho_squared_with_derivative(z);
    if !(f.norm() < 1e-13) {
        return Err(Error::NoConvergence { iterations: 100 });
    }
    if z.im.abs() < 1e-8 {
        return Err(Error::ZeroOnRealAxis { imag: z.im });
    }
    Ok(if z.im < 0.0 { z.conj() } else { z })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayRatePrediction {
    pub gamma: f64,
    pub z0: C64,
    pub contour_radius: f64,
    pub quadrature_error_estimate: f64,
}

const CONTOUR_ORDER: usize = 24;

/// `γ = |Im ∮ρ|/2` over a loop from the origin once around `z₀`, with the
/// default circle radius `Im z₀/4`.
pub fn decay_rate(gap: &GapFunction) -> Result<DecayRatePrediction> {
    let z0 = find_complex_zero(gap)?;
    decay_rate_with_radius(gap, z0, z0.im / 4.0)
}

pub fn decay_rate_with_radius(gap: &GapFunction, z0: C64, radius: f64) -> Result<DecayRatePrediction> {
    let radius = radius.min(z0.im / 2.0);
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter("contour radius must be positive".into()));
    }
    let origin = C64::new(0.0, 0.0);
    let path = Path::loop_around(origin, z0, radius);
    let (integral, err) = path_integral(&path, CONTOUR_ORDER, radius / 2.0, || {
        let mut tr = SqrtTracker::new(gap.rho(origin));
        move |z| tr.next(gap.rho_squared(z), z)
    })?;
    Ok(DecayRatePrediction {
        gamma: integral.im.abs() / 2.0,
        z0,
        contour_radius: radius,
        quadrature_error_estimate: err,
    })
}

/// `t(s) = ∫₀ˢ ρ(u) du` along the straight segment, by adaptive quadrature.
/// The principal branch is used and checked against continuous tracking.
pub fn natural_time(family: &HamiltonianFamily, s: C64) -> Result<C64> {
    let gap = family.gap_function();
    let n = 400;
    let mut tr = SqrtTracker::new(gap.rho(C64::new(0.0, 0.0)));
    for k in 1..n {
        let u = s * (k as f64 / n as f64);
        let tracked = tr.next(gap.rho_squared(u), u)?;
        if (tracked - gap.rho(u)).norm() > 1e-8 * tracked.norm().max(1.0) {
            return Err(Error::BranchDiscontinuity { at: u });
        }
    }
    let (v, _) = integrate_adaptive(|v| gap.rho(s * v) * s, 0.0, 1.0, 1e-14, 1e-13)?;
    Ok(v)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExponentialFit {
    pub g: f64,
    pub gamma: f64,
    pub r_squared: f64,
    pub epsilons_used: Vec<f64>,
}

/// Measurements below this are under the propagator's accuracy floor and are
/// left out of experiment fits.
pub const AMPLITUDE_FLOOR: f64 = 1e-10;

/// Ordinary least squares `y = a + b·x`; returns `(b, a, r²)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (b, a, r2)
}

/// Least squares of `ln A` against `1/ε`: slope `−γ`, intercept `ln G`.
pub fn fit_exponential(measurements: &[(f64, f64)]) -> Result<ExponentialFit> {
    for &(epsilon, value) in measurements {
        if !(value > 0.0) {
            return Err(Error::NonPositiveAmplitude { epsilon, value });
        }
    }
    let used = measurements;
    if used.len() < 4 {
        return Err(Error::InsufficientData { needed: 4, got: used.len() });
    }
    let xs: Vec<f64> = used.iter().map(|m| 1.0 / m.0).collect();
    let ys: Vec<f64> = used.iter().map(|m| m.1.ln()).collect();
    let (b, a, r2) = linear_fit(&xs, &ys);
    Ok(ExponentialFit { g: a.exp(), gamma: -b, r_squared: r2, epsilons_used: used.iter().map(|m| m.0).collect() })
}

/// As [`fit_exponential`], but the largest ε is dropped when it carries the
/// largest residual and removing it at least halves the RMS residual (a sign
/// of the `O(ε)` prefactor drift). Needs five usable points to drop one.
pub fn fit_exponential_robust(measurements: &[(f64, f64)]) -> Result<ExponentialFit> {
    let full = fit_exponential(measurements)?;
    if full.epsilons_used.len() < 5 {
        return Ok(full);
    }
    let eps_max = full.epsilons_used.iter().copied().fold(f64::MIN, f64::max);
    let residuals = |fit: &ExponentialFit, pts: &[(f64, f64)]| -> Vec<(f64, f64)> {
        pts.iter()
            .filter(|m| fit.epsilons_used.contains(&m.0))
            .map(|&(e, a)| (e, a.ln() - (fit.g.ln() - fit.gamma / e)))
            .collect()
    };
    let rms = |r: &[(f64, f64)]| (r.iter().map(|x| x.1 * x.1).sum::<f64>() / r.len() as f64).sqrt();
    let r_full = residuals(&full, measurements);
    let worst = r_full.iter().fold((0.0, 0.0), |w, r| if r.1.abs() > w.1 { (r.0, r.1.abs()) } else { w });
    if worst.0 != eps_max {
        return Ok(full);
    }
    let reduced: Vec<(f64, f64)> = measurements.iter().copied().filter(|m| m.0 != eps_max).collect();
    let fit = fit_exponential(&reduced)?;
    if rms(&residuals(&fit, &reduced)) * 2.0 <= rms(&r_full) {
        Ok(fit)
    } else {
        Ok(full)
    }
}
