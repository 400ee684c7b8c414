//! Closed-form 2×2 complex linear algebra.
//!
//! Every operator in the two-level problems is a 2×2 complex matrix, so the
//! eigendecomposition, exponential and norms are written out explicitly
//! instead of going through an iterative solver.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

pub use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Gap below which a spectrum is flagged as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

/// Absolute Hermiticity tolerance, scaled by `max(1, ‖m‖)`.
pub const HERMITICITY_TOLERANCE: f64 = 1e-14;

pub type Vec2 = [C64; 2];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn from_real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2::new(a.into(), b.into(), c.into(), d.into())
    }

    pub const fn zero() -> Self {
        Mat2([[ZERO, ZERO], [ZERO, ZERO]])
    }

    pub const fn identity() -> Self {
        Mat2([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn pauli_x() -> Self {
        Mat2::from_real(0.0, 1.0, 1.0, 0.0)
    }

    pub fn pauli_y() -> Self {
        Mat2::new(ZERO, -I, I, ZERO)
    }

    pub fn pauli_z() -> Self {
        Mat2::from_real(1.0, 0.0, 0.0, -1.0)
    }

    pub fn diag(a: C64, d: C64) -> Self {
        Mat2::new(a, ZERO, ZERO, d)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[i][j]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Mat2::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Mat2::new(m[0][0], m[1][0], m[0][1], m[1][1])
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        Mat2::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d.norm() == 0.0 {
            return None;
        }
        let m = &self.0;
        Some(Mat2::new(m[1][1], -m[0][1], -m[1][0], m[0][0]).scale(d.inv()))
    }

    pub fn mul_vec(&self, v: &Vec2) -> Vec2 {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Spectral (operator 2-) norm: the largest singular value.
    pub fn norm(&self) -> f64 {
        let f2 = self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>();
        let d = self.det().norm();
        let disc = (f2 * f2 - 4.0 * d * d).max(0.0).sqrt();
        ((f2 + disc) / 2.0).sqrt()
    }

    /// Largest absolute deviation from Hermiticity, `max |m_ij - conj(m_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let m = &self.0;
        let off = (m[0][1] - m[1][0].conj()).norm();
        let d0 = m[0][0].im.abs() * 2.0;
        let d1 = m[1][1].im.abs() * 2.0;
        off.max(d0).max(d1)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() <= HERMITICITY_TOLERANCE * self.norm().max(1.0)
    }

    /// `‖U†U − I‖`.
    pub fn unitarity_defect(&self) -> f64 {
        (self.adjoint() * *self - Mat2::identity()).norm()
    }

    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        (*self - *other).norm()
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2::new(a[0][0] + b[0][0], a[0][1] + b[0][1], a[1][0] + b[1][0], a[1][1] + b[1][1])
    }
}

impl AddAssign for Mat2 {
    fn add_assign(&mut self, o: Mat2) {
        *self = *self + o;
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2::new(a[0][0] - b[0][0], a[0][1] - b[0][1], a[1][0] - b[1][0], a[1][1] - b[1][1])
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale_real(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl Mul<C64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: C64) -> Mat2 {
        self.scale(s)
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: f64) -> Mat2 {
        self.scale_real(s)
    }
}

pub fn commutator(a: &Mat2, b: &Mat2) -> Mat2 {
    *a * *b - *b * *a
}

pub fn inner(u: &Vec2, v: &Vec2) -> C64 {
    u[0].conj() * v[0] + u[1].conj() * v[1]
}

pub fn vec_norm(v: &Vec2) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

pub fn outer(u: &Vec2, v: &Vec2) -> Mat2 {
    Mat2::new(u[0] * v[0].conj(), u[0] * v[1].conj(), u[1] * v[0].conj(), u[1] * v[1].conj())
}

/// A 2×2 matrix that passed the Hermiticity check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HermitianMatrix2(Mat2);

impl HermitianMatrix2 {
    pub fn new(m: Mat2) -> Result<Self> {
        let defect = m.hermiticity_defect();
        if defect > HERMITICITY_TOLERANCE * m.norm().max(1.0) {
            return Err(Error::NonHermitianInput { defect });
        }
        Ok(HermitianMatrix2(m))
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }
}

/// Eigenvalues, eigenvectors and spectral projectors of a Hermitian 2×2 matrix,
/// ordered ascending (`low` is level 1, `high` is level 2).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralFrame {
    pub e_low: f64,
    pub e_high: f64,
    pub p_low: Mat2,
    pub p_high: Mat2,
    pub v_low: Vec2,
    pub v_high: Vec2,
    pub gap: f64,
    pub degenerate: bool,
}

impl SpectralFrame {
    pub fn reconstruct(&self) -> Mat2 {
        self.p_low * self.e_low + self.p_high * self.e_high
    }
}

pub fn eigen_decompose(m: &HermitianMatrix2) -> SpectralFrame {
    let m = m.matrix();
    let a = 0.5 * (m.0[0][0].re + m.0[1][1].re);
    let z = 0.5 * (m.0[0][0].re - m.0[1][1].re);
    // Hermitian symmetrisation of the off-diagonal entry.
    let w = 0.5 * (m.0[1][0] + m.0[0][1].conj());
    let r = z.hypot(w.norm());
    let gap = 2.0 * r;
    if gap < DEGENERACY_THRESHOLD {
        return SpectralFrame {
            e_low: a - r,
            e_high: a + r,
            p_low: Mat2::diag(ZERO, ONE),
            p_high: Mat2::diag(ONE, ZERO),
            v_low: [ZERO, ONE],
            v_high: [ONE, ZERO],
            gap,
            degenerate: true,
        };
    }
    // Eigenvector of +r for [[z, w*], [w, -z]], using the better-conditioned form.
    let v_high = if z >= 0.0 {
        let n = (2.0 * r * (r + z)).sqrt();
        [C64::new((r + z) / n, 0.0), w / n]
    } else {
        let n = (2.0 * r * (r - z)).sqrt();
        [w.conj() / n, C64::new((r - z) / n, 0.0)]
    };
    let v_low = [-v_high[1].conj(), v_high[0].conj()];
    SpectralFrame {
        e_low: a - r,
        e_high: a + r,
        p_low: outer(&v_low, &v_low),
        p_high: outer(&v_high, &v_high),
        v_low,
        v_high,
        gap,
        degenerate: false,
    }
}

/// `exp(−i·scale·generator)` for Hermitian `generator`, via the Rodrigues form
/// `e^{−iθa}(cos(θ|n|) I − i sin(θ|n|) n̂·σ)`.
pub fn unitary_step(generator: &Mat2, scale: f64) -> Mat2 {
    let g = &generator.0;
    let a = 0.5 * (g[0][0].re + g[1][1].re);
    let nz = 0.5 * (g[0][0].re - g[1][1].re);
    let off = 0.5 * (g[1][0] + g[0][1].conj());
    let (nx, ny) = (off.re, off.im);
    let n = (nx * nx + ny * ny + nz * nz).sqrt();
    let phi = scale * n;
    let (s, c) = phi.sin_cos();
    // sin(θ|n|)/|n| without dividing by zero.
    let sinc = if n > 0.0 { s / n } else { scale };
    let global = C64::from_polar(1.0, -scale * a);
    let u = Mat2::new(
        C64::new(c, -sinc * nz),
        C64::new(-sinc * ny, -sinc * nx),
        C64::new(sinc * ny, -sinc * nx),
        C64::new(c, sinc * nz),
    );
    u.scale(global)
}

/// Re-phases the eigenvectors of `next` so that each overlaps the matching
/// eigenvector of `prev` with a real positive number (discrete parallel transport).
pub fn phase_align(prev: &SpectralFrame, next: &SpectralFrame) -> Result<SpectralFrame> {
    if prev.degenerate {
        return Err(Error::DegenerateSpectrum { gap: prev.gap });
    }
    if next.degenerate {
        return Err(Error::DegenerateSpectrum { gap: next.gap });
    }
    let align = |vp: &Vec2, vn: &Vec2| -> Vec2 {
        let o = inner(vp, vn);
        if o.norm() == 0.0 {
            return *vn;
        }
        let ph = o.conj() / o.norm();
        [vn[0] * ph, vn[1] * ph]
    };
    let mut out = *next;
    out.v_low = align(&prev.v_low, &next.v_low);
    out.v_high = align(&prev.v_high, &next.v_high);
    Ok(out)
}

/// Spectral projector `(2πi)⁻¹∮(z − m)⁻¹dz` over a circle, by the trapezoidal
/// rule (geometrically convergent for a circle that keeps the other eigenvalue
/// at a distance). Works for non-normal `m`.
pub fn riesz_projector(m: &Mat2, center: C64, radius: f64, nodes: usize) -> Option<Mat2> {
    let mut acc = Mat2::zero();
    for k in 0..nodes {
        let e = C64::from_polar(1.0, 2.0 * PI * (k as f64 + 0.5) / nodes as f64);
        let z = center + e * radius;
        let res = (Mat2::identity().scale(z) - *m).inverse()?;
        acc += res.scale(e * radius);
    }
    Some(acc.scale_real(1.0 / nodes as f64))
}

/// Closed-form eigenvalues `tr/2 ∓ s` of a general complex 2×2 matrix, where
/// `s` is the principal square root of the discriminant.
pub fn eigenvalues(m: &Mat2) -> (C64, C64) {
    let half_tr = m.trace() * 0.5;
    let d = (m.0[0][0] - m.0[1][1]) * 0.5;
    let s = (d * d + m.0[0][1] * m.0[1][0]).sqrt();
    (half_tr - s, half_tr + s)
}

/// `exp(m)` for an arbitrary complex 2×2 matrix.
pub fn expm(m: &Mat2) -> Mat2 {
    let half_tr = m.trace() * 0.5;
    let traceless = *m - Mat2::identity().scale(half_tr);
    let s2 = -traceless.det();
    let s = s2.sqrt();
    let (cosh, sinhc) = if s.norm() < 1e-4 {
        // Series for cosh(s) and sinh(s)/s in s².
        (
            ONE + s2 / 2.0 + s2 * s2 / 24.0 + s2 * s2 * s2 / 720.0,
            ONE + s2 / 6.0 + s2 * s2 / 120.0 + s2 * s2 * s2 / 5040.0,
        )
    } else {
        (s.cosh(), s.sinh() / s)
    };
    (Mat2::identity().scale(cosh) + traceless.scale(sinhc)).scale(half_tr.exp())
}
