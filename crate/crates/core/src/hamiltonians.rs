//! Analytic two-level Hamiltonian families `z ↦ H(z)`.
//!
//! Each family carries its own complex-analytic metadata (strip of
//! analyticity, decay exponent, limits at ±∞, a seed for the complex
//! crossing point) so the asymptotics code never has to guess it.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::jet::{Jet, JetMat2, Scalar};
use crate::linalg::{eigen_decompose, HermitianMatrix2, Mat2, SpectralFrame};

#[derive(Clone, Debug, PartialEq)]
pub enum FamilyKind {
    /// `½[[t, δ], [δ, −t]]`.
    Zener,
    /// `(2√(t²+δ²))⁻¹ [[δ, t], [t, −δ]]`, eigenvalues ±½ for every real t.
    ConstantGap,
    /// `½[[tanh x, δ], [δ, −tanh x]]`, optionally mirrored `x → −x`.
    Tanh { mirrored: bool },
    /// A time-independent matrix.
    Constant(Mat2),
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianFamily {
    pub kind: FamilyKind,
    pub delta: f64,
    /// Half-width of the analyticity strip (exclusive).
    pub strip_mu: f64,
    /// Algebraic decay exponent towards the limits, `None` when there are no limits.
    pub decay_nu: Option<f64>,
    pub limits: Option<(Mat2, Mat2)>,
    /// Seed for the complex crossing / singularity in the upper half plane.
    pub zero_guess: C64,
}

impl HamiltonianFamily {
    pub fn zener(delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidParameter(format!("zener delta must be > 0, got {delta}")));
        }
        Ok(HamiltonianFamily {
            kind: FamilyKind::Zener,
            delta,
            strip_mu: f64::INFINITY,
            decay_nu: None,
            limits: None,
            zero_guess: C64::new(0.0, delta),
        })
    }

    pub fn constant_gap(delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidParameter(format!("constant_gap delta must be > 0, got {delta}")));
        }
        Ok(HamiltonianFamily {
            kind: FamilyKind::ConstantGap,
            delta,
            strip_mu: delta,
            // The σz component δ/(2√(t²+δ²)) decays like 1/t.
            decay_nu: Some(1.0),
            limits: Some((Mat2::from_real(0.0, -0.5, -0.5, 0.0), Mat2::from_real(0.0, 0.5, 0.5, 0.0))),
            zero_guess: C64::new(0.0, delta),
        })
    }

    pub fn tanh_model(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!("tanh_model delta must lie in (0, 1), got {delta}")));
        }
        Ok(Self::tanh_unchecked(delta, false))
    }

    /// The tanh model with the avoided crossing switched off (δ = 0): the two
    /// diabatic channels decouple and cross at x = 0.
    pub fn tanh_decoupled() -> Self {
        Self::tanh_unchecked(0.0, false)
    }

    /// `x ↦ h(−x)` for the tanh model.
    pub fn mirrored(&self) -> Result<Self> {
        match self.kind {
            FamilyKind::Tanh { mirrored } => {
                let mut m = Self::tanh_unchecked(self.delta, !mirrored);
                m.limits = self.limits.map(|(a, b)| (b, a));
                Ok(m)
            }
            _ => Err(Error::InvalidParameter("only the tanh model can be mirrored".into())),
        }
    }

    fn tanh_unchecked(delta: f64, mirrored: bool) -> Self {
        let s = if mirrored { -1.0 } else { 1.0 };
        HamiltonianFamily {
            kind: FamilyKind::Tanh { mirrored },
            delta,
            strip_mu: FRAC_PI_2,
            decay_nu: Some(3.0),
            limits: Some((
                Mat2::from_real(-0.5 * s, 0.5 * delta, 0.5 * delta, 0.5 * s),
                Mat2::from_real(0.5 * s, 0.5 * delta, 0.5 * delta, -0.5 * s),
            )),
            zero_guess: C64::new(0.0, delta),
        }
    }

    pub fn constant(m: Mat2) -> Result<Self> {
        HermitianMatrix2::new(m)?;
        Ok(HamiltonianFamily {
            kind: FamilyKind::Constant(m),
            delta: 0.0,
            strip_mu: f64::INFINITY,
            decay_nu: None,
            limits: Some((m, m)),
            zero_guess: C64::new(0.0, 1.0),
        })
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FamilyKind::Zener => "zener",
            FamilyKind::ConstantGap => "constant_gap",
            FamilyKind::Tanh { .. } => "tanh_model",
            FamilyKind::Constant(_) => "constant",
        }
    }

    /// `H(z)` for any scalar type (complex numbers or Taylor jets).
    pub fn evaluate<S: Scalar>(&self, z: &S) -> [[S; 2]; 2] {
        let d = z.lift(self.delta);
        let half = z.lift(0.5);
        match &self.kind {
            FamilyKind::Zener => {
                let a = half.clone() * z.clone();
                let b = half * d;
                [[a.clone(), b.clone()], [b, -a]]
            }
            FamilyKind::ConstantGap => {
                let r = (z.clone() * z.clone() + d.clone() * d.clone()).sqrt();
                let inv = half / r;
                let a = inv.clone() * d;
                let b = inv * z.clone();
                [[a.clone(), b.clone()], [b, -a]]
            }
            FamilyKind::Tanh { mirrored } => {
                let t = if *mirrored { -z.tanh() } else { z.tanh() };
                let a = half.clone() * t;
                let b = half * d;
                [[a.clone(), b.clone()], [b, -a]]
            }
            FamilyKind::Constant(m) => {
                let c = |v: C64| {
                    // Constants are real for Hermitian storage of the diagonal; the
                    // off-diagonal may be complex, so build it from two lifts.
                    z.lift(v.re) + z.lift(v.im) * imag_unit(z)
                };
                [[c(m.0[0][0]), c(m.0[0][1])], [c(m.0[1][0]), c(m.0[1][1])]]
            }
        }
    }

    pub fn at(&self, t: f64) -> Mat2 {
        self.at_complex(C64::new(t, 0.0))
    }

    pub fn at_complex(&self, z: C64) -> Mat2 {
        let m = self.evaluate(&z);
        Mat2::new(m[0][0], m[0][1], m[1][0], m[1][1])
    }

    /// Taylor jet of `H` at real `t` with `len` coefficients.
    pub fn jet(&self, t: f64, len: usize) -> JetMat2 {
        let z = Jet::variable(C64::new(t, 0.0), len);
        let [[a, b], [c, d]] = self.evaluate(&z);
        JetMat2([[a, b], [c, d]])
    }

    /// `d^order H / dt^order` at real `t`, from the Taylor expansion.
    pub fn derivative(&self, t: f64, order: usize) -> Mat2 {
        let j = self.jet(t, order + 1);
        let fact: f64 = (1..=order).map(|i| i as f64).product();
        j.coefficient(order).scale_real(fact)
    }

    pub fn hermitian_at(&self, t: f64) -> Result<HermitianMatrix2> {
        HermitianMatrix2::new(self.at(t))
    }

    pub fn frame(&self, t: f64) -> Result<SpectralFrame> {
        Ok(eigen_decompose(&self.hermitian_at(t)?))
    }

    /// `ρ² = (h₀₀ − h₁₁)² + 4h₀₁h₁₀`, analytic wherever `H` is.
    pub fn rho_squared<S: Scalar>(&self, z: &S) -> S {
        let [[a, b], [c, d]] = self.evaluate(z);
        let diff = a - d;
        diff.clone() * diff + z.lift(4.0) * b * c
    }

    /// Eigenvalue gap on the real axis.
    pub fn gap(&self, t: f64) -> f64 {
        self.rho_squared(&C64::new(t, 0.0)).re.max(0.0).sqrt()
    }

    pub fn gap_function(&self) -> GapFunction {
        GapFunction { family: self.clone(), zero_guess: self.zero_guess }
    }

    /// `(‖H(−T) − H(−∞)‖, ‖H(T) − H(+∞)‖)` when limits are declared.
    pub fn limit_deviation(&self, t: f64) -> Option<(f64, f64)> {
        self.limits
            .map(|(lo, hi)| ((self.at(-t) - lo).norm(), (self.at(t) - hi).norm()))
    }
}

fn imag_unit<S: Scalar>(z: &S) -> S {
    // i = √(−1) on the principal branch.
    z.lift(-1.0).sqrt()
}

/// Gap function `ρ(z)` of a family with a seed for its complex zero.
#[derive(Clone, Debug, PartialEq)]
pub struct GapFunction {
    pub family: HamiltonianFamily,
    pub zero_guess: C64,
}

impl GapFunction {
    pub fn rho_squared(&self, z: C64) -> C64 {
        self.family.rho_squared(&z)
    }

    /// Principal-branch `ρ(z)`; positive on the real axis.
    pub fn rho(&self, z: C64) -> C64 {
        self.rho_squared(z).sqrt()
    }

    /// `(ρ², d ρ²/dz)` at complex `z`.
    pub fn rho_squared_with_derivative(&self, z: C64) -> (C64, C64) {
        let j = Jet::variable(z, 2);
        let r = self.family.rho_squared(&j);
        (r.value(), r.nth_derivative(1))
    }
}
