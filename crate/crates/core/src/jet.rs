//! Truncated Taylor series ("jets") with complex coefficients.
//!
//! A jet of length `n` holds `f(t0 + h) = Σ_{k<n} c_k h^k`. Arithmetic follows
//! the usual power-series recurrences, so derivatives of any order come out
//! exact to rounding, which the superadiabatic hierarchy needs: level `q`
//! depends on the `q`-th derivative of the instantaneous projector.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

use crate::linalg::{Mat2, ONE, ZERO};

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    c: Vec<C64>,
}

impl Jet {
    pub fn constant(v: C64, len: usize) -> Self {
        let mut c = vec![ZERO; len.max(1)];
        c[0] = v;
        Jet { c }
    }

    /// The independent variable expanded at `t0`.
    pub fn variable(t0: C64, len: usize) -> Self {
        let mut j = Jet::constant(t0, len);
        if len > 1 {
            j.c[1] = ONE;
        }
        j
    }

    pub fn from_coeffs(c: Vec<C64>) -> Self {
        assert!(!c.is_empty());
        Jet { c }
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.c
    }

    pub fn value(&self) -> C64 {
        self.c[0]
    }

    /// `d^k f / dt^k` at the expansion point.
    pub fn nth_derivative(&self, k: usize) -> C64 {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        self.c.get(k).copied().unwrap_or(ZERO) * fact
    }

    /// Derivative as a jet one coefficient shorter.
    pub fn derivative(&self) -> Jet {
        if self.c.len() == 1 {
            return Jet::constant(ZERO, 1);
        }
        Jet {
            c: self.c[1..].iter().enumerate().map(|(k, v)| v * (k + 1) as f64).collect(),
        }
    }

    pub fn truncate(&self, len: usize) -> Jet {
        Jet { c: self.c[..len.min(self.c.len()).max(1)].to_vec() }
    }

    pub fn scale(&self, s: C64) -> Jet {
        Jet { c: self.c.iter().map(|v| v * s).collect() }
    }

    pub fn recip(&self) -> Jet {
        Jet::constant(ONE, self.len()) / self.clone()
    }

    pub fn sqrt(&self) -> Jet {
        self.sqrt_with_root(self.c[0].sqrt())
    }

    /// Square root whose constant term is the given root of `c_0`.
    pub fn sqrt_with_root(&self, s0: C64) -> Jet {
        let n = self.len();
        let mut s = vec![ZERO; n];
        s[0] = s0;
        let inv = (s0 * 2.0).inv();
        for k in 1..n {
            let mut acc = self.c[k];
            for j in 1..k {
                acc -= s[j] * s[k - j];
            }
            s[k] = acc * inv;
        }
        Jet { c: s }
    }

    pub fn exp(&self) -> Jet {
        let n = self.len();
        let mut e = vec![ZERO; n];
        e[0] = self.c[0].exp();
        for k in 1..n {
            let mut acc = ZERO;
            for j in 1..=k {
                acc += self.c[j] * e[k - j] * j as f64;
            }
            e[k] = acc / k as f64;
        }
        Jet { c: e }
    }

    pub fn tanh(&self) -> Jet {
        // tanh x = 1 − 2/(e^{2x} + 1)
        let n = self.len();
        let e2 = self.scale(C64::new(2.0, 0.0)).exp();
        let denom = e2 + Jet::constant(ONE, n);
        Jet::constant(ONE, n) - denom.recip().scale(C64::new(2.0, 0.0))
    }
}

fn zip_len(a: &Jet, b: &Jet) -> usize {
    a.len().min(b.len())
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let n = zip_len(&self, &o);
        Jet { c: (0..n).map(|k| self.c[k] + o.c[k]).collect() }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        let n = zip_len(&self, &o);
        Jet { c: (0..n).map(|k| self.c[k] - o.c[k]).collect() }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet { c: self.c.iter().map(|v| -v).collect() }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let n = zip_len(&self, &o);
        let mut c = vec![ZERO; n];
        for (i, a) in self.c.iter().take(n).enumerate() {
            for (j, b) in o.c.iter().take(n - i).enumerate() {
                c[i + j] += a * b;
            }
        }
        Jet { c }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let n = zip_len(&self, &o);
        let inv0 = o.c[0].inv();
        let mut q = vec![ZERO; n];
        for k in 0..n {
            let mut acc = self.c[k];
            for j in 1..=k {
                acc -= o.c[j] * q[k - j];
            }
            q[k] = acc * inv0;
        }
        Jet { c: q }
    }
}

/// Scalars a Hamiltonian family can be evaluated on: plain complex numbers
/// and Taylor jets.
pub trait Scalar:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    /// A constant with the same shape as `self` (same jet length).
    fn lift(&self, v: f64) -> Self;
    fn sqrt(&self) -> Self;
    fn tanh(&self) -> Self;
}

impl Scalar for C64 {
    fn lift(&self, v: f64) -> Self {
        C64::new(v, 0.0)
    }
    fn sqrt(&self) -> Self {
        C64::sqrt(*self)
    }
    fn tanh(&self) -> Self {
        // (1 − e^{−2z})/(1 + e^{−2z}) on Re z ≥ 0 never overflows.
        let z = if self.re < 0.0 { -*self } else { *self };
        let w = (-2.0 * z).exp();
        let t = (ONE - w) / (ONE + w);
        if self.re < 0.0 { -t } else { t }
    }
}

impl Scalar for Jet {
    fn lift(&self, v: f64) -> Self {
        Jet::constant(C64::new(v, 0.0), self.len())
    }
    fn sqrt(&self) -> Self {
        Jet::sqrt(self)
    }
    fn tanh(&self) -> Self {
        Jet::tanh(self)
    }
}

/// 2×2 matrix of jets.
#[derive(Clone, Debug)]
pub struct JetMat2(pub [[Jet; 2]; 2]);

impl JetMat2 {
    pub fn len(&self) -> usize {
        self.0.iter().flatten().map(Jet::len).min().unwrap_or(1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn constant(m: &Mat2, len: usize) -> Self {
        JetMat2([
            [Jet::constant(m.0[0][0], len), Jet::constant(m.0[0][1], len)],
            [Jet::constant(m.0[1][0], len), Jet::constant(m.0[1][1], len)],
        ])
    }

    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> Self {
        let m = &self.0;
        JetMat2([[f(&m[0][0]), f(&m[0][1])], [f(&m[1][0]), f(&m[1][1])]])
    }

    pub fn value(&self) -> Mat2 {
        let m = &self.0;
        Mat2::new(m[0][0].value(), m[0][1].value(), m[1][0].value(), m[1][1].value())
    }

    pub fn coefficient(&self, k: usize) -> Mat2 {
        let m = &self.0;
        let g = |j: &Jet| j.coeffs().get(k).copied().unwrap_or(ZERO);
        Mat2::new(g(&m[0][0]), g(&m[0][1]), g(&m[1][0]), g(&m[1][1]))
    }

    pub fn derivative(&self) -> Self {
        self.map(Jet::derivative)
    }

    pub fn truncate(&self, len: usize) -> Self {
        self.map(|j| j.truncate(len))
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|j| j.scale(s))
    }

    pub fn add(&self, o: &JetMat2) -> Self {
        let (a, b) = (&self.0, &o.0);
        JetMat2([
            [a[0][0].clone() + b[0][0].clone(), a[0][1].clone() + b[0][1].clone()],
            [a[1][0].clone() + b[1][0].clone(), a[1][1].clone() + b[1][1].clone()],
        ])
    }

    pub fn sub(&self, o: &JetMat2) -> Self {
        self.add(&o.scale(C64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, o: &JetMat2) -> Self {
        let (a, b) = (&self.0, &o.0);
        let e = |i: usize, j: usize| a[i][0].clone() * b[0][j].clone() + a[i][1].clone() * b[1][j].clone();
        JetMat2([[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]])
    }

    pub fn commutator(&self, o: &JetMat2) -> Self {
        self.mul(o).sub(&o.mul(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: f64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn complex_tanh_saturates_without_overflow() {
        for x in [400.0, 1e6, -800.0] {
            let t = Scalar::tanh(&C64::new(x, 0.3));
            assert!((t - x.signum()).norm() < 1e-15);
        }
        let z = C64::new(0.4, -0.7);
        assert!((Scalar::tanh(&z) - z.tanh()).norm() < 1e-15);
    }

    #[test]
    fn arithmetic_recurrences() {
        let x = Jet::variable(C64::new(0.3, 0.0), 8);
        // 1/(1−x) at 0.3: derivatives k!/(0.7)^{k+1}
        let f = (Jet::constant(ONE, 8) - x.clone()).recip();
        for k in 0..8 {
            let fact: f64 = (1..=k).map(|i| i as f64).product();
            assert!(close(f.nth_derivative(k), fact / 0.7f64.powi(k as i32 + 1), 1e-10));
        }
        // sqrt(x)^2 = x
        let s = x.sqrt();
        let back = s.clone() * s;
        for k in 0..8 {
            assert!((back.coeffs()[k] - x.coeffs()[k]).norm() < 1e-14);
        }
        // d/dx exp(x) = exp(x)
        let e = x.exp();
        let d = e.derivative();
        for k in 0..7 {
            assert!((d.coeffs()[k] - e.coeffs()[k]).norm() < 1e-14);
        }
    }

    #[test]
    fn tanh_derivatives() {
        let x = Jet::variable(C64::new(0.4, 0.0), 5);
        let t = x.tanh();
        let th = 0.4f64.tanh();
        let sech2 = 1.0 - th * th;
        assert!(close(t.value(), th, 1e-15));
        assert!(close(t.nth_derivative(1), sech2, 1e-14));
        assert!(close(t.nth_derivative(2), -2.0 * th * sech2, 1e-14));
    }
}
