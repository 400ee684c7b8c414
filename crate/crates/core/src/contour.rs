//! Piecewise complex paths, Gauss–Legendre integration along them, and
//! square-root branch tracking by continuity.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::quadrature::gauss_legendre;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Segment {
    Line { from: C64, to: C64 },
    /// Arc of the circle `center + radius·e^{iφ}` for φ from `start` to `start + sweep`.
    Arc { center: C64, radius: f64, start: f64, sweep: f64 },
}

impl Segment {
    fn point(&self, s: f64) -> (C64, C64) {
        match *self {
            Segment::Line { from, to } => (from + (to - from) * s, to - from),
            Segment::Arc { center, radius, start, sweep } => {
                let phi = start + sweep * s;
                let e = C64::from_polar(radius, phi);
                (center + e, e * C64::new(0.0, sweep))
            }
        }
    }

    fn length(&self) -> f64 {
        match *self {
            Segment::Line { from, to } => (to - from).norm(),
            Segment::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    pub segments: Vec<Segment>,
}

impl Path {
    /// Loop based at `base`: straight to the point of the circle around `z0`
    /// nearest to `base`, once around counter-clockwise, and straight back.
    pub fn loop_around(base: C64, z0: C64, radius: f64) -> Path {
        let dir = (base - z0) / (base - z0).norm();
        let touch = z0 + dir * radius;
        let start = dir.arg();
        Path {
            segments: vec![
                Segment::Line { from: base, to: touch },
                Segment::Arc { center: z0, radius, start, sweep: 2.0 * PI },
                Segment::Line { from: touch, to: base },
            ],
        }
    }

    pub fn segment(from: C64, to: C64) -> Path {
        Path { segments: vec![Segment::Line { from, to }] }
    }

    /// Quadrature nodes `(z, dz-weight)` in path order; panels are sized so
    /// that adjacent nodes are at most `spacing` apart on the scale of the path.
    pub fn nodes(&self, order: usize, spacing: f64) -> Vec<(C64, C64)> {
        let rule = gauss_legendre(order);
        let mut out = Vec::new();
        for seg in &self.segments {
            let len = seg.length();
            if len == 0.0 {
                continue;
            }
            let panels = ((len / spacing).ceil() as usize).max(1);
            for p in 0..panels {
                let (lo, hi) = (p as f64 / panels as f64, (p + 1) as f64 / panels as f64);
                for (x, w) in rule.0.iter().zip(&rule.1) {
                    let s = lo + 0.5 * (hi - lo) * (x + 1.0);
                    let (z, dz) = seg.point(s);
                    out.push((z, dz * (0.5 * (hi - lo) * w)));
                }
            }
        }
        out
    }
}

/// Continues `√w` along a sequence of nearby arguments by choosing the root
/// closest to the previous value.
#[derive(Clone, Copy, Debug)]
pub struct SqrtTracker {
    prev: C64,
}

impl SqrtTracker {
    pub fn new(initial: C64) -> Self {
        SqrtTracker { prev: initial }
    }

    pub fn next(&mut self, w: C64, at: C64) -> Result<C64> {
        let r = w.sqrt();
        let (d_plus, d_minus) = ((r - self.prev).norm(), (r + self.prev).norm());
        let chosen = if d_plus <= d_minus { r } else { -r };
        // Both roots about equally close means the step jumped over a branch point.
        if d_plus.min(d_minus) > 0.5 * d_plus.max(d_minus) && r.norm() > 1e-12 {
            return Err(Error::BranchDiscontinuity { at });
        }
        self.prev = chosen;
        Ok(chosen)
    }

    pub fn value(&self) -> C64 {
        self.prev
    }
}

/// `∫_path f(z) dz` where `make()` returns a fresh stateful integrand that is
/// called in path order. Returns the integral at `2·order` and the difference
/// from the `order` rule as an error estimate.
pub fn path_integral<F, G>(path: &Path, order: usize, spacing: f64, make: G) -> Result<(C64, f64)>
where
    G: Fn() -> F,
    F: FnMut(C64) -> Result<C64>,
{
    let run = |n: usize| -> Result<C64> {
        let mut f = make();
        let mut acc = C64::new(0.0, 0.0);
        for (z, w) in path.nodes(n, spacing) {
            acc += f(z)? * w;
        }
        Ok(acc)
    };
    let coarse = run(order)?;
    let fine = run(2 * order)?;
    Ok((fine, (fine - coarse).norm()))
}
