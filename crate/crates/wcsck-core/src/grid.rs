//! Uniform grid in the log orbit coordinate and fourth-order difference stencils.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Width of one difference stencil in nodes.
pub const STENCIL_WIDTH: usize = 5;

/// Which nodes are trusted for pointwise comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustPolicy {
    /// Number of stencil widths excluded at each end.
    pub stencil_widths: usize,
    /// Relative margin of the background moment away from the polytope faces.
    pub moment_margin: f64,
}

impl Default for TrustPolicy {
    fn default() -> Self {
        Self { stencil_widths: 3, moment_margin: 0.01 }
    }
}

/// Uniform grid `x_i = -L + i h` on `[-L, L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    n: usize,
    half_width: f64,
    h: f64,
    x: Vec<f64>,
    trust: TrustPolicy,
}

impl Grid {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        Self::with_trust(n, half_width, TrustPolicy::default())
    }

    pub fn with_trust(n: usize, half_width: f64, trust: TrustPolicy) -> Result<Self> {
        if n < 4 * STENCIL_WIDTH {
            return Err(Error::InvalidInput(format!("grid needs at least {} nodes, got {n}", 4 * STENCIL_WIDTH)));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidInput(format!("half width must be positive, got {half_width}")));
        }
        if !(0.0..0.5).contains(&trust.moment_margin) {
            return Err(Error::InvalidInput(format!("moment margin must lie in [0, 0.5), got {}", trust.moment_margin)));
        }
        let h = 2.0 * half_width / (n - 1) as f64;
        let x = (0..n).map(|i| -half_width + i as f64 * h).collect();
        Ok(Self { n, half_width, h, x, trust })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    pub fn trust(&self) -> TrustPolicy {
        self.trust
    }

    /// Nodes excluded at each end purely for stencil reasons.
    pub fn stencil_guard(&self) -> usize {
        self.trust.stencil_widths * STENCIL_WIDTH
    }

    /// Trapezoid weights in `x` (without the angular factor).
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let mut q = vec![self.h; self.n];
        q[0] *= 0.5;
        q[self.n - 1] *= 0.5;
        q
    }

    pub fn check_len(&self, values: &[f64]) -> Result<()> {
        if values.len() == self.n {
            Ok(())
        } else {
            Err(Error::GridMismatch { expected: self.n, found: values.len() })
        }
    }

    pub fn d1(&self, f: &[f64]) -> Vec<f64> {
        d1(f, self.h)
    }

    pub fn d2(&self, f: &[f64]) -> Vec<f64> {
        d2(f, self.h)
    }
}

const D1_INTERIOR: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
const D1_EDGE0: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
const D1_EDGE1: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];
const D2_INTERIOR: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];
const D2_EDGE0: [f64; 6] = [45.0, -154.0, 214.0, -156.0, 61.0, -10.0];
const D2_EDGE1: [f64; 6] = [10.0, -15.0, -4.0, 14.0, -6.0, 1.0];

fn dot(c: &[f64], f: &[f64]) -> f64 {
    c.iter().zip(f).map(|(a, b)| a * b).sum()
}

fn dot_rev(c: &[f64], f: &[f64]) -> f64 {
    c.iter().zip(f.iter().rev()).map(|(a, b)| a * b).sum()
}

/// Fourth-order first derivative with one-sided closures at the ends.
pub fn d1(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 6, "d1 needs at least 6 nodes");
    let s = 1.0 / (12.0 * h);
    let mut out = vec![0.0; n];
    for i in 2..n - 2 {
        out[i] = dot(&D1_INTERIOR, &f[i - 2..i + 3]) * s;
    }
    out[0] = dot(&D1_EDGE0, &f[0..5]) * s;
    out[1] = dot(&D1_EDGE1, &f[0..5]) * s;
    out[n - 1] = -dot_rev(&D1_EDGE0, &f[n - 5..n]) * s;
    out[n - 2] = -dot_rev(&D1_EDGE1, &f[n - 5..n]) * s;
    out
}

/// Fourth-order second derivative with one-sided closures at the ends.
pub fn d2(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 6, "d2 needs at least 6 nodes");
    let s = 1.0 / (12.0 * h * h);
    let mut out = vec![0.0; n];
    for i in 2..n - 2 {
        out[i] = dot(&D2_INTERIOR, &f[i - 2..i + 3]) * s;
    }
    out[0] = dot(&D2_EDGE0, &f[0..6]) * s;
    out[1] = dot(&D2_EDGE1, &f[0..6]) * s;
    out[n - 1] = dot_rev(&D2_EDGE0, &f[n - 6..n]) * s;
    out[n - 2] = dot_rev(&D2_EDGE1, &f[n - 6..n]) * s;
    out
}

/// Least-squares slope of `log r` against `log h`.
pub fn fitted_order(spacings: &[f64], residuals: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = spacings
        .iter()
        .zip(residuals)
        .filter(|(_, r)| **r > 0.0 && r.is_finite())
        .map(|(h, r)| (h.ln(), r.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_err(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn stencils_are_exact_on_quartics() {
        let g = Grid::new(41, 2.0).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|x| x.powi(4) - 2.0 * x.powi(3) + x).collect();
        let df: Vec<f64> = g.nodes().iter().map(|x| 4.0 * x.powi(3) - 6.0 * x * x + 1.0).collect();
        let ddf: Vec<f64> = g.nodes().iter().map(|x| 12.0 * x * x - 12.0 * x).collect();
        assert!(max_err(&g.d1(&f), &df) < 1e-10);
        assert!(max_err(&g.d2(&f), &ddf) < 1e-9);
    }

    #[test]
    fn stencils_converge_at_fourth_order() {
        let mut hs = Vec::new();
        let mut errs = Vec::new();
        for n in [41, 81, 161] {
            let g = Grid::new(n, 2.0).unwrap();
            let f: Vec<f64> = g.nodes().iter().map(|x| x.sin()).collect();
            let ddf: Vec<f64> = g.nodes().iter().map(|x| -x.sin()).collect();
            hs.push(g.spacing());
            errs.push(max_err(&g.d2(&f), &ddf));
        }
        assert!(fitted_order(&hs, &errs).unwrap() > 3.5);
    }

    #[test]
    fn rejects_tiny_grids() {
        assert!(Grid::new(8, 1.0).is_err());
        assert!(Grid::new(64, -1.0).is_err());
    }
}
