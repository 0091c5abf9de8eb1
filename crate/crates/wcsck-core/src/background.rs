//! Fubini–Study type background profile `f0(x) = a x + |P| log(1 + e^x)`.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::polytope::Polytope;

/// Derivatives of the background profile at one point, orders 0 through 4.
pub type ProfileJet = [f64; 5];

/// Logistic function, evaluated without overflow.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Analytic profile on a given polytope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FubiniStudy {
    pub a: f64,
    pub length: f64,
}

impl FubiniStudy {
    pub fn new(polytope: &Polytope) -> Result<Self> {
        let (a, b) = polytope.as_interval()?;
        Ok(Self { a, length: b - a })
    }

    pub fn jet(&self, x: f64) -> ProfileJet {
        let c = self.length;
        let s = logistic(x);
        let e = (-x.abs()).exp();
        // s(1 - s) = e^{-|x|} / (1 + e^{-|x|})^2 keeps full relative precision in both tails.
        let p = e / ((1.0 + e) * (1.0 + e));
        let t = (-0.5 * x).tanh();
        [
            self.a * x + c * softplus(x),
            self.a + c * s,
            c * p,
            c * p * t,
            c * p * (1.0 - 6.0 * p),
        ]
    }

    /// Distance of the moment `f0'(x)` to the lower and upper faces.
    pub fn face_distances(&self, x: f64) -> (f64, f64) {
        (self.length * logistic(x), self.length * logistic(-x))
    }
}

/// Background profile sampled on a grid, with its Ricci form and trusted window.
#[derive(Debug, Clone)]
pub struct BackgroundMetric {
    grid: Grid,
    polytope: Polytope,
    profile: FubiniStudy,
    f: [Vec<f64>; 5],
    ricci_hamiltonian: Vec<f64>,
    ricci_density: Vec<f64>,
    trusted: (usize, usize),
}

impl BackgroundMetric {
    pub fn fubini_study(grid: Grid, polytope: Polytope) -> Result<Self> {
        let profile = FubiniStudy::new(&polytope)?;
        let n = grid.len();
        let mut f: [Vec<f64>; 5] = Default::default();
        for k in 0..5 {
            f[k] = vec![0.0; n];
        }
        for (i, &x) in grid.nodes().iter().enumerate() {
            let j = profile.jet(x);
            for k in 0..5 {
                f[k][i] = j[k];
            }
        }
        if let Some(i) = f[2].iter().position(|&d| !(d > 0.0)) {
            return Err(Error::KahlerConditionViolated { node: i, x: grid.nodes()[i], density: f[2][i] });
        }
        let ricci_hamiltonian = (0..n).map(|i| -2.0 * f[3][i] / f[2][i]).collect();
        let ricci_density = (0..n).map(|i| -2.0 * (f[4][i] / f[2][i] - (f[3][i] / f[2][i]).powi(2))).collect();
        let trusted = trusted_window(&grid, &profile);
        Ok(Self { grid, polytope, profile, f, ricci_hamiltonian, ricci_density, trusted })
    }

    /// Unit interval, `N` nodes on `[-L, L]`.
    pub fn standard(n: usize, half_width: f64) -> Result<Self> {
        Self::fubini_study(Grid::new(n, half_width)?, Polytope::unit())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn polytope(&self) -> &Polytope {
        &self.polytope
    }

    pub fn profile(&self) -> FubiniStudy {
        self.profile
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// `f0^{(k)}` on the grid.
    pub fn derivative(&self, k: usize) -> &[f64] {
        &self.f[k]
    }

    pub fn potential(&self) -> &[f64] {
        &self.f[0]
    }

    pub fn moment(&self) -> &[f64] {
        &self.f[1]
    }

    pub fn density(&self) -> &[f64] {
        &self.f[2]
    }

    /// Hamiltonian of `Ric(omega)`; equals `-Δ_ω m_ω`.
    pub fn ricci_hamiltonian(&self) -> &[f64] {
        &self.ricci_hamiltonian
    }

    pub fn ricci_density(&self) -> &[f64] {
        &self.ricci_density
    }

    /// `Δ_ω m_ω = 2 f0''' / f0''`.
    pub fn laplacian_of_moment(&self) -> Vec<f64> {
        self.ricci_hamiltonian.iter().map(|r| -r).collect()
    }

    /// Half-open index range of trusted nodes.
    pub fn trusted(&self) -> std::ops::Range<usize> {
        self.trusted.0..self.trusted.1
    }

    pub fn area(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.polytope.length()
    }
}

fn trusted_window(grid: &Grid, profile: &FubiniStudy) -> (usize, usize) {
    let n = grid.len();
    let guard = grid.stencil_guard();
    let margin = grid.trust().moment_margin * profile.length;
    let ok = |i: usize| {
        let (lo, hi) = profile.face_distances(grid.nodes()[i]);
        i >= guard && i + guard < n && lo >= margin && hi >= margin
    };
    let start = (0..n).find(|&i| ok(i)).unwrap_or(n);
    let end = (start..n).rev().find(|&i| ok(i)).map_or(start, |i| i + 1);
    (start, end)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_matches_finite_differences() {
        let p = FubiniStudy { a: -0.5, length: 2.0 };
        let e = 1e-4;
        for x in [-3.0, -0.2, 0.0, 1.7, 5.0] {
            let j = p.jet(x);
            let (jp, jm) = (p.jet(x + e), p.jet(x - e));
            for k in 0..4 {
                let fd = (jp[k] - jm[k]) / (2.0 * e);
                assert!((fd - j[k + 1]).abs() < 1e-7, "order {k} at {x}");
            }
        }
    }

    #[test]
    fn ricci_of_fubini_study_is_proportional() {
        let bg = BackgroundMetric::standard(129, 12.0).unwrap();
        for i in 0..bg.len() {
            let d = bg.density()[i];
            assert!((bg.ricci_density()[i] - 4.0 * d).abs() <= 1e-12 * (1.0 + d));
            assert!((bg.ricci_hamiltonian()[i] - (4.0 * bg.moment()[i] - 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn trusted_window_respects_margin() {
        let bg = BackgroundMetric::standard(257, 12.0).unwrap();
        let r = bg.trusted();
        assert!(r.start >= 15 && r.end <= 257 - 15);
        assert!(bg.moment()[r.start] >= 0.01 && bg.moment()[r.end - 1] <= 0.99);
        assert!(bg.moment()[r.start - 1] < 0.01);
    }
}
