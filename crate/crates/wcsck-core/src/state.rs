//! Torus-invariant Kähler states and the pointwise operators of the one-dimensional reduction.
//!
//! The full potential is `psi = f0 + 2 phi`, so `rho = psi''` is the metric density and
//! `m = psi'` the moment map. With this normalization
//! `Δh = 2h''/rho`, `Jξh = -2h'`, `<ξ,ξ> = 2 rho` and `S = -2 (log rho)''/rho`.

use std::f64::consts::PI;
use std::ops::Range;
use std::sync::Arc;

use crate::background::BackgroundMetric;
use crate::error::{Error, Result};
use crate::forms::InvariantForm;
use crate::grid::Grid;
use crate::weights::Weight;

/// Weight jets `(v, v', v'')` sampled along the moment map.
#[derive(Debug, Clone)]
pub struct WeightSamples {
    pub value: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl WeightSamples {
    pub fn at(weight: &Weight, ys: &[f64]) -> Self {
        let n = ys.len();
        let (mut value, mut d1, mut d2) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for &y in ys {
            let j = weight.jet(y);
            value.push(j.value);
            d1.push(j.d1);
            d2.push(j.d2);
        }
        Self { value, d1, d2 }
    }
}

/// Immutable state: background plus relative potential, with derivative caches.
#[derive(Debug, Clone)]
pub struct ToricKahlerState {
    background: Arc<BackgroundMetric>,
    phi: Vec<f64>,
    dphi: [Vec<f64>; 4],
    moment: Vec<f64>,
    density: Vec<f64>,
    density_d1: Vec<f64>,
    density_d2: Vec<f64>,
    log_ratio: Vec<f64>,
}

impl ToricKahlerState {
    pub fn build(background: Arc<BackgroundMetric>, phi: Vec<f64>) -> Result<Self> {
        let grid = background.grid();
        grid.check_len(&phi)?;
        if let Some(i) = phi.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite potential at node {i}")));
        }
        let d1 = grid.d1(&phi);
        let d2 = grid.d2(&phi);
        let d3 = grid.d1(&d2);
        let d4 = grid.d2(&d2);
        let f = |k: usize| background.derivative(k);
        let n = phi.len();
        let mut moment = vec![0.0; n];
        let mut density = vec![0.0; n];
        let mut density_d1 = vec![0.0; n];
        let mut density_d2 = vec![0.0; n];
        let mut log_ratio = vec![0.0; n];
        for i in 0..n {
            moment[i] = f(1)[i] + 2.0 * d1[i];
            density[i] = f(2)[i] + 2.0 * d2[i];
            density_d1[i] = f(3)[i] + 2.0 * d3[i];
            density_d2[i] = f(4)[i] + 2.0 * d4[i];
            let rel = 2.0 * d2[i] / f(2)[i];
            if !(density[i] > 0.0) || !(rel > -1.0) {
                return Err(Error::KahlerConditionViolated { node: i, x: grid.nodes()[i], density: density[i] });
            }
            log_ratio[i] = rel.ln_1p();
        }
        Ok(Self { background, phi, dphi: [d1, d2, d3, d4], moment, density, density_d1, density_d2, log_ratio })
    }

    /// The background itself (`phi = 0`).
    pub fn background_state(background: Arc<BackgroundMetric>) -> Self {
        let n = background.len();
        Self::build(background, vec![0.0; n]).expect("background is admissible")
    }

    pub fn background(&self) -> &Arc<BackgroundMetric> {
        &self.background
    }

    pub fn grid(&self) -> &Grid {
        self.background.grid()
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// `phi^{(k)}` for `k = 1..=4`.
    pub fn phi_derivative(&self, k: usize) -> &[f64] {
        &self.dphi[k - 1]
    }

    pub fn moment(&self) -> &[f64] {
        &self.moment
    }

    /// Metric density `rho = psi''`.
    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn density_d1(&self) -> &[f64] {
        &self.density_d1
    }

    pub fn density_d2(&self) -> &[f64] {
        &self.density_d2
    }

    /// `log(rho / f0'')`.
    pub fn log_volume_ratio(&self) -> &[f64] {
        &self.log_ratio
    }

    /// `tr_ω ω_φ = rho / f0''`.
    pub fn trace_ratio(&self) -> Vec<f64> {
        self.log_ratio.iter().map(|l| l.exp()).collect()
    }

    pub fn trusted(&self) -> Range<usize> {
        self.background.trusted()
    }

    pub fn trusted_checked(&self) -> Result<Range<usize>> {
        let r = self.trusted();
        if r.is_empty() {
            Err(Error::BoundaryUntrusted)
        } else {
            Ok(r)
        }
    }

    pub fn weight_samples(&self, weight: &Weight) -> WeightSamples {
        WeightSamples::at(weight, &self.moment)
    }

    /// `F = log v(m) + log(rho / f0'')`.
    pub fn f_field(&self, v: &Weight) -> Vec<f64> {
        self.moment.iter().zip(&self.log_ratio).map(|(&m, l)| v.value(m).ln() + l).collect()
    }

    pub fn laplacian(&self, h: &[f64]) -> Vec<f64> {
        let d2 = self.grid().d2(h);
        d2.iter().zip(&self.density).map(|(a, r)| 2.0 * a / r).collect()
    }

    pub fn jxi(&self, h: &[f64]) -> Vec<f64> {
        self.grid().d1(h).into_iter().map(|a| -2.0 * a).collect()
    }

    /// `<ξ,ξ>_φ = 2 rho`.
    pub fn xi_norm(&self) -> Vec<f64> {
        self.density.iter().map(|r| 2.0 * r).collect()
    }

    /// `|∇h|²_φ = 2 h'^2 / rho`.
    pub fn grad_norm_sq(&self, h: &[f64]) -> Vec<f64> {
        let d1 = self.grid().d1(h);
        d1.iter().zip(&self.density).map(|(a, r)| 2.0 * a * a / r).collect()
    }

    /// `(Δ - (v'/v) Jξ) h`.
    pub fn drift_laplacian(&self, v: &Weight, h: &[f64]) -> Vec<f64> {
        let lap = self.laplacian(h);
        let jx = self.jxi(h);
        let ws = self.weight_samples(v);
        (0..self.len()).map(|i| lap[i] - ws.d1[i] / ws.value[i] * jx[i]).collect()
    }

    /// `Δ_φ m_φ = 2 rho' / rho` from the cached density derivatives.
    pub fn laplacian_of_moment(&self) -> Vec<f64> {
        self.density_d1.iter().zip(&self.density).map(|(d, r)| 2.0 * d / r).collect()
    }

    pub fn scalar_curvature(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let (r, r1, r2) = (self.density[i], self.density_d1[i], self.density_d2[i]);
                -2.0 * (r2 * r - r1 * r1) / (r * r * r)
            })
            .collect()
    }

    /// `S_v = v S - 2 v' Δm - v'' <ξ,ξ>`.
    pub fn weighted_scalar_curvature(&self, v: &Weight) -> Vec<f64> {
        let s = self.scalar_curvature();
        let dm = self.laplacian_of_moment();
        let ws = self.weight_samples(v);
        (0..self.len())
            .map(|i| ws.value[i] * s[i] - 2.0 * ws.d1[i] * dm[i] - ws.d2[i] * 2.0 * self.density[i])
            .collect()
    }

    pub fn tr_phi(&self, eta: &InvariantForm) -> Vec<f64> {
        eta.density.iter().zip(&self.density).map(|(d, r)| d / r).collect()
    }

    /// `tr_{v,φ} η = v(m) tr_φ η + v'(m) m_η`.
    pub fn tr_v_phi(&self, v: &Weight, eta: &InvariantForm) -> Vec<f64> {
        let ws = self.weight_samples(v);
        (0..self.len())
            .map(|i| ws.value[i] * eta.density[i] / self.density[i] + ws.d1[i] * eta.hamiltonian[i])
            .collect()
    }

    /// Moment-space lengths of the two truncated tails.
    pub fn tail_lengths(&self) -> (f64, f64) {
        let p = self.background.polytope();
        let n = self.len();
        ((self.moment[0] - p.min()).max(0.0), (p.max() - self.moment[n - 1]).max(0.0))
    }

    /// `∫ g ω_φ`: corrected trapezoid in `x` plus one-point closures of both tails.
    pub fn integrate(&self, g: &[f64]) -> f64 {
        let q = self.grid().trapezoid_weights();
        let n = self.len();
        let body: f64 = (0..n).map(|i| q[i] * g[i] * self.density[i]).sum();
        let (lo, hi) = self.tail_lengths();
        // Euler–Maclaurin end correction with one-sided fourth-order slopes.
        let h = self.grid().spacing();
        let f = |i: usize| g[i] * self.density[i];
        let left = (-25.0 * f(0) + 48.0 * f(1) - 36.0 * f(2) + 16.0 * f(3) - 3.0 * f(4)) / (12.0 * h);
        let right = (25.0 * f(n - 1) - 48.0 * f(n - 2) + 36.0 * f(n - 3) - 16.0 * f(n - 4) + 3.0 * f(n - 5)) / (12.0 * h);
        let correction = -h * h / 12.0 * (right - left);
        2.0 * PI * (body + correction + lo * g[0] + hi * g[n - 1])
    }

    /// `∫ ψ S_v ω_φ` in weak form, using at most third derivatives of `phi`.
    pub fn pairing_sv(&self, v: &Weight, psi: &[f64]) -> f64 {
        let vs = self.weight_samples(v);
        let dpsi = self.grid().d1(psi);
        let q = self.grid().trapezoid_weights();
        let n = self.len();
        let body: f64 = (0..n)
            .map(|i| {
                let g = vs.d1[i] * self.density()[i] + vs.value[i] * self.density_d1()[i] / self.density()[i];
                q[i] * dpsi[i] * g
            })
            .sum();
        let p = self.background().polytope();
        2.0 * PI * (2.0 * body + 2.0 * psi[n - 1] * v.value(p.max()) + 2.0 * psi[0] * v.value(p.min()))
    }

    pub fn area(&self) -> f64 {
        self.integrate(&vec![1.0; self.len()])
    }

    /// `∫ v(m_φ) ω_φ`.
    pub fn weighted_volume(&self, v: &Weight) -> f64 {
        self.integrate(&self.weight_samples(v).value)
    }

    pub fn sup_abs_phi(&self) -> f64 {
        self.phi.iter().fold(0.0, |a, p| a.max(p.abs()))
    }
}

/// Largest absolute value of `a` over `range`.
pub fn max_abs_on(a: &[f64], range: Range<usize>) -> f64 {
    a[range].iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Largest absolute difference of `a - b` over `range`.
pub fn max_diff_on(a: &[f64], b: &[f64], range: Range<usize>) -> f64 {
    range.map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bg(n: usize) -> Arc<BackgroundMetric> {
        Arc::new(BackgroundMetric::standard(n, 12.0).unwrap())
    }

    #[test]
    fn fubini_study_has_constant_curvature() {
        let st = ToricKahlerState::background_state(bg(257));
        let s = st.scalar_curvature();
        for i in 0..st.len() {
            assert!((s[i] - 4.0).abs() < 1e-6, "node {i}: {}", s[i]);
        }
        assert!((st.area() - 2.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn constants_are_gauge() {
        let b = bg(257);
        let a = ToricKahlerState::background_state(b.clone());
        let c = ToricKahlerState::build(b, vec![3.5; 257]).unwrap();
        assert_eq!(a.moment(), c.moment());
        assert_eq!(a.density(), c.density());
    }

    #[test]
    fn degenerate_potential_is_rejected() {
        let b = bg(257);
        let phi: Vec<f64> = b.potential().iter().map(|f| -f).collect();
        assert!(matches!(ToricKahlerState::build(b, phi), Err(Error::KahlerConditionViolated { .. })));
    }

    #[test]
    fn f_field_of_exponential_weight_is_moment() {
        let st = ToricKahlerState::background_state(bg(129));
        let f = st.f_field(&Weight::exponential(1.0));
        for i in 0..st.len() {
            assert!((f[i] - st.moment()[i]).abs() < 1e-14);
        }
    }
}
