//! Energies along the segment `phi_t = phi0 + t (phi - phi0)` by adaptive Simpson quadrature in `t`.

use crate::error::{Error, Result};
use crate::forms::InvariantForm;
use crate::state::ToricKahlerState;

use super::FunctionalContext;

/// Un-normalized path energies between two potentials.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PathEnergies {
    /// `∫∫ u v(m_t) ω_t dt`.
    pub ev: f64,
    /// `∫∫ u tr_{v,t} Ric(ω) ω_t dt`.
    pub ric: f64,
    /// `∫∫ u w(m_t) ℓ_ext(m_t) ω_t dt`.
    pub w_ell: f64,
    /// `∫∫ u tr_{v,t} θ ω_t dt`.
    pub theta: f64,
    /// `∫∫ u w(m_t) ω_t dt`.
    pub w: f64,
    pub nodes: usize,
    pub error: f64,
}

/// Quadrature settings in the path parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathQuadrature {
    pub initial_nodes: usize,
    pub max_nodes: usize,
    pub tolerance: f64,
}

impl Default for PathQuadrature {
    fn default() -> Self {
        Self { initial_nodes: 33, max_nodes: 1025, tolerance: 1e-8 }
    }
}

/// Integrals in `t` of several integrands, with node count and change under the last doubling.
#[derive(Debug, Clone, PartialEq)]
pub struct PathIntegral {
    pub values: Vec<f64>,
    pub nodes: usize,
    pub error: f64,
}

fn simpson(values: &[Vec<f64>]) -> Vec<f64> {
    let n = values.len();
    let h = 1.0 / (n - 1) as f64;
    let mut acc = vec![0.0; values[0].len()];
    for (k, v) in values.iter().enumerate() {
        let c = if k == 0 || k == n - 1 { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
        for (a, x) in acc.iter_mut().zip(v) {
            *a += c * x;
        }
    }
    acc.into_iter().map(|a| a * h / 3.0).collect()
}

impl FunctionalContext {
    /// `∫_0^1 g(phi_t, u) dt` for a vector-valued `g`, doubling nodes until converged.
    pub fn path_integral<G>(&self, phi: &[f64], phi0: &[f64], g: G) -> Result<PathIntegral>
    where
        G: Fn(&ToricKahlerState, &[f64]) -> Vec<f64>,
    {
        self.background.grid().check_len(phi)?;
        self.background.grid().check_len(phi0)?;
        let u: Vec<f64> = phi.iter().zip(phi0).map(|(a, b)| a - b).collect();
        let eval = |t: f64| -> Result<Vec<f64>> {
            let phi_t: Vec<f64> = phi0.iter().zip(&u).map(|(a, b)| a + t * b).collect();
            let st = ToricKahlerState::build(self.background.clone(), phi_t).map_err(|_| Error::PathLeavesKahlerCone { t })?;
            Ok(g(&st, &u))
        };
        if u.iter().all(|x| *x == 0.0) {
            let zeros = vec![0.0; eval(0.0)?.len()];
            return Ok(PathIntegral { values: zeros, nodes: 1, error: 0.0 });
        }
        let q = self.quadrature;
        let mut n = q.initial_nodes.max(3) | 1;
        let mut samples: Vec<Vec<f64>> = (0..n).map(|k| eval(k as f64 / (n - 1) as f64)).collect::<Result<_>>()?;
        let mut current = simpson(&samples);
        let mut error = f64::INFINITY;
        while error >= q.tolerance && 2 * n - 1 <= q.max_nodes {
            let m = 2 * n - 1;
            let mut refined = Vec::with_capacity(m);
            for (k, s) in samples.into_iter().enumerate() {
                refined.push(s);
                if k + 1 < n {
                    refined.push(eval((2 * k + 1) as f64 / (m - 1) as f64)?);
                }
            }
            let next = simpson(&refined);
            error = next.iter().zip(&current).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            samples = refined;
            n = m;
            current = next;
        }
        Ok(PathIntegral { values: current, nodes: n, error })
    }

    /// All raw path energies of `phi` relative to `phi0`.
    pub fn path_energies(&self, phi: &[f64], phi0: &[f64]) -> Result<PathEnergies> {
        let r = self.path_integral(phi, phi0, |st, u| {
            let v = &self.weights.v;
            let vs = st.weight_samples(v);
            let ws = st.weight_samples(&self.weights.w);
            let ric = st.tr_v_phi(v, &self.ricci);
            let th = st.tr_v_phi(v, &self.theta.form);
            let n = st.len();
            let ell: Vec<f64> = st.moment().iter().map(|&m| self.ell.eval(m)).collect();
            let int = |f: &dyn Fn(usize) -> f64| st.integrate(&(0..n).map(|i| u[i] * f(i)).collect::<Vec<_>>());
            vec![
                int(&|i| vs.value[i]),
                int(&|i| ric[i]),
                int(&|i| ws.value[i] * ell[i]),
                int(&|i| th[i]),
                int(&|i| ws.value[i]),
            ]
        })?;
        let v = &r.values;
        Ok(PathEnergies { ev: v[0], ric: v[1], w_ell: v[2], theta: v[3], w: v[4], nodes: r.nodes, error: r.error })
    }

    /// `E_v(phi, phi0)`, normalized by the weighted volume.
    pub fn energy_ev(&self, phi: &[f64], phi0: &[f64]) -> Result<f64> {
        let r = self.path_integral(phi, phi0, |st, u| vec![st.integrate(&weighted(u, &st.weight_samples(&self.weights.v).value))])?;
        Ok(r.values[0] / self.volume_v)
    }

    /// `E_v^η(phi, phi0)`, normalized by the weighted volume.
    pub fn energy_ev_eta(&self, phi: &[f64], phi0: &[f64], eta: &InvariantForm) -> Result<f64> {
        let r = self.path_integral(phi, phi0, |st, u| vec![st.integrate(&weighted(u, &st.tr_v_phi(&self.weights.v, eta)))])?;
        Ok(r.values[0] / self.volume_v)
    }
}

fn weighted(u: &[f64], g: &[f64]) -> Vec<f64> {
    u.iter().zip(g).map(|(a, b)| a * b).collect()
}
