//! Weighted energy functionals, the Mabuchi functional and its twisted variant.
//!
//! `E`-type functionals are reported normalized by the weighted volume. The Mabuchi
//! functionals are assembled from the un-normalized energies, so that their first
//! variation is exactly `-∫ ψ (S_v - w ℓ_ext) ω_φ`.

mod energy;
mod geodesic;
mod torus;

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::background::BackgroundMetric;
use crate::error::Result;
use crate::forms::{InvariantForm, TwistForm, TwistPreset};
use crate::invariants::{ell_ext, theta_bar, AffineFunction};
use crate::state::ToricKahlerState;
use crate::weights::WeightPair;

pub use energy::{PathEnergies, PathIntegral, PathQuadrature};
pub use geodesic::{legendre_ray, toric_geodesic, SymplecticRay};
pub use torus::{coercivity_probe, pullback, CoercivityFit, FutakiReport, ReducedJ};

/// Everything fixed by `(background, weights, θ)`; cheap to clone and share across threads.
#[derive(Debug, Clone)]
pub struct FunctionalContext {
    pub background: Arc<BackgroundMetric>,
    pub weights: WeightPair,
    pub ell: AffineFunction,
    pub theta: TwistForm,
    pub theta_bar: f64,
    pub ricci: InvariantForm,
    pub volume_v: f64,
    pub volume_w: f64,
    pub c0: f64,
    pub quadrature: PathQuadrature,
}

/// I/J/Λ values with the independent mixed-term evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IjValues {
    pub i: f64,
    pub j: f64,
    pub lambda: f64,
    pub i_mixed: f64,
    pub j_mixed: f64,
}

/// All functionals of one state relative to the background.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalReport {
    pub e_v: f64,
    pub lambda_v: f64,
    pub i_v: f64,
    pub j_v: f64,
    pub j_v_torus: f64,
    pub h_v: f64,
    pub e_v_ric: f64,
    pub e_w_ell: f64,
    pub mabuchi: f64,
    pub mabuchi_t: f64,
    pub j_theta: f64,
    pub path_nodes: usize,
    pub quadrature_error: f64,
}

/// Outcome of comparing the derivative of the Mabuchi functional with its Euler–Lagrange pairing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VariationalCheck {
    pub finite_difference: f64,
    pub pairing: f64,
    pub residual: f64,
}

impl FunctionalContext {
    pub fn new(background: Arc<BackgroundMetric>, weights: WeightPair, twist: TwistPreset) -> Result<Self> {
        let base = ToricKahlerState::background_state(background.clone());
        let theta = TwistForm::new(twist, &background, &weights)?;
        let ell = ell_ext(&base, &weights)?;
        let tb = theta_bar(&base, &weights, &theta.form);
        let vs = base.weight_samples(&weights.v);
        let c0 = base.integrate(&vs.value.iter().map(|v| v.ln() * v).collect::<Vec<_>>());
        Ok(Self {
            ricci: InvariantForm::ricci(&background),
            volume_v: base.weighted_volume(&weights.v),
            volume_w: base.weighted_volume(&weights.w),
            background,
            weights,
            ell,
            theta,
            theta_bar: tb,
            c0,
            quadrature: PathQuadrature::default(),
        })
    }

    /// Same context with a different affine target (used for negative controls).
    pub fn with_ell(&self, ell: AffineFunction) -> Self {
        Self { ell, ..self.clone() }
    }

    pub fn state(&self, phi: Vec<f64>) -> Result<ToricKahlerState> {
        ToricKahlerState::build(self.background.clone(), phi)
    }

    fn zero(&self) -> Vec<f64> {
        vec![0.0; self.background.len()]
    }

    /// `H_v = ∫ log(v(m) ω_φ / ω) v(m) ω_φ`.
    pub fn entropy_hv(&self, phi: &[f64]) -> Result<f64> {
        let st = self.state(phi.to_vec())?;
        let f = st.f_field(&self.weights.v);
        let vs = st.weight_samples(&self.weights.v);
        Ok(st.integrate(&f.iter().zip(&vs.value).map(|(a, b)| a * b).collect::<Vec<_>>()))
    }

    /// `M = H_v - C0 - E^Ric + E_{wℓ}` relative to the background.
    pub fn mabuchi(&self, phi: &[f64]) -> Result<f64> {
        let e = self.path_energies(phi, &self.zero())?;
        Ok(self.entropy_hv(phi)? - self.c0 - e.ric + e.w_ell)
    }

    /// `M_t = M + ((1-t)/t) (E^θ - θ̄ E_w)`.
    pub fn mabuchi_twisted(&self, phi: &[f64], t: f64) -> Result<f64> {
        let e = self.path_energies(phi, &self.zero())?;
        let m = self.entropy_hv(phi)? - self.c0 - e.ric + e.w_ell;
        Ok(m + (1.0 - t) / t * (e.theta - self.theta_bar * e.w))
    }

    /// `J^θ = E^θ - θ̄ E_w` (un-normalized).
    pub fn j_theta(&self, phi: &[f64]) -> Result<f64> {
        let e = self.path_energies(phi, &self.zero())?;
        Ok(e.theta - self.theta_bar * e.w)
    }

    /// `I_v`, `J_v`, `Λ_v` relative to `phi0`, with mixed-term cross-checks.
    pub fn functionals_ij(&self, phi: &[f64], phi0: &[f64]) -> Result<IjValues> {
        let st = self.state(phi.to_vec())?;
        let st0 = self.state(phi0.to_vec())?;
        let u: Vec<f64> = phi.iter().zip(phi0).map(|(a, b)| a - b).collect();
        let v0 = st0.weight_samples(&self.weights.v).value;
        let v1 = st.weight_samples(&self.weights.v).value;
        let lambda = st0.integrate(&u.iter().zip(&v0).map(|(a, b)| a * b).collect::<Vec<_>>()) / self.volume_v;
        let last = st.integrate(&u.iter().zip(&v1).map(|(a, b)| a * b).collect::<Vec<_>>()) / self.volume_v;
        let i = lambda - last;
        let j = lambda - self.energy_ev(phi, phi0)?;
        let (i_mixed, j_mixed) = self.mixed_ij(&st0, &u);
        Ok(IjValues { i, j, lambda, i_mixed, j_mixed })
    }

    /// `(2π/𝕍) ∫∫ k(s) v(m_s) 2u'^2 ds dx` with `k = 1` and `k = 1 - s`.
    pub(crate) fn mixed_ij(&self, st0: &ToricKahlerState, u: &[f64]) -> (f64, f64) {
        const GL: [(f64, f64); 8] = [
            (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
            (-0.796_666_477_413_626_7, 0.222_381_034_453_374_48),
            (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
            (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
            (0.183_434_642_495_649_8, 0.362_683_783_378_362),
            (0.525_532_409_916_329, 0.313_706_645_877_887_3),
            (0.796_666_477_413_626_7, 0.222_381_034_453_374_48),
            (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
        ];
        let du = self.background.grid().d1(u);
        let q = self.background.grid().trapezoid_weights();
        let (mut i_sum, mut j_sum) = (0.0, 0.0);
        for (k, &m0) in st0.moment().iter().enumerate() {
            let (mut a, mut b) = (0.0, 0.0);
            for &(x, wt) in &GL {
                let s = 0.5 * (x + 1.0);
                let v = self.weights.v.value(m0 + 2.0 * s * du[k]);
                a += 0.5 * wt * v;
                b += 0.5 * wt * (1.0 - s) * v;
            }
            let g = 2.0 * du[k] * du[k] * q[k];
            i_sum += a * g;
            j_sum += b * g;
        }
        let c = 2.0 * PI / self.volume_v;
        (c * i_sum, c * j_sum)
    }

    /// `∫ ψ S_v ω_φ` in weak form, using at most third derivatives of `phi`.
    /// `∫ ψ S_v ω_φ` in weak form.
    pub fn pairing_sv(&self, st: &ToricKahlerState, psi: &[f64]) -> f64 {
        st.pairing_sv(&self.weights.v, psi)
    }

    /// `-∫ ψ (S_v - w ℓ_ext) ω_φ`.
    pub fn euler_lagrange_pairing(&self, st: &ToricKahlerState, psi: &[f64]) -> f64 {
        let ws = st.weight_samples(&self.weights.w);
        let target: Vec<f64> =
            (0..st.len()).map(|i| psi[i] * ws.value[i] * self.ell.eval(st.moment()[i])).collect();
        -(self.pairing_sv(st, psi) - st.integrate(&target))
    }

    /// Derivative of `M` along `phi + s psi` at `s = 0`, by Richardson-extrapolated central differences.
    pub fn mabuchi_directional(&self, phi: &[f64], psi: &[f64], s: f64) -> Result<f64> {
        let central = |step: f64| -> Result<f64> {
            let plus: Vec<f64> = phi.iter().zip(psi).map(|(a, b)| a + step * b).collect();
            let minus: Vec<f64> = phi.iter().zip(psi).map(|(a, b)| a - step * b).collect();
            let e = self.path_energies(&plus, &minus)?;
            let dh = self.entropy_hv(&plus)? - self.entropy_hv(&minus)?;
            Ok((dh - e.ric + e.w_ell) / (2.0 * step))
        };
        let (d1, d2) = (central(s)?, central(0.5 * s)?);
        Ok((4.0 * d2 - d1) / 3.0)
    }

    pub fn variational_gradient_check(&self, phi: &[f64], psi: &[f64]) -> Result<VariationalCheck> {
        let st = self.state(phi.to_vec())?;
        let pairing = self.euler_lagrange_pairing(&st, psi);
        let finite_difference = self.mabuchi_directional(phi, psi, 1e-2)?;
        Ok(VariationalCheck { finite_difference, pairing, residual: (finite_difference - pairing).abs() })
    }

    /// Full report for one potential at path parameter `t`.
    pub fn report(&self, phi: &[f64], t: f64) -> Result<FunctionalReport> {
        let zero = self.zero();
        let e = self.path_energies(phi, &zero)?;
        let h_v = self.entropy_hv(phi)?;
        let ij = self.functionals_ij(phi, &zero)?;
        let reduced = self.reduced_j(phi)?;
        let mabuchi = h_v - self.c0 - e.ric + e.w_ell;
        let j_theta = e.theta - self.theta_bar * e.w;
        Ok(FunctionalReport {
            e_v: e.ev / self.volume_v,
            lambda_v: ij.lambda,
            i_v: ij.i,
            j_v: ij.j,
            j_v_torus: reduced.value,
            h_v,
            e_v_ric: e.ric / self.volume_v,
            e_w_ell: e.w_ell / self.volume_v,
            mabuchi,
            mabuchi_t: mabuchi + (1.0 - t) / t * j_theta,
            j_theta,
            path_nodes: e.nodes,
            quadrature_error: e.error,
        })
    }
}
