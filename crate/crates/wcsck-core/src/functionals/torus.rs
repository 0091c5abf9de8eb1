//! Torus-orbit reductions: pullback by the complexified flow, reduced `J`, Futaki invariant and
//! coercivity fits.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::state::ToricKahlerState;

use super::geodesic::Interpolant;
use super::FunctionalContext;

/// Relative potential of `σ_s^* ω_φ`: `ψ(x) ↦ ψ(x - s)`.
pub fn pullback(state: &ToricKahlerState, s: f64) -> Vec<f64> {
    let interp = Interpolant::new(state);
    let p = state.background().profile();
    state.grid().nodes().iter().map(|&x| interp.phi(x - s) + 0.5 * (p.jet(x - s)[0] - p.jet(x)[0])).collect()
}

/// `inf_s J_v(σ_s^* φ)` and the minimizing shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedJ {
    pub value: f64,
    pub shift: f64,
}

/// Derivative of the Mabuchi functional along the torus flow at several shifts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FutakiReport {
    pub shifts: Vec<f64>,
    pub values: Vec<f64>,
    pub mean: f64,
    pub max_deviation: f64,
}

/// Least-squares slope of `M` against `J_v` and the smallest constant making it an envelope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoercivityFit {
    pub j: Vec<f64>,
    pub mabuchi: Vec<f64>,
    pub delta: Option<f64>,
    pub constant: Option<f64>,
}

/// Search interval for the reduced `J`.
const SHIFT_RANGE: f64 = 4.0;

impl FunctionalContext {
    fn j_mixed(&self, phi: &[f64]) -> f64 {
        let base = ToricKahlerState::background_state(self.background.clone());
        self.mixed_ij(&base, phi).1
    }

    pub fn reduced_j(&self, phi: &[f64]) -> Result<ReducedJ> {
        let st = self.state(phi.to_vec())?;
        let f = |s: f64| self.j_mixed(&pullback(&st, -s));
        let golden = 0.5 * (5f64.sqrt() - 1.0);
        let (mut lo, mut hi) = (-SHIFT_RANGE, SHIFT_RANGE);
        let mut c = hi - golden * (hi - lo);
        let mut d = lo + golden * (hi - lo);
        let (mut fc, mut fd) = (f(c), f(d));
        while hi - lo > 1e-7 {
            if fc < fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - golden * (hi - lo);
                fc = f(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + golden * (hi - lo);
                fd = f(d);
            }
        }
        let shift = 0.5 * (lo + hi);
        if SHIFT_RANGE - shift.abs() < 1e-3 {
            return Err(Error::MinimizerAtBoundary { s: shift });
        }
        Ok(ReducedJ { value: f(shift), shift })
    }

    /// `d/ds M(σ_s^* φ) = ½ ∫ m (S_v - w ℓ_ext) ω` at each shift.
    pub fn futaki(&self, phi: &[f64], shifts: &[f64]) -> Result<FutakiReport> {
        let st = self.state(phi.to_vec())?;
        let mut values = Vec::with_capacity(shifts.len());
        for &s in shifts {
            let moved = self.state(pullback(&st, s))?;
            let psi: Vec<f64> = moved.moment().iter().map(|m| -0.5 * m).collect();
            values.push(self.euler_lagrange_pairing(&moved, &psi));
        }
        let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
        let max_deviation = values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
        Ok(FutakiReport { shifts: shifts.to_vec(), values, mean, max_deviation })
    }

    /// Central difference of `M` along the torus flow.
    pub fn futaki_finite_difference(&self, phi: &[f64], s: f64, step: f64) -> Result<f64> {
        let st = self.state(phi.to_vec())?;
        let plus = self.mabuchi(&pullback(&st, s + step))?;
        let minus = self.mabuchi(&pullback(&st, s - step))?;
        Ok((plus - minus) / (2.0 * step))
    }
}

/// Fit `M ≥ δ J_v - C` over a family of potentials.
pub fn coercivity_probe(ctx: &FunctionalContext, family: &[Vec<f64>]) -> Result<CoercivityFit> {
    let zero = vec![0.0; ctx.background.len()];
    let mut j = Vec::with_capacity(family.len());
    let mut mabuchi = Vec::with_capacity(family.len());
    for phi in family {
        j.push(ctx.functionals_ij(phi, &zero)?.j);
        mabuchi.push(ctx.mabuchi(phi)?);
    }
    let n = j.len() as f64;
    let (mj, mm) = (j.iter().sum::<f64>() / n, mabuchi.iter().sum::<f64>() / n);
    let var: f64 = j.iter().map(|x| (x - mj).powi(2)).sum();
    let cov: f64 = j.iter().zip(&mabuchi).map(|(x, y)| (x - mj) * (y - mm)).sum();
    let (delta, constant) = if family.len() >= 2 && var > 1e-16 {
        let d = cov / var;
        let c = j.iter().zip(&mabuchi).map(|(x, y)| d * x - y).fold(f64::NEG_INFINITY, f64::max);
        (Some(d), Some(c))
    } else {
        (None, None)
    };
    Ok(CoercivityFit { j, mabuchi, delta, constant })
}
