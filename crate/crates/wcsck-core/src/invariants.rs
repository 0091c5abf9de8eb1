//! Quantities fixed by the weights and the Kähler class: `ℓ_ext` and `θ̄`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::InvariantForm;
use crate::state::ToricKahlerState;
use crate::weights::WeightPair;

/// Affine function `a0 + a1 y` on the polytope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineFunction {
    pub a0: f64,
    pub a1: f64,
}

impl AffineFunction {
    pub fn new(a0: f64, a1: f64) -> Self {
        Self { a0, a1 }
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.a0 + self.a1 * y
    }

    pub fn sample(&self, ys: &[f64]) -> Vec<f64> {
        ys.iter().map(|&y| self.eval(y)).collect()
    }
}

/// `L²(w(m) ω_φ)` projection of `S_v / w` onto affine functions of the moment.
pub fn ell_ext(state: &ToricKahlerState, weights: &WeightPair) -> Result<AffineFunction> {
    let m = state.moment();
    let w = state.weight_samples(&weights.w).value;
    let n = state.len();
    let prod = |f: &dyn Fn(usize) -> f64| state.integrate(&(0..n).map(f).collect::<Vec<_>>());
    let g00 = prod(&|i| w[i]);
    let g01 = prod(&|i| w[i] * m[i]);
    let g11 = prod(&|i| w[i] * m[i] * m[i]);
    let b0 = state.pairing_sv(&weights.v, &vec![1.0; n]);
    let b1 = state.pairing_sv(&weights.v, m);
    let det = g00 * g11 - g01 * g01;
    if !(det.abs() > 1e-12 * g00 * g11) {
        return Err(Error::DegenerateGram { det });
    }
    Ok(AffineFunction::new((b0 * g11 - b1 * g01) / det, (g00 * b1 - g01 * b0) / det))
}

/// `θ̄ = ∫ tr_{v,φ} θ ω_φ / ∫ w(m) ω_φ`.
pub fn theta_bar(state: &ToricKahlerState, weights: &WeightPair, theta: &InvariantForm) -> f64 {
    let tr = state.tr_v_phi(&weights.v, theta);
    state.integrate(&tr) / state.weighted_volume(&weights.w)
}
