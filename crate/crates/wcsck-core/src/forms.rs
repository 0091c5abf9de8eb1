//! Torus-invariant (1,1)-forms represented by their Hamiltonian profile on the grid.

use serde::{Deserialize, Serialize};

use crate::background::BackgroundMetric;
use crate::error::{Error, Result};
use crate::weights::{Weight, WeightPair};

/// A form `eta` with Hamiltonian `m_eta(x)` and density `m_eta'(x)` in the log coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantForm {
    pub hamiltonian: Vec<f64>,
    pub density: Vec<f64>,
}

impl InvariantForm {
    pub fn ricci(background: &BackgroundMetric) -> Self {
        Self { hamiltonian: background.ricci_hamiltonian().to_vec(), density: background.ricci_density().to_vec() }
    }

    pub fn omega(background: &BackgroundMetric) -> Self {
        Self { hamiltonian: background.moment().to_vec(), density: background.density().to_vec() }
    }

    /// `s * self + other`.
    pub fn axpy(&self, s: f64, other: &InvariantForm) -> InvariantForm {
        let comb = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| s * x + y).collect();
        InvariantForm { hamiltonian: comb(&self.hamiltonian, &other.hamiltonian), density: comb(&self.density, &other.density) }
    }
}

/// Presets for the twisting form of the continuity path.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum TwistPreset {
    /// `theta = omega`.
    Omega,
    /// `theta` chosen so that `phi = 0` solves the `t = 0` equation.
    #[default]
    Gauge,
    /// Cubic Hamiltonian blended with `omega`; `eps = 0` degenerates on one orbit.
    Cubic { eps: f64 },
}

/// Semipositive twisting form together with its average `theta_bar`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistForm {
    pub preset: TwistPreset,
    pub form: InvariantForm,
    /// Lower bound `eps` with `theta >= eps omega` on the grid.
    pub positivity: f64,
}

impl TwistForm {
    pub fn new(preset: TwistPreset, background: &BackgroundMetric, weights: &WeightPair) -> Result<Self> {
        let poly = background.polytope();
        let (a, b) = poly.as_interval()?;
        let len = b - a;
        let ys = background.moment();
        let (g, dg): (Vec<f64>, Vec<f64>) = match &preset {
            TwistPreset::Omega => (ys.to_vec(), vec![1.0; ys.len()]),
            TwistPreset::Cubic { eps } => {
                if !(0.0..=1.0).contains(eps) {
                    return Err(Error::InvalidInput(format!("cubic twist needs eps in [0, 1], got {eps}")));
                }
                ys.iter()
                    .map(|&y| {
                        let s = (y - a) / len;
                        let c = 2.0 * s - 1.0;
                        let val = a + len * ((1.0 - eps) * (c.powi(3) + 1.0) / 2.0 + eps * s);
                        (val, (1.0 - eps) * 3.0 * c * c + eps)
                    })
                    .unzip()
            }
            TwistPreset::Gauge => {
                let v = &weights.v;
                let big_w = cumulative_integral(&weights.w, a, ys);
                let total = integral(&weights.w, a, b);
                let theta_bar = (b * v.value(b) - a * v.value(a)) / total;
                ys.iter()
                    .zip(&big_w)
                    .map(|(&y, &wy)| {
                        let j = v.jet(y);
                        let num = a * v.value(a) + theta_bar * wy;
                        (num / j.value, (theta_bar * weights.w.value(y) * j.value - j.d1 * num) / (j.value * j.value))
                    })
                    .unzip()
            }
        };
        let density: Vec<f64> = dg.iter().zip(background.density()).map(|(d, f2)| d * f2).collect();
        let positivity = dg.iter().copied().fold(f64::INFINITY, f64::min);
        if positivity < -1e-12 {
            return Err(Error::InvalidInput(format!("twist form is not semipositive (min ratio {positivity:.3e})")));
        }
        Ok(Self { preset, form: InvariantForm { hamiltonian: g, density }, positivity: positivity.max(0.0) })
    }
}

const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
    (0.906_179_845_938_664, 0.236_926_885_056_189_08),
];

fn gauss_panel(w: &Weight, lo: f64, hi: f64) -> f64 {
    let (m, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    GAUSS5.iter().map(|(t, c)| c * w.value(m + r * t)).sum::<f64>() * r
}

/// `int_lo^hi w(y) dy` by composite five-point Gauss rule.
pub fn integral(w: &Weight, lo: f64, hi: f64) -> f64 {
    let panels = 64;
    let step = (hi - lo) / panels as f64;
    (0..panels).map(|k| gauss_panel(w, lo + k as f64 * step, lo + (k + 1) as f64 * step)).sum()
}

/// `int_a^{y_i} w` for increasing points `y_i`.
pub fn cumulative_integral(w: &Weight, a: f64, ys: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut prev = a;
    ys.iter()
        .map(|&y| {
            acc += gauss_panel(w, prev, y);
            prev = y;
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integral_of_exponential() {
        let w = Weight::exponential(0.3);
        let exact = ((0.3f64).exp() - 1.0) / 0.3;
        assert!((integral(&w, 0.0, 1.0) - exact).abs() < 1e-14);
    }

    #[test]
    fn gauge_with_unit_weights_is_omega() {
        let bg = BackgroundMetric::standard(129, 12.0).unwrap();
        let t = TwistForm::new(TwistPreset::Gauge, &bg, &WeightPair::unit()).unwrap();
        let om = InvariantForm::omega(&bg);
        for i in 0..bg.len() {
            assert!((t.form.hamiltonian[i] - om.hamiltonian[i]).abs() < 1e-12);
            assert!((t.form.density[i] - om.density[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn cubic_zero_eps_is_degenerate() {
        let bg = BackgroundMetric::standard(129, 12.0).unwrap();
        let t = TwistForm::new(TwistPreset::Cubic { eps: 0.0 }, &bg, &WeightPair::unit()).unwrap();
        assert!(t.positivity < 1e-3);
        assert!((t.form.hamiltonian[64] - 0.5).abs() < 1e-12);
    }
}
