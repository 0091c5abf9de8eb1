//! Closed-form relative potentials used as probe states.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::background::{BackgroundMetric, FubiniStudy};
use crate::error::Result;
use crate::state::ToricKahlerState;

/// A relative potential given in closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialProfile {
    Zero,
    Constant { c: f64 },
    /// `amplitude * exp(-(x - center)^2 / (2 width^2))`.
    Bump { amplitude: f64, center: f64, width: f64 },
    /// `sum_k coeffs[k-1] cos(k pi s)` with `s` the normalized background moment.
    MomentCosine { coeffs: Vec<f64> },
}

impl PotentialProfile {
    pub fn eval(&self, profile: &FubiniStudy, x: f64) -> f64 {
        match self {
            PotentialProfile::Zero => 0.0,
            PotentialProfile::Constant { c } => *c,
            PotentialProfile::Bump { amplitude, center, width } => {
                amplitude * (-0.5 * ((x - center) / width).powi(2)).exp()
            }
            PotentialProfile::MomentCosine { coeffs } => {
                let s = (profile.jet(x)[1] - profile.a) / profile.length;
                coeffs.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * PI * s).cos()).sum()
            }
        }
    }

    pub fn sample(&self, background: &BackgroundMetric) -> Vec<f64> {
        let p = background.profile();
        background.grid().nodes().iter().map(|&x| self.eval(&p, x)).collect()
    }

    pub fn state(&self, background: Arc<BackgroundMetric>) -> Result<ToricKahlerState> {
        let phi = self.sample(&background);
        ToricKahlerState::build(background, phi)
    }

    /// Random moment-cosine potential whose density ratio stays within `1 ± strength`.
    pub fn random<R: Rng>(rng: &mut R, modes: usize, strength: f64, length: f64) -> Self {
        let raw: Vec<f64> = (1..=modes).map(|k| rng.gen_range(-1.0..1.0) / (k * k) as f64).collect();
        let scaled = strength / Self::cosine_bound(&raw, length);
        let scale = scaled * rng.gen_range(0.3..1.0);
        PotentialProfile::MomentCosine { coeffs: raw.iter().map(|c| c * scale).collect() }
    }

    /// Upper bound of `|rho_phi / rho_omega - 1|` for unit-scaled moment-cosine coefficients.
    fn cosine_bound(coeffs: &[f64], length: f64) -> f64 {
        let (mut g1, mut g2) = (0.0, 0.0);
        for (k, c) in coeffs.iter().enumerate() {
            let w = (k + 1) as f64 * PI;
            g1 += c.abs() * w;
            g2 += c.abs() * w * w;
        }
        2.0 * (g2 / 4.0 + g1) / length
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_profiles_are_admissible() {
        let bg = Arc::new(BackgroundMetric::standard(257, 12.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let p = PotentialProfile::random(&mut rng, 4, 0.6, 1.0);
            let st = p.state(bg.clone()).unwrap();
            let r = st.trace_ratio();
            assert!(r.iter().all(|&q| q > 0.35 && q < 1.65));
        }
    }
}
