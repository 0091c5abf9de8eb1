//! Cross-check of the one-dimensional operators against Cartesian differences on an annulus chart.
//!
//! In the chart `z = x1 + i x2` the full potential is `P = f0(log|z|^2) + 2 phi(log|z|^2)`,
//! the Riemannian Laplacian is `2 Δ_flat h / Δ_flat P`, `Jξh = -(x1 h_1 + x2 h_2)` and the
//! moment is `m_ω + (x1 ∂_1 + x2 ∂_2) phi`.

use std::sync::Arc;

use serde::Serialize;

use crate::background::BackgroundMetric;
use crate::error::{Error, Result};
use crate::grid::fitted_order;
use crate::profiles::PotentialProfile;

/// Test function of the log coordinate.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Inputs of a reduction check.
#[derive(Clone)]
pub struct ReductionProbe {
    pub half_width: f64,
    pub ladder: Vec<usize>,
    pub phi: PotentialProfile,
    pub h: ScalarFn,
    pub angles: Vec<f64>,
}

impl ReductionProbe {
    pub fn new(phi: PotentialProfile, h: ScalarFn) -> Self {
        Self { half_width: 12.0, ladder: vec![257, 513, 1025, 2049], phi, h, angles: vec![0.3, 1.9, 4.1] }
    }
}

/// Residual ladder for one operator.
#[derive(Debug, Clone, Serialize)]
pub struct OperatorConvergence {
    pub operator: String,
    pub spacings: Vec<f64>,
    pub residuals: Vec<f64>,
    pub order: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionReport {
    pub operators: Vec<OperatorConvergence>,
}

impl ReductionReport {
    pub fn min_order(&self) -> Option<f64> {
        self.operators.iter().filter_map(|o| o.order).reduce(f64::min)
    }
}

/// Residuals below this are treated as exact agreement.
const EXACT_FLOOR: f64 = 1e-11;

pub fn validate_reduction(probe: &ReductionProbe) -> Result<ReductionReport> {
    let coarse = *probe.ladder.first().ok_or_else(|| Error::InvalidInput("empty ladder".into()))?;
    let mut names = ["laplacian", "jxi", "moment"].map(|s| OperatorConvergence {
        operator: s.to_string(),
        spacings: Vec::new(),
        residuals: Vec::new(),
        order: None,
    });
    let coarse_bg = BackgroundMetric::standard(coarse, probe.half_width)?;
    let sample_x: Vec<f64> = coarse_bg.trusted().step_by(8).map(|i| coarse_bg.grid().nodes()[i]).collect();
    for &n in &probe.ladder {
        let bg = Arc::new(BackgroundMetric::standard(n, probe.half_width)?);
        let state = probe.phi.state(bg.clone())?;
        let h_vals: Vec<f64> = bg.grid().nodes().iter().map(|&x| (probe.h)(x)).collect();
        let lap = state.laplacian(&h_vals);
        let jx = state.jxi(&h_vals);
        let hx = bg.grid().spacing();
        let mut worst = [0.0f64; 3];
        for &x in &sample_x {
            let i = ((x + probe.half_width) / hx).round() as usize;
            let chart = chart_values(probe, &bg, x, hx);
            for &theta in &probe.angles {
                let c = chart(theta);
                worst[0] = worst[0].max((c[0] - lap[i]).abs());
                worst[1] = worst[1].max((c[1] - jx[i]).abs());
                worst[2] = worst[2].max((c[2] - state.moment()[i]).abs());
            }
        }
        for k in 0..3 {
            names[k].spacings.push(hx);
            names[k].residuals.push(worst[k]);
        }
    }
    for op in names.iter_mut() {
        if op.residuals.iter().any(|r| *r > EXACT_FLOOR) {
            let order = fitted_order(&op.spacings, &op.residuals).unwrap_or(0.0);
            if order < 1.5 {
                return Err(Error::ConventionMismatch { quantity: op.operator.clone(), order });
            }
            op.order = Some(order);
        }
    }
    Ok(ReductionReport { operators: names.to_vec() })
}

/// Chart values `[laplacian, jxi, moment]` at radius `e^{x/2}` as a function of the angle.
fn chart_values<'a>(probe: &'a ReductionProbe, bg: &'a BackgroundMetric, x: f64, hx: f64) -> impl Fn(f64) -> [f64; 3] + 'a {
    let profile = bg.profile();
    let r = (0.5 * x).exp();
    let delta = 0.5 * r * hx;
    let log_r2 = |a: f64, b: f64| (a * a + b * b).ln();
    let pot = move |a: f64, b: f64| {
        let t = log_r2(a, b);
        profile.jet(t)[0] + 2.0 * probe.phi.eval(&profile, t)
    };
    let phi = move |a: f64, b: f64| probe.phi.eval(&profile, log_r2(a, b));
    let h = move |a: f64, b: f64| (probe.h)(log_r2(a, b));
    move |theta: f64| {
        let (a, b) = (r * theta.cos(), r * theta.sin());
        let lap5 = |f: &dyn Fn(f64, f64) -> f64| {
            (f(a + delta, b) + f(a - delta, b) + f(a, b + delta) + f(a, b - delta) - 4.0 * f(a, b)) / (delta * delta)
        };
        let radial = |f: &dyn Fn(f64, f64) -> f64| {
            let fx = (f(a + delta, b) - f(a - delta, b)) / (2.0 * delta);
            let fy = (f(a, b + delta) - f(a, b - delta)) / (2.0 * delta);
            a * fx + b * fy
        };
        let laplacian = 2.0 * lap5(&h) / lap5(&pot);
        let jxi = -radial(&h);
        let moment = profile.jet(x)[1] + radial(&phi);
        [laplacian, jxi, moment]
    }
}

/// Probe with `phi = 0` and `h = m_ω`.
pub fn background_moment_probe() -> ReductionProbe {
    let fs = crate::background::FubiniStudy { a: 0.0, length: 1.0 };
    ReductionProbe::new(PotentialProfile::Zero, Arc::new(move |x| fs.jet(x)[1]))
}
