use crate::error::Result;
use crate::identities::PathContext;
use crate::state::{max_abs_on, ToricKahlerState};

use super::PathResidualConfig;

/// Pointwise residual `t(S_v/w - ℓ) - (1-t)(tr_{v,φ}θ/w - θ̄)`.
pub fn residual(phi: &[f64], config: &PathResidualConfig) -> Result<Vec<f64>> {
    let st = config.context.state(phi.to_vec())?;
    Ok(pointwise(&st, config))
}

pub(crate) fn pointwise(st: &ToricKahlerState, config: &PathResidualConfig) -> Vec<f64> {
    let ctx = &config.context;
    let (v, t) = (&ctx.weights.v, config.t);
    let sv = st.weighted_scalar_curvature(v);
    let tr = st.tr_v_phi(v, &ctx.theta.form);
    let ws = st.weight_samples(&ctx.weights.w);
    (0..st.len())
        .map(|i| {
            let w = ws.value[i];
            t * (sv[i] / w - ctx.ell.eval(st.moment()[i])) - (1.0 - t) * (tr[i] / w - ctx.theta_bar)
        })
        .collect()
}

/// `∫ residual · w(m) ω_φ`, which vanishes for every state.
pub fn residual_integral(phi: &[f64], config: &PathResidualConfig) -> Result<f64> {
    let st = config.context.state(phi.to_vec())?;
    let r = pointwise(&st, config);
    let ws = st.weight_samples(&config.context.weights.w);
    Ok(st.integrate(&r.iter().zip(&ws.value).map(|(a, b)| a * b).collect::<Vec<_>>()))
}

/// Max-norm of the pointwise residual on the trusted interior.
pub fn trusted_residual_norm(st: &ToricKahlerState, config: &PathResidualConfig) -> Result<f64> {
    let range = st.trusted_checked()?;
    Ok(max_abs_on(&pointwise(st, config), range))
}

/// Residuals of the coupled system for a candidate `F`: its defining equation and the
/// second-order equation it satisfies along the path.
pub fn residual_coupled(phi: &[f64], f: &[f64], config: &PathResidualConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let st = config.context.state(phi.to_vec())?;
    st.grid().check_len(f)?;
    let ctx = &config.context;
    let first: Vec<f64> = st.f_field(&ctx.weights.v).iter().zip(f).map(|(a, b)| b - a).collect();
    let path = PathContext {
        weights: ctx.weights.clone(),
        t: config.t,
        theta: ctx.theta.form.clone(),
        theta_bar: ctx.theta_bar,
        ell: ctx.ell,
    };
    Ok((first, path.second_equation(&st, f, 1.0)))
}

/// Row scaling `ρ_ω² w(m_ω)` of the interior equations.
pub(crate) fn row_scale(config: &PathResidualConfig) -> Vec<f64> {
    let bg = &config.context.background;
    let w = &config.context.weights.w;
    bg.density().iter().zip(bg.moment()).map(|(r, &m)| r * r * w.value(m)).collect()
}

/// Number of decay conditions imposed at each end of the grid.
pub(crate) const END_ROWS: usize = 2;

/// Weights `1/ρ_ω` of the decay rows at the two ends.
///
/// A non-smooth local solution `x eˣ` violates the decay rows only at order `ρ_ω`, so the rows
/// are rescaled to penalize it at order one.
pub(crate) fn end_scales(config: &PathResidualConfig) -> (f64, f64) {
    let rho = config.context.background.density();
    (1.0 / rho[0], 1.0 / rho[rho.len() - 1])
}

/// Square system: scaled interior rows plus decay conditions `φ^(k+1) ∓ φ^(k) = 0` at each end.
pub(crate) fn system_residual(st: &ToricKahlerState, config: &PathResidualConfig, scale: &[f64]) -> Vec<f64> {
    let n = st.len();
    let r = pointwise(st, config);
    let mut out: Vec<f64> = r.iter().zip(scale).map(|(a, s)| a * s).collect();
    let (left, right) = end_scales(config);
    for k in 0..END_ROWS {
        let (hi, lo) = (st.phi_derivative(k + 2), st.phi_derivative(k + 1));
        out[k] = left * (hi[0] - lo[0]);
        out[n - 1 - k] = right * (hi[n - 1] + lo[n - 1]);
    }
    out
}

/// Local jet of a state at one node, enough to evaluate the pointwise residual.
#[derive(Debug, Clone, Copy)]
pub(crate) struct NodeData {
    pub m: f64,
    pub rho: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub theta_h: f64,
    pub theta_d: f64,
}

impl NodeData {
    pub(crate) fn at(st: &ToricKahlerState, config: &PathResidualConfig, i: usize) -> Self {
        let theta = &config.context.theta.form;
        Self {
            m: st.moment()[i],
            rho: st.density()[i],
            rho1: st.density_d1()[i],
            rho2: st.density_d2()[i],
            theta_h: theta.hamiltonian[i],
            theta_d: theta.density[i],
        }
    }

    /// Partial derivatives of the pointwise residual in `(m, ρ, ρ', ρ'')`.
    pub(crate) fn partials(&self, config: &PathResidualConfig) -> [f64; 4] {
        let ctx = &config.context;
        let t = config.t;
        let v = ctx.weights.v.jet(self.m);
        let w = ctx.weights.w.value(self.m);
        let (r, r1, r2) = (self.rho, self.rho1, self.rho2);
        let d_rho2 = t * v.value * (-2.0 / (r * r)) / w;
        let d_rho1 = t * (v.value * 4.0 * r1 / (r * r * r) - 4.0 * v.d1 / r) / w;
        let d_rho = t * (v.value * (4.0 * r2 / (r * r * r) - 6.0 * r1 * r1 / (r * r * r * r)) + 4.0 * v.d1 * r1 / (r * r) - 2.0 * v.d2) / w
            + (1.0 - t) * v.value * self.theta_d / (r * r * w);
        let f = |m: f64| pointwise_at(&Self { m, ..*self }, config);
        let e = 1e-3 * (1.0 + self.m.abs());
        let c1 = (f(self.m + e) - f(self.m - e)) / (2.0 * e);
        let c2 = (f(self.m + 0.5 * e) - f(self.m - 0.5 * e)) / e;
        let d_m = (4.0 * c2 - c1) / 3.0;
        [d_m, d_rho, d_rho1, d_rho2]
    }
}

/// Pointwise residual from a node jet.
pub(crate) fn pointwise_at(node: &NodeData, config: &PathResidualConfig) -> f64 {
    let ctx = &config.context;
    let t = config.t;
    let v = ctx.weights.v.jet(node.m);
    let w = ctx.weights.w.value(node.m);
    let (r, r1, r2) = (node.rho, node.rho1, node.rho2);
    let s = -2.0 * (r2 * r - r1 * r1) / (r * r * r);
    let sv = v.value * s - 2.0 * v.d1 * (2.0 * r1 / r) - 2.0 * v.d2 * r;
    let tr = v.value * node.theta_d / r + v.d1 * node.theta_h;
    t * (sv / w - ctx.ell.eval(node.m)) - (1.0 - t) * (tr / w - ctx.theta_bar)
}
