use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::BandMatrix;
use crate::state::ToricKahlerState;

use super::jacobian::{chain_rule_with, stencils};
use super::residual::{pointwise, row_scale};
use super::PathResidualConfig;

/// Linearization of the path residual at one state.
///
/// `apply` differentiates the discrete residual along a direction (authoritative). `apply_analytic` evaluates
/// `-t 𝓓*v𝓓u / w + <d𝓕, du> + (1-t) F_φ u` in strong form and `apply_symmetric` its
/// self-adjoint part in weak form.
#[derive(Debug, Clone)]
pub struct LinearOperatorHandle {
    state: ToricKahlerState,
    config: PathResidualConfig,
    t: f64,
    jacobian: BandMatrix,
    v: Vec<f64>,
    w: Vec<f64>,
    theta_density: Vec<f64>,
    residual_slope: Vec<f64>,
    quad: Vec<f64>,
    d1: BandMatrix,
}

/// Eigenvalues of the self-adjoint part with the constants removed, in descending order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub top: f64,
}

/// Relative error above which the two realizations are reported as inconsistent.
pub const ASSEMBLY_TOLERANCE: f64 = 1e-4;

pub fn linear_operator(phi: &[f64], config: &PathResidualConfig) -> Result<LinearOperatorHandle> {
    let st = config.context.state(phi.to_vec())?;
    let ctx = &config.context;
    let jacobian = chain_rule_with(&st, config, &row_scale(config), &stencils(st.grid()));
    let n = st.len();
    let r = pointwise(&st, config);
    let mut d1 = BandMatrix::zeros(n, 4, 4);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = st.grid().d1(&e);
        for (i, c) in col.iter().enumerate() {
            if *c != 0.0 {
                d1.set(i, j, *c);
            }
        }
    }
    Ok(LinearOperatorHandle {
        t: config.t,
        v: st.weight_samples(&ctx.weights.v).value,
        w: st.weight_samples(&ctx.weights.w).value,
        theta_density: ctx.theta.form.density.clone(),
        residual_slope: st.grid().d1(&r),
        quad: st.grid().trapezoid_weights(),
        state: st,
        jacobian,
        d1,
        config: config.clone(),
    })
}

impl LinearOperatorHandle {
    pub fn state(&self) -> &ToricKahlerState {
        &self.state
    }

    pub fn len(&self) -> usize {
        self.state.len()
    }

    pub fn is_empty(&self) -> bool {
        self.state.is_empty()
    }

    /// Jacobian of the scaled square system.
    pub fn jacobian(&self) -> &BandMatrix {
        &self.jacobian
    }

    /// Directional derivative of the pointwise residual: Richardson-extrapolated central differences.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let size = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if size == 0.0 {
            return vec![0.0; self.len()];
        }
        let mut eps = 1e-4 / size;
        for _ in 0..20 {
            if let (Ok(a), Ok(b)) = (self.central(u, eps), self.central(u, 0.5 * eps)) {
                return a.iter().zip(&b).map(|(x, y)| (4.0 * y - x) / 3.0).collect();
            }
            eps *= 0.25;
        }
        vec![f64::NAN; self.len()]
    }

    fn central(&self, u: &[f64], eps: f64) -> Result<Vec<f64>> {
        let shifted = |sign: f64| -> Result<Vec<f64>> {
            let phi: Vec<f64> = self.state.phi().iter().zip(u).map(|(p, d)| p + sign * eps * d).collect();
            let st = ToricKahlerState::build(self.state.background().clone(), phi)?;
            Ok(pointwise(&st, &self.config))
        };
        let (p, m) = (shifted(1.0)?, shifted(-1.0)?);
        Ok(p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * eps)).collect())
    }

    pub fn apply_analytic(&self, u: &[f64]) -> Vec<f64> {
        let g = self.state.grid();
        let rho = self.state.density();
        let n = self.len();
        let du = g.d1(u);
        let q: Vec<f64> = (0..n).map(|i| du[i] / rho[i]).collect();
        let gu = g.d1(&q);
        let a = g.d1(&(0..n).map(|i| self.v[i] * rho[i] * gu[i]).collect::<Vec<_>>());
        let b = g.d1(&(0..n).map(|i| a[i] / rho[i]).collect::<Vec<_>>());
        let th = g.d1(&(0..n).map(|i| self.v[i] * self.theta_density[i] * q[i]).collect::<Vec<_>>());
        (0..n)
            .map(|i| {
                let lich = 4.0 * b[i] / rho[i];
                let twist = 2.0 * th[i] / (self.w[i] * rho[i]);
                -self.t * lich / self.w[i] + 2.0 * self.residual_slope[i] * q[i] + (1.0 - self.t) * twist
            })
            .collect()
    }

    /// `A u` with `A = -4t Gᵀ diag(q v ρ) G - 2(1-t) D1ᵀ diag(q v θ_dens / ρ) D1`, `G = D1 ρ⁻¹ D1`.
    fn weak_form(&self, u: &[f64]) -> Vec<f64> {
        let rho = self.state.density();
        let n = self.len();
        let du = self.d1.mul_vec(u);
        let gu = self.d1.mul_vec(&(0..n).map(|i| du[i] / rho[i]).collect::<Vec<_>>());
        let k: Vec<f64> = (0..n).map(|i| self.quad[i] * self.v[i] * rho[i] * gu[i]).collect();
        let back = self.d1.mul_transpose_vec(&k);
        let lich = self.d1.mul_transpose_vec(&(0..n).map(|i| back[i] / rho[i]).collect::<Vec<_>>());
        let kt: Vec<f64> = (0..n).map(|i| self.quad[i] * self.v[i] * self.theta_density[i] / rho[i] * du[i]).collect();
        let twist = self.d1.mul_transpose_vec(&kt);
        (0..n).map(|i| -4.0 * self.t * lich[i] - 2.0 * (1.0 - self.t) * twist[i]).collect()
    }

    fn mass(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.quad[i] * self.w[i] * self.state.density()[i]).collect()
    }

    /// Self-adjoint part `M⁻¹ A` with `M = diag(q w ρ)`.
    pub fn apply_symmetric(&self, u: &[f64]) -> Vec<f64> {
        self.weak_form(u).iter().zip(self.mass()).map(|(a, m)| a / m).collect()
    }

    /// `(a, b)_{w,φ}` in the quadrature of the weak form.
    pub fn pairing(&self, a: &[f64], b: &[f64]) -> f64 {
        self.mass().iter().zip(a.iter().zip(b)).map(|(m, (x, y))| m * x * y).sum()
    }

    /// Largest relative difference between `apply` and `apply_analytic` on the trusted interior.
    pub fn assembly_check(&self, directions: &[Vec<f64>]) -> Result<f64> {
        let range = self.state.trusted_checked()?;
        let mut worst = 0.0f64;
        for u in directions {
            let (fd, an) = (self.apply(u), self.apply_analytic(u));
            let size = range.clone().map(|i| an[i].abs()).fold(0.0, f64::max);
            let diff = range.clone().map(|i| (fd[i] - an[i]).abs()).fold(0.0, f64::max);
            worst = worst.max(diff / size.max(f64::MIN_POSITIVE));
        }
        if worst > ASSEMBLY_TOLERANCE {
            return Err(Error::AssemblyMismatch { rel: worst });
        }
        Ok(worst)
    }

    /// Spectrum of `M^{-1/2} A M^{-1/2}` off the constants.
    ///
    /// `A = -CᵀC` with `C` stacking the two weighted first-order factors, so the eigenvalues are
    /// `-σ²` for the singular values of `C M^{-1/2}`; this keeps the small eigenvalues accurate
    /// despite the exponentially small mass at the ends.
    pub fn spectrum(&self) -> Spectrum {
        let n = self.len();
        let rho = self.state.density();
        let mass = self.mass();
        let root: Vec<f64> = mass.iter().map(|m| m.sqrt()).collect();
        let lich: Vec<f64> = (0..n).map(|i| (4.0 * self.t * self.quad[i] * self.v[i] * rho[i]).sqrt()).collect();
        let twist: Vec<f64> =
            (0..n).map(|i| (2.0 * (1.0 - self.t) * self.quad[i] * self.v[i] * self.theta_density[i] / rho[i]).max(0.0).sqrt()).collect();
        let mut c = DMatrix::zeros(2 * n + 1, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0 / root[j];
            let du = self.d1.mul_vec(&e);
            let gu = self.d1.mul_vec(&(0..n).map(|i| du[i] / rho[i]).collect::<Vec<_>>());
            for i in 0..n {
                c[(i, j)] = lich[i] * gu[i];
                c[(n + i, j)] = twist[i] * du[i];
            }
        }
        let norm = root.iter().map(|r| r * r).sum::<f64>().sqrt();
        let size = c.norm().max(1.0);
        for j in 0..n {
            c[(2 * n, j)] = size * root[j] / norm;
        }
        let svd = c.qr().r().svd(false, true);
        let vt = svd.v_t.expect("requested");
        let constant = (0..svd.singular_values.len())
            .max_by(|&a, &b| {
                let align = |k: usize| (0..n).map(|j| vt[(k, j)] * root[j]).sum::<f64>().abs();
                align(a).total_cmp(&align(b))
            })
            .unwrap_or(0);
        let mut values: Vec<f64> =
            svd.singular_values.iter().enumerate().filter(|&(k, _)| k != constant).map(|(_, s)| -s * s).collect();
        values.sort_by(|a, b| b.total_cmp(a));
        Spectrum { top: values.first().copied().unwrap_or(f64::NAN), eigenvalues: values }
    }
}
