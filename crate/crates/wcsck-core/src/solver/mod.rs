//! Continuity path: residuals, linearizations, Newton iteration and the march in `t`.
//!
//! The unknown is the relative potential on all grid nodes. Interior rows carry the path
//! residual scaled by `ρ_ω² w(m_ω)`; the two outermost rows at each end impose the decay
//! `φ' ∝ e^{∓x}` of a potential that is smooth at the poles, weighted by `1/ρ_ω` there.
//! Newton uses the exact chain-rule Jacobian of this discrete system.

mod jacobian;
mod march;
mod newton;
mod operator;
mod residual;

use crate::error::{Error, Result};
use crate::functionals::FunctionalContext;

pub use jacobian::{chain_rule_jacobian, fd_jacobian, JACOBIAN_BANDWIDTH};
pub use march::{diagnostics, march, ContinuityTrace, DiagnosticBounds, DiagnosticsSnapshot, MarchFailure, MarchSettings, TraceRecord};
pub use newton::{newton_solve, newton_step, solve_t0, NewtonReport, NewtonSettings, T0Solution};
pub use operator::{linear_operator, LinearOperatorHandle, Spectrum};
pub use residual::{residual, residual_coupled, residual_integral, trusted_residual_norm};

/// Point on the continuity path together with the fixed data of the equation.
#[derive(Debug, Clone)]
pub struct PathResidualConfig {
    pub context: FunctionalContext,
    pub t: f64,
    /// Normalization anchor: solutions satisfy `∫ φ ω_{φ0} = 0`.
    pub anchor: Vec<f64>,
}

impl PathResidualConfig {
    pub fn new(context: FunctionalContext, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidInput(format!("path parameter must lie in [0, 1], got {t}")));
        }
        let anchor = vec![0.0; context.background.len()];
        Ok(Self { context, t, anchor })
    }

    /// Path point `t = 1 / (1 + r)` used for the `t = 0` regime.
    pub fn from_r(context: FunctionalContext, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidInput(format!("r must be positive, got {r}")));
        }
        Self::new(context, 1.0 / (1.0 + r))
    }

    /// `r = (1 - t) / t`.
    pub fn r(&self) -> f64 {
        (1.0 - self.t) / self.t
    }

    pub fn at(&self, t: f64) -> Result<Self> {
        let mut c = Self::new(self.context.clone(), t)?;
        c.anchor = self.anchor.clone();
        Ok(c)
    }

    /// Constants and, at `t = 1`, the torus direction are symmetries of the equation.
    pub fn kernel_dimension(&self) -> usize {
        if self.t >= 1.0 {
            2
        } else {
            1
        }
    }
}
