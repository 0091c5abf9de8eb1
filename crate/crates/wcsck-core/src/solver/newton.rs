use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, BorderedSolver};
use crate::state::ToricKahlerState;

use super::jacobian::{chain_rule_with, stencils};
use super::operator::linear_operator;
use super::residual::{row_scale, END_ROWS, system_residual, trusted_residual_norm};
use super::PathResidualConfig;

/// Stopping rules of the Newton iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonSettings {
    pub max_iterations: usize,
    /// Target for the residual max-norm on the trusted interior.
    pub tolerance: f64,
    /// Accepted when the update has stalled at rounding level.
    pub floor_tolerance: f64,
    pub max_halvings: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self { max_iterations: 25, tolerance: 1e-8, floor_tolerance: 1e-6, max_halvings: 12 }
    }
}

/// History of one Newton solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewtonReport {
    #[serde(skip)]
    pub phi: Vec<f64>,
    /// Trusted-interior residual of every iterate, starting with the initial guess.
    pub residuals: Vec<f64>,
    /// Max-norm of the full scaled system of every iterate.
    pub system_residuals: Vec<f64>,
    pub damping: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl NewtonReport {
    pub fn final_residual(&self) -> f64 {
        *self.residuals.last().unwrap_or(&f64::NAN)
    }
}

fn max_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

struct Step {
    phi: Vec<f64>,
    alpha: f64,
    update: f64,
    multipliers: Vec<f64>,
    system: f64,
}

/// Border vectors: residual directions absorbing the kernel and normalization rows.
fn borders(config: &PathResidualConfig, scale: &[f64], phi: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>, Vec<usize>)> {
    let bg = &config.context.background;
    let n = bg.len();
    let anchor = ToricKahlerState::build(bg.clone(), config.anchor.clone())?;
    let q = bg.grid().trapezoid_weights();
    let interior = |f: &dyn Fn(usize) -> f64| -> Vec<f64> { (0..n).map(|i| if i < END_ROWS || i + END_ROWS >= n { 0.0 } else { scale[i] * f(i) }).collect() };
    let m = bg.moment();
    let mut c = vec![interior(&|_| 1.0)];
    let mut d = vec![(0..n).map(|i| q[i] * anchor.density()[i]).collect::<Vec<_>>()];
    let mut pins = vec![n / 2];
    if config.kernel_dimension() == 2 {
        c.push(interior(&|i| m[i]));
        d.push((0..n).map(|i| q[i] * anchor.density()[i] * anchor.moment()[i]).collect());
        pins = vec![n / 2 - n / 8, n / 2 + n / 8];
    }
    let s: Vec<f64> = d.iter().map(|di| -dot(di, phi)).collect();
    Ok((c, d, s, pins))
}

fn damped_step(phi: &[f64], config: &PathResidualConfig, settings: &NewtonSettings, scale: &[f64]) -> Result<Step> {
    let bg = &config.context.background;
    let st = ToricKahlerState::build(bg.clone(), phi.to_vec())?;
    let sys = system_residual(&st, config, scale);
    let norm = max_norm(&sys);
    let jac = chain_rule_with(&st, config, scale, &stencils(st.grid()));
    let (c, d, s, pins) = borders(config, scale, phi)?;
    let solver = BorderedSolver::new(&jac, c, d, pins)?;
    let rhs: Vec<f64> = sys.iter().map(|x| -x).collect();
    let (u, multipliers) = solver.solve(&rhs, &s)?;
    let mut alpha = 1.0;
    for _ in 0..=settings.max_halvings {
        let trial: Vec<f64> = phi.iter().zip(&u).map(|(p, du)| p + alpha * du).collect();
        if let Ok(ts) = ToricKahlerState::build(bg.clone(), trial.clone()) {
            let tn = max_norm(&system_residual(&ts, config, scale));
            if tn < norm || alpha == 1.0 && tn <= norm * (1.0 + 1e-12) && max_norm(&u) < 1e-10 {
                return Ok(Step { phi: trial, alpha, update: alpha * max_norm(&u), multipliers, system: tn });
            }
        }
        alpha *= 0.5;
    }
    Err(Error::DampingFailed { residual: norm })
}

/// One damped Newton step on the normalized subspace.
pub fn newton_step(phi: &[f64], config: &PathResidualConfig) -> Result<Vec<f64>> {
    let scale = row_scale(config);
    Ok(damped_step(phi, config, &NewtonSettings::default(), &scale)?.phi)
}

pub fn newton_solve(phi0: &[f64], config: &PathResidualConfig, settings: &NewtonSettings) -> Result<NewtonReport> {
    if config.t <= 0.0 {
        return Err(Error::InvalidInput("the path at t = 0 is solved through r; use a positive t".into()));
    }
    let bg = &config.context.background;
    let scale = row_scale(config);
    let mut phi = phi0.to_vec();
    let st = ToricKahlerState::build(bg.clone(), phi.clone())?;
    let mut report = NewtonReport {
        phi: Vec::new(),
        residuals: vec![trusted_residual_norm(&st, config)?],
        system_residuals: vec![max_norm(&system_residual(&st, config, &scale))],
        damping: Vec::new(),
        multipliers: Vec::new(),
        iterations: 0,
        converged: false,
    };
    for _ in 0..settings.max_iterations {
        if report.final_residual() <= settings.tolerance && report.iterations > 0 {
            report.converged = true;
            break;
        }
        let step = match damped_step(&phi, config, settings, &scale) {
            Ok(step) => step,
            Err(Error::DampingFailed { .. }) if report.final_residual() <= settings.floor_tolerance => {
                report.converged = true;
                break;
            }
            Err(e) => return Err(e),
        };
        phi = step.phi;
        let st = ToricKahlerState::build(bg.clone(), phi.clone())?;
        report.residuals.push(trusted_residual_norm(&st, config)?);
        report.system_residuals.push(step.system);
        report.damping.push(step.alpha);
        report.multipliers = step.multipliers;
        report.iterations += 1;
        let stalled = step.update <= 1e-12 * (1.0 + max_norm(&phi));
        if report.final_residual() <= settings.tolerance || stalled && report.final_residual() <= settings.floor_tolerance {
            report.converged = true;
            break;
        }
    }
    report.phi = phi;
    Ok(report)
}

/// Solution of the path equation at `t = 1/(1+r)` with the sign of the first eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct T0Solution {
    #[serde(skip)]
    pub phi: Vec<f64>,
    pub r: f64,
    pub t: f64,
    /// Top eigenvalue of the self-adjoint part of `L / t` off the constants.
    pub first_eigenvalue: f64,
    pub newton: NewtonReport,
}

pub fn solve_t0(config: &PathResidualConfig, settings: &NewtonSettings) -> Result<T0Solution> {
    let r = config.r();
    let report = newton_solve(&config.anchor, config, settings)?;
    if !report.converged {
        return Err(Error::DampingFailed { residual: report.final_residual() });
    }
    let op = linear_operator(&report.phi, config)?;
    let lambda = op.spectrum().top / config.t;
    if !(lambda < 0.0) {
        return Err(Error::EigenvalueNonNegative { lambda });
    }
    Ok(T0Solution { phi: report.phi.clone(), r, t: config.t, first_eigenvalue: lambda, newton: report })
}
