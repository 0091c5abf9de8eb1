//! Numerical certification of the pointwise identities of the weighted reduction.
//!
//! Every check evaluates both sides of an identity through independent discretization
//! routes and reports the trusted-interior residual over a refinement ladder.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::background::BackgroundMetric;
use crate::error::{Error, Result};
use crate::forms::{InvariantForm, TwistForm, TwistPreset};
use crate::grid::fitted_order;
use crate::invariants::{ell_ext, theta_bar};
use crate::profiles::PotentialProfile;
use crate::state::{max_abs_on, ToricKahlerState};
use crate::weights::{LogConcavity, Weight, WeightPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityId {
    LinearizedMa,
    GradLogv,
    LapLogv,
    JxiLogvol,
    DriftF,
    LaplaceFprime,
    LogConcavity,
    CoupledEquivalence,
    MuConsistency,
}

impl IdentityId {
    pub const ALL: [IdentityId; 9] = [
        IdentityId::LinearizedMa,
        IdentityId::GradLogv,
        IdentityId::LapLogv,
        IdentityId::JxiLogvol,
        IdentityId::DriftF,
        IdentityId::LaplaceFprime,
        IdentityId::LogConcavity,
        IdentityId::CoupledEquivalence,
        IdentityId::MuConsistency,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            IdentityId::LinearizedMa => "linearized_ma",
            IdentityId::GradLogv => "grad_logv",
            IdentityId::LapLogv => "lap_logv",
            IdentityId::JxiLogvol => "jxi_logvol",
            IdentityId::DriftF => "drift_f",
            IdentityId::LaplaceFprime => "laplace_fprime",
            IdentityId::LogConcavity => "log_concavity",
            IdentityId::CoupledEquivalence => "coupled_equivalence",
            IdentityId::MuConsistency => "mu_consistency",
        }
    }
}

impl fmt::Display for IdentityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A probe family: weights and potential, rebuilt at every ladder size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityProbe {
    pub label: String,
    pub weights: WeightPair,
    pub phi: PotentialProfile,
    /// Direction for the linearization check.
    pub direction: PotentialProfile,
    pub twist: TwistPreset,
    /// Path parameter used by the coupled-system checks.
    pub t: f64,
    /// Scale `c` of the generator in the μ check (`v = w = e^{c y}`).
    pub xi: f64,
    pub lambda: f64,
    pub half_width: f64,
    pub ladder: Vec<usize>,
    /// Orientation of `Jξ`; `+1` is the pinned convention, `-1` the negative control.
    pub jxi_sign: f64,
}

impl IdentityProbe {
    pub fn new(label: impl Into<String>, weights: WeightPair, phi: PotentialProfile) -> Self {
        Self {
            label: label.into(),
            weights,
            phi,
            direction: PotentialProfile::MomentCosine { coeffs: vec![0.02, 0.01, -0.005] },
            twist: TwistPreset::Gauge,
            t: 0.6,
            xi: 1.0,
            lambda: 0.5,
            half_width: 12.0,
            ladder: vec![257, 513, 1025, 2049],
            jxi_sign: 1.0,
        }
    }

    /// Smooth perturbation used by the standard probe family.
    pub fn standard_bump() -> PotentialProfile {
        PotentialProfile::MomentCosine { coeffs: vec![0.04, -0.015, 0.006] }
    }

    /// Background and perturbed states for Fubini–Study, `e^{0.3y}` and `e^{-0.7y}` weights.
    pub fn standard_family() -> Vec<IdentityProbe> {
        let weights = [
            ("fs", WeightPair::unit()),
            ("exp+0.3", WeightPair::exponential(0.3)),
            ("exp-0.7", WeightPair::exponential(-0.7)),
        ];
        let mut out = Vec::new();
        for (name, w) in weights {
            out.push(IdentityProbe::new(format!("{name}/zero"), w.clone(), PotentialProfile::Zero));
            out.push(IdentityProbe::new(format!("{name}/bump"), w, Self::standard_bump()));
        }
        out
    }
}

/// Result of one identity over a refinement ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub id: IdentityId,
    pub probe: String,
    pub sizes: Vec<usize>,
    /// Grid spacing, or path step for the linearization check.
    pub spacings: Vec<f64>,
    pub residuals: Vec<f64>,
    pub order: Option<f64>,
    pub constant: f64,
    pub passed: bool,
    pub note: Option<String>,
}

/// Residuals at or below this level count as exact agreement.
pub const EXACT_FLOOR: f64 = 1e-11;
/// Minimal fitted order over the ladder.
pub const MIN_ORDER: f64 = 1.9;

/// Per-identity constants `C` in the pass rule `residual <= C h^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub grid_size: usize,
    pub safety: f64,
    pub constants: BTreeMap<IdentityId, f64>,
}

impl Default for Calibration {
    fn default() -> Self {
        serde_json::from_str(include_str!("../calibration/identities.json")).expect("bundled calibration parses")
    }
}

impl Calibration {
    pub fn constant(&self, id: IdentityId) -> f64 {
        self.constants.get(&id).copied().unwrap_or(0.0)
    }

    /// Measure `C` for every identity at `grid_size` over the probe family.
    pub fn measure(probes: &[IdentityProbe], grid_size: usize, safety: f64) -> Result<Self> {
        let mut constants = BTreeMap::new();
        for id in IdentityId::ALL {
            let mut c = 0.0f64;
            for probe in probes {
                let (h, r) = level_residual(id, probe, grid_size, 0)?;
                c = c.max(r / (h * h));
            }
            constants.insert(id, c * safety);
        }
        Ok(Self { grid_size, safety, constants })
    }
}

/// Run one identity over the probe's ladder.
pub fn check(id: IdentityId, probe: &IdentityProbe, calibration: &Calibration) -> Result<IdentityReport> {
    let levels: Vec<(usize, usize)> = if id == IdentityId::LinearizedMa {
        (0..4).map(|k| (probe.ladder[0], k)).collect()
    } else {
        probe.ladder.iter().map(|&n| (n, 0)).collect()
    };
    let results: Vec<(f64, f64)> =
        levels.par_iter().map(|&(n, k)| level_residual(id, probe, n, k)).collect::<Result<_>>()?;
    let spacings: Vec<f64> = results.iter().map(|r| r.0).collect();
    let residuals: Vec<f64> = results.iter().map(|r| r.1).collect();
    let constant = calibration.constant(id);
    let exact = residuals.iter().all(|r| *r <= EXACT_FLOOR);
    let order = if exact { None } else { fitted_order(&spacings, &residuals) };
    let within = spacings.iter().zip(&residuals).all(|(h, r)| *r <= (constant * h * h).max(EXACT_FLOOR));
    let mut note = None;
    let mut passed = within && (exact || order.is_some_and(|o| o >= MIN_ORDER));
    if id == IdentityId::LogConcavity {
        if let LogConcavity::Refused { y, log_hessian } = probe.weights.log_concave {
            passed = false;
            note = Some(format!("certificate refused at y = {y:.4} (log-Hessian {log_hessian:.3e})"));
        }
    }
    Ok(IdentityReport {
        id,
        probe: probe.label.clone(),
        sizes: levels.iter().map(|l| l.0).collect(),
        spacings,
        residuals,
        order,
        constant,
        passed,
        note,
    })
}

/// All identities on all probes, in parallel.
pub fn run_suite(probes: &[IdentityProbe], calibration: &Calibration) -> Result<Vec<IdentityReport>> {
    let jobs: Vec<(IdentityId, &IdentityProbe)> =
        probes.iter().flat_map(|p| IdentityId::ALL.into_iter().map(move |id| (id, p))).collect();
    jobs.par_iter().map(|(id, p)| check(*id, p, calibration)).collect()
}

/// Path steps for the linearization check.
const PATH_STEPS: [f64; 4] = [0.4, 0.2, 0.1, 0.05];

/// `(spacing, max trusted residual)` of one identity at one ladder level.
fn level_residual(id: IdentityId, probe: &IdentityProbe, n: usize, level: usize) -> Result<(f64, f64)> {
    let bg = Arc::new(BackgroundMetric::standard(n, probe.half_width)?);
    let state = probe.phi.state(bg.clone())?;
    let range = state.trusted_checked()?;
    let h = bg.grid().spacing();
    let residual = match id {
        IdentityId::LinearizedMa => {
            let s = PATH_STEPS[level];
            let r = linearized_ma_residual(&state, &probe.weights.v, &probe.direction.sample(&bg), s, probe.jxi_sign)?;
            return Ok((s, max_abs_on(&r, range)));
        }
        IdentityId::GradLogv => grad_logv_residual(&state, &probe.weights.v),
        IdentityId::LapLogv => lap_logv_residual(&state, &probe.weights.v),
        IdentityId::JxiLogvol => jxi_logvol_residual(&state, probe.jxi_sign),
        IdentityId::DriftF => drift_f_residual(&state, &probe.weights.v, probe.jxi_sign),
        IdentityId::LaplaceFprime => {
            let ctx = PathContext::new(&state, probe)?;
            laplace_fprime_residual(&state, &ctx, probe.jxi_sign)
        }
        IdentityId::LogConcavity => log_concavity_residual(&state, &probe.weights),
        IdentityId::CoupledEquivalence => {
            let ctx = PathContext::new(&state, probe)?;
            coupled_equivalence_residual(&state, &ctx, probe.jxi_sign)
        }
        IdentityId::MuConsistency => mu_consistency_residual(&state, probe.xi, probe.lambda, probe.jxi_sign),
    };
    Ok((h, max_abs_on(&residual, range)))
}

fn oriented_jxi(state: &ToricKahlerState, h: &[f64], sign: f64) -> Vec<f64> {
    state.jxi(h).into_iter().map(|a| sign * a).collect()
}

fn oriented_drift(state: &ToricKahlerState, v: &Weight, h: &[f64], sign: f64) -> Vec<f64> {
    let lap = state.laplacian(h);
    let jx = oriented_jxi(state, h, sign);
    let ws = state.weight_samples(v);
    (0..state.len()).map(|i| lap[i] - ws.d1[i] / ws.value[i] * jx[i]).collect()
}

/// Weighted measure density `v(m) rho` per `dx dθ`.
fn weighted_measure(state: &ToricKahlerState, v: &Weight) -> Vec<f64> {
    state.weight_samples(v).value.iter().zip(state.density()).map(|(a, r)| a * r).collect()
}

/// Central difference in `s` of `v(m) ω` along `phi + s psi` against the drift Laplacian of `psi`.
pub fn linearized_ma_residual(state: &ToricKahlerState, v: &Weight, psi: &[f64], s: f64, sign: f64) -> Result<Vec<f64>> {
    let shifted = |sg: f64| {
        let phi: Vec<f64> = state.phi().iter().zip(psi).map(|(p, q)| p + sg * s * q).collect();
        ToricKahlerState::build(state.background().clone(), phi)
    };
    let plus = weighted_measure(&shifted(1.0)?, v);
    let minus = weighted_measure(&shifted(-1.0)?, v);
    let drift = oriented_drift(state, v, psi, sign);
    let mu = weighted_measure(state, v);
    Ok((0..state.len()).map(|i| (plus[i] - minus[i]) / (2.0 * s) - drift[i] * mu[i]).collect())
}

/// `|∇ log v(m)|^2 - (v'/v)^2 <ξ,ξ>`.
pub fn grad_logv_residual(state: &ToricKahlerState, v: &Weight) -> Vec<f64> {
    let ws = state.weight_samples(v);
    let logv: Vec<f64> = ws.value.iter().map(|a| a.ln()).collect();
    let lhs = state.grad_norm_sq(&logv);
    let xi = state.xi_norm();
    (0..state.len()).map(|i| lhs[i] - (ws.d1[i] / ws.value[i]).powi(2) * xi[i]).collect()
}

/// `Δ log v(m) - [(v'/v) Δm + (v''/v - (v'/v)^2) <ξ,ξ>]`.
pub fn lap_logv_residual(state: &ToricKahlerState, v: &Weight) -> Vec<f64> {
    let ws = state.weight_samples(v);
    let logv: Vec<f64> = ws.value.iter().map(|a| a.ln()).collect();
    let lhs = state.laplacian(&logv);
    let dm = state.laplacian_of_moment();
    let xi = state.xi_norm();
    (0..state.len())
        .map(|i| {
            let g = ws.d1[i] / ws.value[i];
            lhs[i] - (g * dm[i] + (ws.d2[i] / ws.value[i] - g * g) * xi[i])
        })
        .collect()
}

/// `-Jξ log(ω_φ/ω) - (Δ_φ m_φ - Δ_ω m_ω)`.
pub fn jxi_logvol_residual(state: &ToricKahlerState, sign: f64) -> Vec<f64> {
    let lhs = oriented_jxi(state, state.log_volume_ratio(), sign);
    let dm = state.laplacian_of_moment();
    let dm0 = state.background().laplacian_of_moment();
    (0..state.len()).map(|i| -lhs[i] - (dm[i] - dm0[i])).collect()
}

/// `(Δ - (v'/v)Jξ) F - (-S_v/v + tr_{v,φ} Ric(ω) / v)`.
pub fn drift_f_residual(state: &ToricKahlerState, v: &Weight, sign: f64) -> Vec<f64> {
    let f = state.f_field(v);
    let lhs = oriented_drift(state, v, &f, sign);
    let sv = state.weighted_scalar_curvature(v);
    let ric = InvariantForm::ricci(state.background());
    let tr = state.tr_v_phi(v, &ric);
    let ws = state.weight_samples(v);
    (0..state.len()).map(|i| lhs[i] - (-sv[i] + tr[i]) / ws.value[i]).collect()
}

/// Data of the continuity path at one parameter `t`.
pub struct PathContext {
    pub weights: WeightPair,
    pub t: f64,
    pub theta: InvariantForm,
    pub theta_bar: f64,
    pub ell: crate::invariants::AffineFunction,
}

impl PathContext {
    pub fn new(state: &ToricKahlerState, probe: &IdentityProbe) -> Result<Self> {
        if !(probe.t > 0.0 && probe.t <= 1.0) {
            return Err(Error::InvalidInput(format!("path parameter must lie in (0, 1], got {}", probe.t)));
        }
        let bg = state.background();
        let twist = TwistForm::new(probe.twist.clone(), bg, &probe.weights)?;
        let base = ToricKahlerState::background_state(bg.clone());
        Ok(Self {
            t: probe.t,
            theta_bar: theta_bar(&base, &probe.weights, &twist.form),
            ell: ell_ext(&base, &probe.weights)?,
            theta: twist.form,
            weights: probe.weights.clone(),
        })
    }

    /// `η_t = (1 - 1/t) θ + Ric(ω)`.
    pub fn eta(&self, state: &ToricKahlerState) -> InvariantForm {
        self.theta.axpy(1.0 - 1.0 / self.t, &InvariantForm::ricci(state.background()))
    }

    /// Residual of the second equation of the coupled system for the candidate `F`.
    pub fn second_equation(&self, state: &ToricKahlerState, f: &[f64], sign: f64) -> Vec<f64> {
        let (v, w) = (&self.weights.v, &self.weights.w);
        let lhs = oriented_drift(state, v, f, sign);
        let vs = state.weight_samples(v);
        let ws = state.weight_samples(w);
        let tr = state.tr_v_phi(v, &self.eta(state));
        let s = 1.0 - 1.0 / self.t;
        (0..state.len())
            .map(|i| {
                let m = state.moment()[i];
                let rhs = (-self.ell.eval(m) * ws.value[i] + tr[i] - s * self.theta_bar * ws.value[i]) / vs.value[i];
                lhs[i] - rhs
            })
            .collect()
    }

    /// Scalar path residual `t(S_v/w - ℓ) - (1-t)(tr_{v,φ}θ / w - θ̄)`.
    pub fn scalar_residual(&self, state: &ToricKahlerState) -> Vec<f64> {
        let sv = state.weighted_scalar_curvature(&self.weights.v);
        let tr = state.tr_v_phi(&self.weights.v, &self.theta);
        let ws = state.weight_samples(&self.weights.w);
        (0..state.len())
            .map(|i| {
                let m = state.moment()[i];
                self.t * (sv[i] / ws.value[i] - self.ell.eval(m)) - (1.0 - self.t) * (tr[i] / ws.value[i] - self.theta_bar)
            })
            .collect()
    }
}

/// Rearranged Laplacian of `F - log v` minus its expansion, less the coupled-system residual.
pub fn laplace_fprime_residual(state: &ToricKahlerState, ctx: &PathContext, sign: f64) -> Vec<f64> {
    let (v, w) = (&ctx.weights.v, &ctx.weights.w);
    let g = state.log_volume_ratio();
    let lap = state.laplacian(g);
    let jx = oriented_jxi(state, g, sign);
    let vs = state.weight_samples(v);
    let ws = state.weight_samples(w);
    let xi = state.xi_norm();
    let eta = ctx.eta(state);
    let tr_eta = state.tr_phi(&eta);
    let dm0 = state.background().laplacian_of_moment();
    let r2 = ctx.second_equation(state, &state.f_field(v), sign);
    let s = 1.0 - 1.0 / ctx.t;
    (0..state.len())
        .map(|i| {
            let m = state.moment()[i];
            let (vv, v1, v2) = (vs.value[i], vs.d1[i], vs.d2[i]);
            let f_prime = (ctx.ell.eval(m) + s * ctx.theta_bar) * ws.value[i] / vv - s * v1 * ctx.theta.hamiltonian[i] / vv
                + 2.0 * v1 / vv * dm0[i];
            let rhs = -f_prime + tr_eta[i] + 2.0 * v1 / vv * jx[i] - v2 / vv * xi[i];
            lap[i] - rhs - r2[i]
        })
        .collect()
}

/// `max(0, (v''/v - (v'/v)^2) <ξ,ξ>)` pointwise, plus any violation of the `A tr ω_φ` majorization.
pub fn log_concavity_residual(state: &ToricKahlerState, weights: &WeightPair) -> Vec<f64> {
    let vs = state.weight_samples(&weights.v);
    let xi = state.xi_norm();
    let trace = state.trace_ratio();
    let f2max = state.background().density().iter().copied().fold(0.0, f64::max);
    let a = weights.xi_pair_constant(state.background().polytope()) * 2.0 * f2max;
    (0..state.len())
        .map(|i| {
            let g = vs.d1[i] / vs.value[i];
            let q = vs.d2[i] / vs.value[i] - g * g;
            let excess = ((2.0 * g * g - vs.d2[i] / vs.value[i]).abs() * xi[i] - a * trace[i]).max(0.0);
            (q * xi[i]).max(0.0) + excess
        })
        .collect()
}

/// `𝓕 + (t v / w) R_2`, which vanishes identically when `F` is the state's own field.
pub fn coupled_equivalence_residual(state: &ToricKahlerState, ctx: &PathContext, sign: f64) -> Vec<f64> {
    let scalar = ctx.scalar_residual(state);
    let r2 = ctx.second_equation(state, &state.f_field(&ctx.weights.v), sign);
    let vs = state.weight_samples(&ctx.weights.v);
    let ws = state.weight_samples(&ctx.weights.w);
    (0..state.len()).map(|i| scalar[i] + ctx.t * vs.value[i] / ws.value[i] * r2[i]).collect()
}

/// Term-by-term μ scalar curvature against `S_v/v - λ m^ξ` with `v = e^{c y}`.
///
/// The `Jξ(m^ξ)` term enters with the orientation opposite to `jxi`, i.e. as `+<ξ,ξ>`.
pub fn mu_consistency_residual(state: &ToricKahlerState, c: f64, lambda: f64, sign: f64) -> Vec<f64> {
    let mxi: Vec<f64> = state.moment().iter().map(|m| c * m).collect();
    let s = state.scalar_curvature();
    let lap = state.laplacian(&mxi);
    let jx: Vec<f64> = oriented_jxi(state, &mxi, sign).into_iter().map(|a| c * a).collect();
    let v = Weight::exponential(c);
    let sv = state.weighted_scalar_curvature(&v);
    let vs = state.weight_samples(&v);
    (0..state.len())
        .map(|i| {
            let term = s[i] - 2.0 * lap[i] + jx[i] - lambda * mxi[i];
            term - (sv[i] / vs.value[i] - lambda * mxi[i])
        })
        .collect()
}
