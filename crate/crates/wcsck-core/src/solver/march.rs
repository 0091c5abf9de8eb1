use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::FunctionalContext;
use crate::state::{max_abs_on, ToricKahlerState};

use super::newton::{newton_solve, solve_t0, NewtonSettings};
use super::PathResidualConfig;

/// Quantities controlled by the a priori estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticsSnapshot {
    pub sup_phi: f64,
    pub entropy: f64,
    /// `∫ (ρ/f0'')^p ω` for `p = 2, 4, 8`.
    pub trace_moments: [f64; 3],
    /// `sup |∇(F - log v(m))|_φ`.
    pub grad_f: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
}

impl DiagnosticsSnapshot {
    pub fn is_finite(&self) -> bool {
        [self.sup_phi, self.entropy, self.grad_f, self.ratio_min, self.ratio_max].iter().chain(&self.trace_moments).all(|x| x.is_finite())
    }
}

pub fn diagnostics(ctx: &FunctionalContext, st: &ToricKahlerState) -> Result<DiagnosticsSnapshot> {
    let range = st.trusted_checked()?;
    let base = ToricKahlerState::background_state(ctx.background.clone());
    let ratio = st.trace_ratio();
    let moment = |p: i32| base.integrate(&ratio.iter().map(|r| r.powi(p)).collect::<Vec<_>>());
    let grad = st.grad_norm_sq(st.log_volume_ratio());
    let f = st.f_field(&ctx.weights.v);
    let vs = st.weight_samples(&ctx.weights.v);
    let entropy = st.integrate(&f.iter().zip(&vs.value).map(|(a, b)| a * b).collect::<Vec<_>>());
    let sel = &ratio[range.clone()];
    Ok(DiagnosticsSnapshot {
        sup_phi: st.sup_abs_phi(),
        entropy,
        trace_moments: [moment(2), moment(4), moment(8)],
        grad_f: max_abs_on(&grad, range).sqrt(),
        ratio_min: sel.iter().copied().fold(f64::INFINITY, f64::min),
        ratio_max: sel.iter().copied().fold(0.0, f64::max),
    })
}

/// Limits beyond which a march is declared degenerate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticBounds {
    pub sup_phi: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub grad_f: f64,
}

impl Default for DiagnosticBounds {
    fn default() -> Self {
        Self { sup_phi: 1e2, ratio_min: 1e-3, ratio_max: 1e3, grad_f: 1e3 }
    }
}

impl DiagnosticBounds {
    fn check(&self, t: f64, d: &DiagnosticsSnapshot) -> Result<()> {
        let fail = |quantity: &str, value: f64| Err(Error::DiagnosticsBlowUp { t, quantity: quantity.into(), value });
        if !d.is_finite() {
            return fail("non-finite snapshot", f64::NAN);
        }
        if d.sup_phi > self.sup_phi {
            return fail("sup_phi", d.sup_phi);
        }
        if d.ratio_min < self.ratio_min {
            return fail("ratio_min", d.ratio_min);
        }
        if d.ratio_max > self.ratio_max {
            return fail("ratio_max", d.ratio_max);
        }
        if d.grad_f > self.grad_f {
            return fail("grad_f", d.grad_f);
        }
        Ok(())
    }
}

/// Step control of the march in `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarchSettings {
    pub t0: f64,
    pub t_max: f64,
    pub dt_initial: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub growth: f64,
    /// Steps converging within this many iterations grow `dt`.
    pub fast_iterations: usize,
    pub max_steps: usize,
    pub newton: NewtonSettings,
    pub bounds: DiagnosticBounds,
    pub track_mabuchi: bool,
}

impl Default for MarchSettings {
    fn default() -> Self {
        Self {
            t0: 1e-3,
            t_max: 1.0,
            dt_initial: 1e-2,
            dt_min: 1e-6,
            dt_max: 0.1,
            growth: 1.3,
            fast_iterations: 4,
            max_steps: 400,
            newton: NewtonSettings::default(),
            bounds: DiagnosticBounds::default(),
            track_mabuchi: true,
        }
    }
}

/// One accepted point of the path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub t: f64,
    #[serde(skip)]
    pub phi: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub diagnostics: DiagnosticsSnapshot,
    pub mabuchi_t: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ContinuityTrace {
    pub records: Vec<TraceRecord>,
    /// Attempted steps, including rejected ones.
    pub attempts: usize,
    pub first_eigenvalue: Option<f64>,
}

impl ContinuityTrace {
    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn reached(&self, t: f64) -> bool {
        self.last().is_some_and(|r| r.t >= t)
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Failed march with everything accepted before the failure.
#[derive(Debug, Clone, PartialEq)]
pub struct MarchFailure {
    pub error: Error,
    pub trace: ContinuityTrace,
}

fn record(ctx: &FunctionalContext, settings: &MarchSettings, t: f64, phi: Vec<f64>, residual: f64, iterations: usize) -> Result<TraceRecord> {
    let st = ctx.state(phi.clone())?;
    let diagnostics = diagnostics(ctx, &st)?;
    settings.bounds.check(t, &diagnostics)?;
    let mabuchi_t = if settings.track_mabuchi { Some(ctx.mabuchi_twisted(&phi, t)?) } else { None };
    Ok(TraceRecord { t, phi, residual, iterations, diagnostics, mabuchi_t })
}

/// March from `t0` to `t_max`, starting from the `t0` solution, or resuming after `resume`.
pub fn march(ctx: &FunctionalContext, settings: &MarchSettings, resume: Option<&TraceRecord>) -> std::result::Result<ContinuityTrace, Box<MarchFailure>> {
    let mut trace = ContinuityTrace::default();
    let fail = |error: Error, trace: ContinuityTrace| Box::new(MarchFailure { error, trace });
    if !(settings.t0 > 0.0 && settings.t0 <= settings.t_max && settings.t_max <= 1.0) {
        return Err(fail(Error::InvalidInput("march needs 0 < t0 <= t_max <= 1".into()), trace));
    }
    let base = PathResidualConfig::new(ctx.clone(), settings.t0).map_err(|e| fail(e, ContinuityTrace::default()))?;
    match resume {
        Some(r) => trace.records.push(r.clone()),
        None => {
            let mut t0 = settings.t0;
            loop {
                trace.attempts += 1;
                let attempt = base.at(t0).and_then(|c| solve_t0(&c, &settings.newton)).and_then(|sol| {
                    let rec = record(ctx, settings, t0, sol.phi.clone(), sol.newton.final_residual(), sol.newton.iterations)?;
                    Ok((sol, rec))
                });
                match attempt {
                    Ok((sol, rec)) => {
                        trace.first_eigenvalue = Some(sol.first_eigenvalue);
                        trace.records.push(rec);
                        break;
                    }
                    Err(e @ Error::DiagnosticsBlowUp { .. }) => return Err(fail(e, trace)),
                    Err(_) if t0 * 0.5 >= settings.dt_min => t0 *= 0.5,
                    Err(_) => return Err(fail(Error::StepUnderflow { t: 0.0, dt: t0 * 0.5 }, trace)),
                }
            }
        }
    }
    let mut dt = settings.dt_initial.min(settings.dt_max);
    let mut previous: Option<(f64, Vec<f64>)> = None;
    while !trace.reached(settings.t_max) {
        if trace.records.len() >= settings.max_steps {
            let t = trace.last().map_or(0.0, |r| r.t);
            return Err(fail(Error::StepUnderflow { t, dt }, trace));
        }
        let last = trace.last().expect("nonempty").clone();
        let t_new = (last.t + dt).min(settings.t_max);
        let guess = match &previous {
            Some((tp, pp)) => {
                let k = (t_new - last.t) / (last.t - tp);
                let g: Vec<f64> = last.phi.iter().zip(pp).map(|(a, b)| a + k * (a - b)).collect();
                if ctx.state(g.clone()).is_ok() { g } else { last.phi.clone() }
            }
            None => last.phi.clone(),
        };
        trace.attempts += 1;
        let outcome = base.at(t_new).and_then(|c| newton_solve(&guess, &c, &settings.newton));
        match outcome {
            Ok(rep) if rep.converged => {
                let iterations = rep.iterations;
                match record(ctx, settings, t_new, rep.phi.clone(), rep.final_residual(), iterations) {
                    Ok(rec) => {
                        previous = Some((last.t, last.phi));
                        trace.records.push(rec);
                        if iterations <= settings.fast_iterations {
                            dt = (dt * settings.growth).min(settings.dt_max);
                        }
                    }
                    Err(e) => return Err(fail(e, trace)),
                }
            }
            _ => {
                dt *= 0.5;
                if dt < settings.dt_min {
                    return Err(fail(Error::StepUnderflow { t: last.t, dt }, trace));
                }
            }
        }
    }
    Ok(trace)
}
