use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use wcsck_core::functionals::{coercivity_probe, legendre_ray, toric_geodesic, CoercivityFit, FunctionalContext, SymplecticRay};
use wcsck_core::identities::{run_suite, Calibration, IdentityProbe};
use wcsck_core::profiles::PotentialProfile;
use wcsck_core::weights::LogConcavity;
use wcsck_core::solver::{
    diagnostics, march, newton_solve, trusted_residual_norm, ContinuityTrace, MarchSettings, NewtonSettings, PathResidualConfig, TraceRecord,
};

use crate::error::{HarnessError, Result};
use crate::record::{Check, RunRecord, CONVENTIONS};
use crate::scenario::{Scenario, Task};

/// Torus shifts at which the Futaki invariant is sampled.
pub const FUTAKI_SHIFTS: [f64; 5] = [-1.0, -0.3, 0.0, 0.4, 1.2];

/// Plain table written as RFC-4180 CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|x| x.to_string()).collect());
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush().map_err(HarnessError::io(path))?;
        Ok(())
    }
}

/// Data behind the plot exports.
#[derive(Debug, Clone, PartialEq)]
pub enum PlotData {
    None,
    March(ContinuityTrace),
    Coercivity { s: Vec<f64>, fit: CoercivityFit },
}

/// Everything a task produced before it is written to disk.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub task: Task,
    pub events: Vec<Value>,
    pub summary: Table,
    pub extra: Vec<(String, Table)>,
    pub checks: Vec<Check>,
    pub error: Option<String>,
    pub plots: PlotData,
    /// Last accepted potential of a march or solve, for resuming.
    pub last_state: Option<SavedState>,
}

impl RunOutput {
    fn new(task: Task, summary: Table) -> Self {
        Self { task, events: Vec::new(), summary, extra: Vec::new(), checks: Vec::new(), error: None, plots: PlotData::None, last_state: None }
    }

    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.passed)
    }
}

/// Potential at an accepted path parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedState {
    pub t: f64,
    pub phi: Vec<f64>,
}

fn newton_settings(s: &Scenario) -> NewtonSettings {
    NewtonSettings { tolerance: s.tolerances.newton, floor_tolerance: s.tolerances.newton_floor, ..NewtonSettings::default() }
}

fn march_settings(s: &Scenario) -> MarchSettings {
    let m = &s.march;
    MarchSettings {
        t0: m.t0,
        t_max: m.t_max,
        dt_initial: m.dt_initial,
        dt_min: m.dt_min,
        dt_max: m.dt_max,
        growth: m.growth,
        max_steps: m.max_steps,
        newton: newton_settings(s),
        ..MarchSettings::default()
    }
}

fn random_states(s: &Scenario, ctx: &FunctionalContext) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let length = s.polytope.max - s.polytope.min;
    (0..s.probes.count).map(|_| PotentialProfile::random(&mut rng, s.probes.modes, s.probes.strength, length).sample(&ctx.background)).collect()
}

fn sci(x: f64) -> String {
    format!("{x:.3e}")
}

/// Run `task` on `scenario` in memory.
pub fn execute(scenario: &Scenario, task: Task, resume: Option<&SavedState>) -> Result<RunOutput> {
    match task {
        Task::VerifyIdentities => verify_identities(scenario),
        Task::Functionals => functionals(scenario),
        Task::Futaki => futaki(scenario),
        Task::Coercivity => coercivity(scenario),
        Task::Solve => solve(scenario),
        Task::March => run_march(scenario, resume),
    }
}

fn verify_identities(s: &Scenario) -> Result<RunOutput> {
    let weights = s.weight_pair()?;
    let probes: Vec<IdentityProbe> = [("zero", PotentialProfile::Zero), ("bump", IdentityProbe::standard_bump())]
        .into_iter()
        .map(|(name, phi)| {
            let mut p = IdentityProbe::new(format!("{}/{name}", weights.v.preset_name()), weights.clone(), phi);
            p.half_width = s.grid.half_width;
            p
        })
        .collect();
    let mut out = RunOutput::new(Task::VerifyIdentities, Table::new(&["identity", "probe", "level", "size", "spacing", "residual", "order", "passed"]));
    let certificate = match weights.log_concave {
        LogConcavity::Certified { samples, max_log_hessian } => Check::new("log_concavity_certificate", true, format!("{samples} samples, max log-Hessian {}", sci(max_log_hessian))),
        LogConcavity::Refused { y, log_hessian } => {
            Check::new("log_concavity_certificate", false, format!("certificate refused at y = {y:.4} (log-Hessian {})", sci(log_hessian)))
        }
    };
    out.events.push(json!({ "event": "certificate", "weight": weights.v, "result": weights.log_concave }));
    out.checks.push(certificate);
    let reports = match run_suite(&probes, &Calibration::default()) {
        Ok(r) => r,
        Err(e) => {
            out.error = Some(e.to_string());
            return Ok(out);
        }
    };
    for r in &reports {
        out.events.push(json!({ "event": "identity", "report": r }));
        let order = r.order.map_or(String::new(), |o| o.to_string());
        for (k, ((n, h), res)) in r.sizes.iter().zip(&r.spacings).zip(&r.residuals).enumerate() {
            out.summary.rows.push(vec![
                r.id.to_string(),
                r.probe.clone(),
                k.to_string(),
                n.to_string(),
                h.to_string(),
                res.to_string(),
                order.clone(),
                r.passed.to_string(),
            ]);
        }
        let detail = match (&r.note, r.order) {
            (Some(note), _) => note.clone(),
            (None, Some(o)) => format!("order {o:.3}, max residual {}", sci(r.residuals.iter().copied().fold(0.0, f64::max))),
            (None, None) => "exact at every level".into(),
        };
        out.checks.push(Check::new(format!("{}/{}", r.id, r.probe), r.passed, detail));
    }
    Ok(out)
}

fn functionals(s: &Scenario) -> Result<RunOutput> {
    let ctx = s.context()?;
    let states = random_states(s, &ctx);
    let zero = vec![0.0; ctx.background.len()];
    let mut out = RunOutput::new(
        Task::Functionals,
        Table::new(&["state", "e_v", "lambda_v", "i_v", "j_v", "j_v_torus", "h_v", "e_v_ric", "e_w_ell", "mabuchi", "mabuchi_t", "j_theta"]),
    );
    for (k, phi) in states.iter().enumerate() {
        let r = ctx.report(phi, s.solve.t)?;
        out.events.push(json!({ "event": "functionals", "state": k, "report": r }));
        out.summary.push_numbers(&[k as f64, r.e_v, r.lambda_v, r.i_v, r.j_v, r.j_v_torus, r.h_v, r.e_v_ric, r.e_w_ell, r.mabuchi, r.mabuchi_t, r.j_theta]);
    }
    let tol = &s.tolerances;
    let mut gradient = 0.0f64;
    let (mut affinity, mut convexity) = (0.0f64, f64::INFINITY);
    for w in states.windows(2) {
        let chk = ctx.variational_gradient_check(&w[0], &w[1])?;
        out.events.push(json!({ "event": "variational_check", "check": chk }));
        gradient = gradient.max(chk.residual);
        let (s0, s1) = (ctx.state(w[0].clone())?, ctx.state(w[1].clone())?);
        let mid = toric_geodesic(&s0, &s1, 0.5)?;
        let e = |phi: &[f64]| ctx.energy_ev(phi, &zero);
        affinity = affinity.max((e(&mid)? - 0.5 * (e(&w[0])? + e(&w[1])?)).abs());
        convexity = convexity.min(0.5 * (ctx.mabuchi(&w[0])? + ctx.mabuchi(&w[1])?) - ctx.mabuchi(&mid)?);
    }
    out.checks.push(Check::new("mabuchi_gradient", gradient <= tol.gradient, format!("max residual {}", sci(gradient))));
    out.checks.push(Check::new("energy_affinity", affinity <= tol.affinity, format!("max midpoint defect {}", sci(affinity))));
    out.checks.push(Check::new("mabuchi_convexity", convexity >= -tol.convexity, format!("min midpoint gap {}", sci(convexity))));
    Ok(out)
}

fn futaki(s: &Scenario) -> Result<RunOutput> {
    let ctx = s.context()?;
    let mut out = RunOutput::new(Task::Futaki, Table::new(&["state", "mean", "max_deviation"]));
    let (mut size, mut spread) = (0.0f64, 0.0f64);
    for (k, phi) in random_states(s, &ctx).iter().enumerate() {
        let f = ctx.futaki(phi, &FUTAKI_SHIFTS)?;
        out.events.push(json!({ "event": "futaki", "state": k, "report": f }));
        out.summary.push_numbers(&[k as f64, f.mean, f.max_deviation]);
        size = size.max(f.mean.abs());
        spread = spread.max(f.max_deviation);
    }
    let tol = s.tolerances.futaki;
    out.checks.push(Check::new("futaki_vanishes", size <= tol, format!("max |F| {}", sci(size))));
    out.checks.push(Check::new("futaki_constant", spread <= tol, format!("max deviation {}", sci(spread))));
    Ok(out)
}

fn coercivity(s: &Scenario) -> Result<RunOutput> {
    let ctx = s.context()?;
    let c = &s.coercivity;
    let ray = SymplecticRay { center: c.center, stiffness: c.stiffness };
    let params: Vec<f64> = (0..c.steps).map(|k| k as f64 * c.step).collect();
    let family: Vec<Vec<f64>> = params.iter().map(|&p| legendre_ray(&ctx.background, ray, p)).collect::<wcsck_core::Result<_>>()?;
    let fit = coercivity_probe(&ctx, &family)?;
    let mut out = RunOutput::new(Task::Coercivity, Table::new(&["s", "j_v", "mabuchi"]));
    for ((p, j), m) in params.iter().zip(&fit.j).zip(&fit.mabuchi) {
        out.summary.push_numbers(&[*p, *j, *m]);
    }
    out.events.push(json!({ "event": "coercivity", "fit": fit }));
    let detail = match (fit.delta, fit.constant) {
        (Some(d), Some(k)) => format!("M >= {d:.4} J - {k:.4}"),
        _ => "J does not vary along the ray".into(),
    };
    out.checks.push(Check::new("envelope_fit", fit.delta.is_some_and(|d| d > 0.0), detail));
    out.plots = PlotData::Coercivity { s: params, fit };
    Ok(out)
}

fn solve(s: &Scenario) -> Result<RunOutput> {
    let ctx = s.context()?;
    let cfg = PathResidualConfig::new(ctx.clone(), s.solve.t)?;
    let report = newton_solve(&cfg.anchor, &cfg, &newton_settings(s))?;
    let mut out = RunOutput::new(Task::Solve, Table::new(&["iteration", "residual", "system_residual", "damping"]));
    for (k, (r, sr)) in report.residuals.iter().zip(&report.system_residuals).enumerate() {
        let damping = if k == 0 { f64::NAN } else { report.damping[k - 1] };
        out.summary.push_numbers(&[k as f64, *r, *sr, damping]);
    }
    out.events.push(json!({ "event": "newton", "t": s.solve.t, "report": report }));
    let mut solution = Table::new(&["x", "moment", "phi"]);
    let st = ctx.state(report.phi.clone())?;
    for ((x, m), p) in st.grid().nodes().iter().zip(st.moment()).zip(&report.phi) {
        solution.push_numbers(&[*x, *m, *p]);
    }
    out.extra.push(("solution.csv".into(), solution));
    let fin = report.final_residual();
    out.checks.push(Check::new("newton_converged", report.converged, format!("{} iterations, residual {}", report.iterations, sci(fin))));
    out.last_state = Some(SavedState { t: s.solve.t, phi: report.phi });
    Ok(out)
}

fn resume_record(ctx: &FunctionalContext, saved: &SavedState) -> Result<TraceRecord> {
    if saved.phi.len() != ctx.background.len() {
        return Err(HarnessError::Validation(format!("resume state has {} nodes, grid has {}", saved.phi.len(), ctx.background.len())));
    }
    let st = ctx.state(saved.phi.clone())?;
    let cfg = PathResidualConfig::new(ctx.clone(), saved.t)?;
    Ok(TraceRecord {
        t: saved.t,
        phi: saved.phi.clone(),
        residual: trusted_residual_norm(&st, &cfg)?,
        iterations: 0,
        diagnostics: diagnostics(ctx, &st)?,
        mabuchi_t: Some(ctx.mabuchi_twisted(&saved.phi, saved.t)?),
    })
}

fn run_march(s: &Scenario, resume: Option<&SavedState>) -> Result<RunOutput> {
    let ctx = s.context()?;
    let settings = march_settings(s);
    let start = resume.map(|saved| resume_record(&ctx, saved)).transpose()?;
    let mut out = RunOutput::new(
        Task::March,
        Table::new(&[
            "t",
            "residual",
            "iterations",
            "sup_phi",
            "entropy",
            "trace_moment_2",
            "trace_moment_4",
            "trace_moment_8",
            "grad_f",
            "ratio_min",
            "ratio_max",
            "mabuchi_t",
        ]),
    );
    let trace = match march(&ctx, &settings, start.as_ref()) {
        Ok(trace) => trace,
        Err(failure) => {
            out.error = Some(failure.error.to_string());
            failure.trace
        }
    };
    for r in &trace.records {
        out.events.push(json!({ "event": "accepted", "record": r }));
        let d = &r.diagnostics;
        out.summary.push_numbers(&[
            r.t,
            r.residual,
            r.iterations as f64,
            d.sup_phi,
            d.entropy,
            d.trace_moments[0],
            d.trace_moments[1],
            d.trace_moments[2],
            d.grad_f,
            d.ratio_min,
            d.ratio_max,
            r.mabuchi_t.unwrap_or(f64::NAN),
        ]);
    }
    if let Some(e) = &out.error {
        out.events.push(json!({ "event": "march_failed", "error": e }));
    }
    let last = trace.last();
    let reached = trace.reached(settings.t_max);
    out.checks.push(Check::new("reached_t_max", reached, format!("last t = {}", last.map_or(f64::NAN, |r| r.t))));
    let fin = last.map_or(f64::NAN, |r| r.residual);
    out.checks.push(Check::new("final_residual", fin <= s.tolerances.march_residual, format!("residual {}", sci(fin))));
    let energies: Vec<f64> = trace.records.iter().filter_map(|r| r.mabuchi_t).collect();
    let rise = energies.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let detail = if energies.len() < 2 { "fewer than two records".into() } else { format!("largest increase {}", sci(rise)) };
    out.checks.push(Check::new("mabuchi_t_nonincreasing", energies.len() < 2 || rise <= 1e-6, detail));
    out.last_state = last.map(|r| SavedState { t: r.t, phi: r.phi.clone() });
    out.events.push(json!({ "event": "march_summary", "records": trace.records.len(), "attempts": trace.attempts, "first_eigenvalue": trace.first_eigenvalue }));
    out.plots = PlotData::March(trace);
    Ok(out)
}

/// Plot-ready tables: `(t, residual)`, `(t, diagnostics)` and `(t, M_t)` for a march, the envelope fit for coercivity.
pub fn export_plots(run: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    let missing = || HarnessError::MissingTrace { task: run.task.to_string() };
    let mut tables: Vec<(&str, Table)> = Vec::new();
    match &run.plots {
        PlotData::March(trace) if !trace.is_empty() => {
            let mut residual = Table::new(&["t", "residual"]);
            let mut diag = Table::new(&["t", "sup_phi", "entropy", "grad_f", "ratio_min", "ratio_max"]);
            let mut energy = Table::new(&["t", "mabuchi_t"]);
            for r in &trace.records {
                let d = &r.diagnostics;
                residual.push_numbers(&[r.t, r.residual]);
                diag.push_numbers(&[r.t, d.sup_phi, d.entropy, d.grad_f, d.ratio_min, d.ratio_max]);
                energy.push_numbers(&[r.t, r.mabuchi_t.unwrap_or(f64::NAN)]);
            }
            tables.extend([("plot_t_residual.csv", residual), ("plot_t_diagnostics.csv", diag), ("plot_t_mabuchi.csv", energy)]);
        }
        PlotData::Coercivity { s, fit } => {
            let (delta, constant) = (fit.delta.ok_or_else(missing)?, fit.constant.ok_or_else(missing)?);
            let mut env = Table::new(&["s", "mabuchi", "envelope"]);
            for ((p, m), j) in s.iter().zip(&fit.mabuchi).zip(&fit.j) {
                env.push_numbers(&[*p, *m, delta * j - constant]);
            }
            tables.push(("plot_coercivity_envelope.csv", env));
        }
        _ => return Err(missing()),
    }
    let mut paths = Vec::new();
    for (name, table) in tables {
        let path = dir.join(name);
        table.write(&path)?;
        paths.push(path);
    }
    Ok(paths)
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Run `task`, write events, summaries, plots and the manifest into `out_dir`.
pub fn run(scenario: &Scenario, task: Task, out_dir: &Path, resume: Option<&SavedState>) -> Result<RunRecord> {
    fs::create_dir_all(out_dir).map_err(HarnessError::io(out_dir))?;
    let started = now();
    let (output, error) = match execute(scenario, task, resume) {
        Ok(o) => (Some(o), None),
        Err(e @ (HarnessError::Parse { .. } | HarnessError::Validation(_) | HarnessError::Override { .. })) => return Err(e),
        Err(e) => (None, Some(e.to_string())),
    };
    let mut outputs = Vec::new();
    let events_path = out_dir.join("events.jsonl");
    let mut events = fs::File::create(&events_path).map_err(HarnessError::io(&events_path))?;
    let mut lines = vec![json!({ "event": "start", "task": task, "scenario_hash": scenario.hash(), "seed": scenario.seed })];
    if let Some(o) = &output {
        lines.extend(o.events.iter().cloned());
    }
    if let Some(e) = &error {
        lines.push(json!({ "event": "error", "error": e }));
    }
    for line in &lines {
        writeln!(events, "{}", serde_json::to_string(line)?).map_err(HarnessError::io(&events_path))?;
    }
    outputs.push("events.jsonl".to_string());
    let mut checks = Vec::new();
    let mut error = error;
    if let Some(o) = &output {
        o.summary.write(&out_dir.join("summary.csv"))?;
        outputs.push("summary.csv".into());
        for (name, table) in &o.extra {
            table.write(&out_dir.join(name))?;
            outputs.push(name.clone());
        }
        if !matches!(o.plots, PlotData::None) {
            match export_plots(o, out_dir) {
                Ok(paths) => outputs.extend(paths.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned())),
                Err(HarnessError::MissingTrace { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        if let Some(last) = &o.last_state {
            let path = out_dir.join("last_state.json");
            fs::write(&path, serde_json::to_string(last)?).map_err(HarnessError::io(&path))?;
            outputs.push("last_state.json".into());
        }
        checks = o.checks.clone();
        error = o.error.clone();
    }
    let passed = error.is_none() && checks.iter().all(|c| c.passed);
    let record = RunRecord {
        task,
        scenario_hash: scenario.hash(),
        version: env!("CARGO_PKG_VERSION"),
        seed: scenario.seed,
        started,
        finished: now(),
        outputs,
        checks,
        error,
        passed,
        conventions: &CONVENTIONS,
        calibration: Calibration::default(),
        scenario: scenario.clone(),
    };
    let manifest = out_dir.join("manifest.json");
    fs::write(&manifest, serde_json::to_string_pretty(&record)?).map_err(HarnessError::io(&manifest))?;
    Ok(record)
}
