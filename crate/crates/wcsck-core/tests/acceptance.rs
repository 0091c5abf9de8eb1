//! Acceptance criteria for the library, one PASS/FAIL line each.

use std::f64::consts::PI;
use std::io::Write;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wcsck_core::background::BackgroundMetric;
use wcsck_core::forms::TwistPreset;
use wcsck_core::functionals::{toric_geodesic, FunctionalContext};
use wcsck_core::identities::{check, run_suite, Calibration, IdentityId, IdentityProbe};
use wcsck_core::invariants::{ell_ext, AffineFunction};
use wcsck_core::polytope::Polytope;
use wcsck_core::profiles::PotentialProfile;
use wcsck_core::solver::*;
use wcsck_core::state::max_abs_on;
use wcsck_core::weights::{certify_log_concave, LogConcavity, Weight, WeightPair};

type Outcome = Result<String, String>;

fn ctx(n: usize, weights: WeightPair) -> FunctionalContext {
    let bg = Arc::new(BackgroundMetric::standard(n, 12.0).unwrap());
    FunctionalContext::new(bg, weights, TwistPreset::Gauge).unwrap()
}

fn random_phis(c: &FunctionalContext, seed: u64, count: usize, strength: f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| PotentialProfile::random(&mut rng, 4, strength, 1.0).sample(&c.background)).collect()
}

fn zero(c: &FunctionalContext) -> Vec<f64> {
    vec![0.0; c.background.len()]
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn identities() -> Outcome {
    let start = Instant::now();
    let reports = run_suite(&IdentityProbe::standard_family(), &Calibration::default()).map_err(err)?;
    let elapsed = start.elapsed();
    let failed: Vec<String> = reports.iter().filter(|r| !r.passed).map(|r| format!("{} on {}", r.id, r.probe)).collect();
    let worst = reports.iter().filter_map(|r| r.order).fold(f64::INFINITY, f64::min);
    let ladder = &IdentityProbe::standard_family()[0].ladder;
    let detail = format!("{} reports, min order {worst:.3}, ladder {ladder:?}, {:.1}s, failed {failed:?}", reports.len(), elapsed.as_secs_f64());
    ensure(failed.is_empty() && worst >= 1.9 && elapsed <= Duration::from_secs(60), detail)
}

fn fubini_study() -> Outcome {
    let c = ctx(257, WeightPair::unit());
    let phi = zero(&c);
    let cfg = PathResidualConfig::new(c.clone(), 1.0).map_err(err)?;
    let st = c.state(phi.clone()).map_err(err)?;
    let range = st.trusted();
    let h = st.grid().spacing();
    let bound = h * h;
    let res = max_abs_on(&residual(&phi, &cfg).map_err(err)?, range.clone());
    let sv = st.weighted_scalar_curvature(&c.weights.v);
    let (lo, hi) = range.clone().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), i| (a.min(sv[i]), b.max(sv[i])));
    let bumped = c.state(PotentialProfile::Bump { amplitude: 0.05, center: 0.5, width: 1.0 }.sample(&c.background)).map_err(err)?;
    let gauss_bonnet = (bumped.integrate(&bumped.scalar_curvature()) - 8.0 * PI).abs();
    let detail = format!("residual {res:.2e} (C h^2 = {bound:.2e}), S_v spread {:.2e}, Gauss-Bonnet defect {gauss_bonnet:.2e}", hi - lo);
    ensure(res <= bound && hi - lo <= 10.0 * bound && gauss_bonnet <= 1e-3, detail)
}

fn invariance() -> Outcome {
    let c = ctx(513, WeightPair::exponential(0.3));
    let base = c.state(zero(&c)).map_err(err)?;
    let first = base.integrate(&base.moment().iter().zip(base.weight_samples(&c.weights.v).value).map(|(m, v)| m * v).collect::<Vec<_>>());
    let (mut vol, mut ell, mut mom) = (0.0f64, 0.0f64, 0.0f64);
    for p in random_phis(&c, 3, 50, 0.6) {
        let st = c.state(p).map_err(err)?;
        let vs = st.weight_samples(&c.weights.v).value;
        vol = vol.max((st.weighted_volume(&c.weights.v) - c.volume_v).abs() / c.volume_v);
        let e = ell_ext(&st, &c.weights).map_err(err)?;
        ell = ell.max((e.a0 - c.ell.a0).abs().max((e.a1 - c.ell.a1).abs()) / c.ell.a0.abs().max(c.ell.a1.abs()));
        let m = st.integrate(&st.moment().iter().zip(&vs).map(|(m, v)| m * v).collect::<Vec<_>>());
        mom = mom.max((m - first).abs() / first.abs().max(c.volume_v));
    }
    let detail = format!("50 states: volume {vol:.2e}, ell {ell:.2e}, first moment {mom:.2e}");
    ensure(vol.max(ell).max(mom) <= 1e-6, detail)
}

fn operator() -> Outcome {
    let c = ctx(1025, WeightPair::exponential(0.3));
    let phi = PotentialProfile::Bump { amplitude: 0.05, center: 0.5, width: 1.0 }.sample(&c.background);
    let cfg = PathResidualConfig::new(c.clone(), 0.6).map_err(err)?;
    let op = linear_operator(&phi, &cfg).map_err(err)?;
    let dirs: Vec<Vec<f64>> = random_phis(&c, 4, 20, 0.1);
    let assembly = op.assembly_check(&dirs).map_err(err)?;
    let mut defect = 0.0f64;
    for a in &dirs[..6] {
        for b in &dirs[..6] {
            let (l, r) = (op.pairing(&op.apply_symmetric(a), b), op.pairing(a, &op.apply_symmetric(b)));
            defect = defect.max((l - r).abs() / l.abs().max(r.abs()));
        }
    }
    let range = op.state().trusted();
    let scale = max_abs_on(&op.apply_analytic(&dirs[0]), range.clone());
    let one = vec![1.0; c.background.len()];
    let kernel = max_abs_on(&op.apply_analytic(&one), range.clone()).max(max_abs_on(&op.apply_symmetric(&one), range)) / scale;
    let detail = format!("assembly {assembly:.2e}, self-adjointness {defect:.2e}, constants {kernel:.2e}");
    ensure(assembly <= 1e-4 && defect <= 1e-8 && kernel <= 1e-8, detail)
}

fn newton() -> Outcome {
    let c = ctx(257, WeightPair::unit());
    let cfg = PathResidualConfig::new(c.clone(), 1.0).map_err(err)?;
    let mut phi = PotentialProfile::Bump { amplitude: 1e-3, center: 0.5, width: 1.0 }.sample(&c.background);
    let mut res = Vec::new();
    for _ in 0..4 {
        let st = c.state(phi.clone()).map_err(err)?;
        res.push(trusted_residual_norm(&st, &cfg).map_err(err)?);
        phi = newton_step(&phi, &cfg).map_err(err)?;
    }
    let order = (res[2] / res[1]).ln() / (res[1] / res[0]).ln();
    let shown: Vec<String> = res.iter().map(|r| format!("{r:.2e}")).collect();
    let detail = format!("residuals {shown:?}, decay {:.1e}, order {order:.2}", res[0] / res[3]);
    ensure(res[0] / res[3] >= 1e4 && order >= 1.8, detail)
}

fn march_to_one(c: &FunctionalContext) -> (Outcome, Option<Vec<f64>>) {
    let start = Instant::now();
    let trace = match march(c, &MarchSettings::default(), None) {
        Ok(t) => t,
        Err(f) => return (Err(format!("{} after {} records", f.error, f.trace.records.len())), None),
    };
    let elapsed = start.elapsed();
    let last = trace.last().expect("nonempty");
    let bounded = trace.records.iter().all(|r| r.diagnostics.is_finite() && r.diagnostics.sup_phi < 1e2);
    let detail = format!(
        "t = {}, residual {:.2e}, {} steps ({} attempts), sup|phi| {:.2e}, {:.1}s",
        last.t,
        last.residual,
        trace.records.len(),
        trace.attempts,
        last.diagnostics.sup_phi,
        elapsed.as_secs_f64()
    );
    let ok = last.t >= 1.0 && last.residual <= 1e-6 && trace.records.len() <= 60 && bounded && elapsed <= Duration::from_secs(300);
    (ensure(ok, detail), Some(last.phi.clone()))
}

fn variational(c: &FunctionalContext, solved: Option<&[f64]>) -> Outcome {
    let pairs = random_phis(c, 7, 21, 0.5);
    let mut worst = 0.0f64;
    for w in pairs.windows(2) {
        worst = worst.max(c.variational_gradient_check(&w[0], &w[1]).map_err(err)?.residual);
    }
    let solved = solved.ok_or("no solved state")?;
    let m0 = c.mabuchi(solved).map_err(err)?;
    let mut gap = f64::INFINITY;
    for p in random_phis(c, 8, 100, 0.1) {
        let trial: Vec<f64> = solved.iter().zip(&p).map(|(a, b)| a + b).collect();
        gap = gap.min(c.mabuchi(&trial).map_err(err)? - m0);
    }
    let detail = format!("gradient residual {worst:.2e} on 20 pairs, min M(perturbed) - M(solved) = {gap:.2e}");
    ensure(worst <= 1e-5 && gap >= 0.0, detail)
}

fn futaki() -> Outcome {
    let c = ctx(513, WeightPair::exponential(0.3));
    let shifts = [-1.0, -0.3, 0.0, 0.4, 1.2];
    let mut worst = (0.0f64, 0.0f64);
    for p in random_phis(&c, 9, 3, 0.5) {
        let f = c.futaki(&p, &shifts).map_err(err)?;
        worst = (worst.0.max(f.mean.abs()), worst.1.max(f.max_deviation));
    }
    let wrong = c.with_ell(AffineFunction::new(c.ell.a0, c.ell.a1 + 0.05)).futaki(&zero(&c), &shifts).map_err(err)?;
    let detail = format!("|F| {:.2e}, constancy {:.2e}, wrong slope F = {:.3e}", worst.0, worst.1, wrong.mean);
    ensure(worst.0 <= 1e-5 && worst.1 <= 1e-5 && wrong.mean.abs() > 1e-3, detail)
}

fn geodesics() -> Outcome {
    let c = ctx(513, WeightPair::exponential(0.3));
    let p = random_phis(&c, 10, 11, 0.6);
    let e = |phi: &[f64]| c.energy_ev(phi, &zero(&c));
    let m = |phi: &[f64]| c.mabuchi(phi);
    let (mut affinity, mut convexity) = (0.0f64, f64::INFINITY);
    for w in p.windows(2) {
        let (s0, s1) = (c.state(w[0].clone()).map_err(err)?, c.state(w[1].clone()).map_err(err)?);
        let mid = toric_geodesic(&s0, &s1, 0.5).map_err(err)?;
        affinity = affinity.max((e(&mid).map_err(err)? - 0.5 * (e(&w[0]).map_err(err)? + e(&w[1]).map_err(err)?)).abs());
        convexity = convexity.min(0.5 * (m(&w[0]).map_err(err)? + m(&w[1]).map_err(err)?) - m(&mid).map_err(err)?);
    }
    let detail = format!("10 geodesics: E affinity {affinity:.2e}, min midpoint convexity {convexity:.2e}");
    ensure(affinity <= 1e-5 && convexity >= -1e-6, detail)
}

fn log_concavity() -> Outcome {
    let p = Polytope::unit();
    let certified = [0.3, -0.7, 1.5].iter().all(|a| certify_log_concave(&Weight::exponential(*a), &p).is_certified());
    let cosh = Weight::Cosh { k: 2.0, center: 0.5 };
    let located = match certify_log_concave(&cosh, &p) {
        LogConcavity::Refused { y, log_hessian } => Some((y, log_hessian)),
        _ => None,
    };
    let pair = WeightPair::new(cosh, Weight::unit(), &p).map_err(err)?;
    let report = check(IdentityId::LogConcavity, &IdentityProbe::new("cosh", pair, PotentialProfile::Zero), &Calibration::default()).map_err(err)?;
    let detail = format!("exponentials certified: {certified}, cosh refused at {located:?}, gate note {:?}", report.note);
    ensure(certified && located.is_some() && !report.passed, detail)
}

fn main() -> ExitCode {
    let weighted = ctx(1025, WeightPair::exponential(0.3));
    let mut outcomes: Vec<(&str, Outcome)> = vec![
        ("identity suite", identities()),
        ("Fubini-Study endpoint", fubini_study()),
        ("state-independent invariants", invariance()),
        ("linearized operator", operator()),
        ("Newton convergence", newton()),
    ];
    let (marched, solved) = march_to_one(&weighted);
    outcomes.push(("continuity march", marched));
    outcomes.push(("Mabuchi variation and minimality", variational(&weighted, solved.as_deref())));
    outcomes.push(("Futaki invariant", futaki()));
    outcomes.push(("geodesic convexity", geodesics()));
    outcomes.push(("log-concavity gate", log_concavity()));
    let mut out = std::io::stdout().lock();
    let mut failures = 0;
    for (k, (name, outcome)) in outcomes.iter().enumerate() {
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        writeln!(out, "criterion {:>2} {tag} {name}: {detail}", k + 1).unwrap();
    }
    writeln!(out, "acceptance: {} of {} passed", outcomes.len() - failures, outcomes.len()).unwrap();
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
