use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use wcsck_core::background::BackgroundMetric;
use wcsck_core::forms::TwistPreset;
use wcsck_core::functionals::FunctionalContext;
use wcsck_core::grid::Grid;
use wcsck_core::polytope::Polytope;
use wcsck_core::weights::{Weight, WeightPair};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    VerifyIdentities,
    Functionals,
    Futaki,
    Coercivity,
    Solve,
    March,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::VerifyIdentities => "verify-identities",
            Task::Functionals => "functionals",
            Task::Futaki => "futaki",
            Task::Coercivity => "coercivity",
            Task::Solve => "solve",
            Task::March => "march",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackgroundPreset {
    #[default]
    FubiniStudy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n: usize,
    pub half_width: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 1025, half_width: 12.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolytopeConfig {
    pub min: f64,
    pub max: f64,
}

impl Default for PolytopeConfig {
    fn default() -> Self {
        Self { min: 0.0, max: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightConfig {
    pub v: Weight,
    pub w: Weight,
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self { v: Weight::unit(), w: Weight::unit() }
    }
}

/// Positive thresholds; each can be overridden by `WCSCK_<NAME>` in upper case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub newton: f64,
    pub newton_floor: f64,
    pub march_residual: f64,
    pub gradient: f64,
    pub futaki: f64,
    pub affinity: f64,
    pub convexity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { newton: 1e-8, newton_floor: 1e-6, march_residual: 1e-6, gradient: 1e-5, futaki: 1e-5, affinity: 1e-5, convexity: 1e-6 }
    }
}

impl Tolerances {
    fn fields(&mut self) -> [(&'static str, &mut f64); 7] {
        [
            ("newton", &mut self.newton),
            ("newton_floor", &mut self.newton_floor),
            ("march_residual", &mut self.march_residual),
            ("gradient", &mut self.gradient),
            ("futaki", &mut self.futaki),
            ("affinity", &mut self.affinity),
            ("convexity", &mut self.convexity),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MarchConfig {
    pub t0: f64,
    pub t_max: f64,
    pub dt_initial: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub growth: f64,
    pub max_steps: usize,
}

impl Default for MarchConfig {
    fn default() -> Self {
        Self { t0: 1e-3, t_max: 1.0, dt_initial: 1e-2, dt_min: 1e-6, dt_max: 0.1, growth: 1.3, max_steps: 400 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveConfig {
    pub t: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self { t: 1.0 }
    }
}

/// Random relative potentials used by the functional tasks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    pub count: usize,
    pub modes: usize,
    pub strength: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { count: 10, modes: 4, strength: 0.5 }
    }
}

/// Symplectic ray `u + s k (y - c)^2 / 2` sampled at `s = 0, step, ..`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoercivityConfig {
    pub center: f64,
    pub stiffness: f64,
    pub steps: usize,
    pub step: f64,
}

impl Default for CoercivityConfig {
    fn default() -> Self {
        Self { center: 0.5, stiffness: 1.0, steps: 6, step: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub task: Option<Task>,
    pub seed: u64,
    pub background: BackgroundPreset,
    pub polytope: PolytopeConfig,
    pub grid: GridConfig,
    pub weights: WeightConfig,
    pub twist: TwistPreset,
    pub tolerances: Tolerances,
    pub march: MarchConfig,
    pub solve: SolveConfig,
    pub probes: ProbeConfig,
    pub coercivity: CoercivityConfig,
}

/// Parse and validate a TOML scenario; unknown keys are rejected by name.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let scenario: Scenario = toml::from_str(text).map_err(|e| {
        let message = e.message().to_string();
        let key = message.split_once("unknown field `").and_then(|(_, rest)| rest.split_once('`')).map(|(k, _)| k.to_string());
        let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        HarnessError::Parse { key, line, message }
    })?;
    scenario.validate()?;
    Ok(scenario)
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Validation(m));
        if self.grid.n < 33 || self.grid.n.is_multiple_of(2) {
            return bad(format!("grid.n must be odd and at least 33, got {}", self.grid.n));
        }
        if !(self.grid.half_width > 0.0) {
            return bad("grid.half_width must be positive".into());
        }
        let mut tol = self.tolerances;
        for (name, value) in tol.fields() {
            if !(*value > 0.0 && value.is_finite()) {
                return bad(format!("tolerances.{name} must be positive"));
            }
        }
        let m = &self.march;
        if !(m.t0 > 0.0 && m.t0 <= m.t_max && m.t_max <= 1.0) {
            return bad("march needs 0 < t0 <= t_max <= 1".into());
        }
        if !(m.dt_min > 0.0 && m.dt_min <= m.dt_initial && m.dt_initial <= m.dt_max && m.growth >= 1.0 && m.max_steps > 0) {
            return bad("march steps need 0 < dt_min <= dt_initial <= dt_max, growth >= 1 and max_steps > 0".into());
        }
        if !(self.solve.t > 0.0 && self.solve.t <= 1.0) {
            return bad("solve.t must lie in (0, 1]".into());
        }
        if self.probes.count < 2 || self.probes.modes == 0 || !(self.probes.strength > 0.0) {
            return bad("probes need count >= 2, modes >= 1 and positive strength".into());
        }
        let c = &self.coercivity;
        if c.steps < 2 || !(c.step > 0.0 && c.stiffness >= 0.0) {
            return bad("coercivity needs steps >= 2, step > 0 and stiffness >= 0".into());
        }
        self.weight_pair()?;
        Ok(())
    }

    /// Apply `WCSCK_<TOLERANCE>` overrides from `vars`.
    pub fn apply_overrides<I: IntoIterator<Item = (String, String)>>(&mut self, vars: I) -> Result<()> {
        for (name, value) in vars {
            let Some(key) = name.strip_prefix("WCSCK_") else { continue };
            let key = key.to_ascii_lowercase();
            let fail = |reason: &str| HarnessError::Override { name: name.clone(), value: value.clone(), reason: reason.into() };
            let mut fields = self.tolerances.fields();
            let slot = fields.iter_mut().find(|(k, _)| *k == key).ok_or_else(|| fail("not a known tolerance"))?;
            let parsed: f64 = value.trim().parse().map_err(|_| fail("not a number"))?;
            if !(parsed > 0.0 && parsed.is_finite()) {
                return Err(fail("must be positive"));
            }
            *slot.1 = parsed;
        }
        Ok(())
    }

    pub fn polytope(&self) -> Result<Polytope> {
        Polytope::interval(self.polytope.min, self.polytope.max).map_err(|e| HarnessError::Validation(e.to_string()))
    }

    pub fn weight_pair(&self) -> Result<WeightPair> {
        WeightPair::new(self.weights.v.clone(), self.weights.w.clone(), &self.polytope()?).map_err(|e| HarnessError::Validation(e.to_string()))
    }

    pub fn background(&self) -> Result<Arc<BackgroundMetric>> {
        let grid = Grid::new(self.grid.n, self.grid.half_width)?;
        Ok(Arc::new(BackgroundMetric::fubini_study(grid, self.polytope()?)?))
    }

    pub fn context(&self) -> Result<FunctionalContext> {
        Ok(FunctionalContext::new(self.background()?, self.weight_pair()?, self.twist.clone())?)
    }

    /// SHA-256 of the canonical JSON form (sorted keys), independent of field order in the source.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("scenario serializes");
        let digest = Sha256::digest(value.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
