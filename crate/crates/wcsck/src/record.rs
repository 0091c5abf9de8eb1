use serde::Serialize;
use wcsck_core::identities::Calibration;

use crate::scenario::{Scenario, Task};

/// One acceptance check of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

/// A pinned sign or normalization convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Convention {
    pub name: &'static str,
    pub value: &'static str,
}

pub const CONVENTIONS: [Convention; 9] = [
    Convention { name: "ddc", value: "ddc = 2i del delbar, omega_phi = omega + ddc phi" },
    Convention { name: "potential", value: "psi = f0 + 2 phi in log-affine x; rho = psi'' > 0" },
    Convention { name: "moment", value: "m_phi = psi', m_eta' = density of eta" },
    Convention { name: "laplacian", value: "Delta h = 2 h'' / rho, |grad h|^2 = 2 h'^2 / rho, <xi, xi> = 2 rho" },
    Convention { name: "jxi", value: "J xi h = -2 h'" },
    Convention { name: "scalar_curvature", value: "S = -2 (log rho)'' / rho; Fubini-Study S = 4 on area 2 pi" },
    Convention { name: "ricci_hamiltonian", value: "m_Ric = -Delta_omega m_omega" },
    Convention { name: "ell_ext", value: "w-weighted L2 projection of S_v / w onto affine functions" },
    Convention { name: "energy", value: "E_v normalized by Vol_v: E_v(phi + c) = E_v(phi) + c" },
];

/// Manifest written next to the outputs of every run.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub task: Task,
    pub scenario_hash: String,
    pub version: &'static str,
    pub seed: u64,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<String>,
    pub checks: Vec<Check>,
    pub error: Option<String>,
    pub passed: bool,
    pub conventions: &'static [Convention],
    pub calibration: Calibration,
    pub scenario: Scenario,
}

impl RunRecord {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            2
        }
    }
}
