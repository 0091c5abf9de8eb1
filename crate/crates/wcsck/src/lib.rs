//! Scenario runner for the weighted cscK laboratory: configuration, task dispatch and persisted outputs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod record;
pub mod run;
pub mod scenario;

pub use error::{ExitStatus, HarnessError, Result};
pub use record::{Check, RunRecord};
pub use run::{execute, export_plots, run, RunOutput, SavedState};
pub use scenario::{parse_scenario, Scenario, Task};
