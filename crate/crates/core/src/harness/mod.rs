//! Experiment configuration, orchestration and the acceptance suite.

mod config;
pub mod criteria;
mod experiment;

use std::path::Path;

use serde::Serialize;

pub use config::{model_name, parse_model, parse_scheme, scheme_name, ExperimentConfig};
pub use criteria::{run_suite, Suite};
pub use experiment::{
    advance, check_snapshot, initial_state, merge, run_experiment, run_replica, run_replicas,
    snapshot_rows, ExperimentOutcome, ReplicaResult, Summary, WindowSummary, SNAPSHOT_HEADER,
};

use crate::error::Result;
use crate::statcheck::StatReport;

/// Outcome of a verification run.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub suite: String,
    pub reports: Vec<StatReport>,
    pub passed: bool,
}

impl VerifyReport {
    /// Exit status: 0 iff every gating report passed.
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

/// Run `suite`, print nothing, and optionally write the JSON report to `report_path`.
pub fn verify(
    suite: Suite,
    report_path: Option<&Path>,
    on_report: impl FnMut(&StatReport),
) -> Result<VerifyReport> {
    let reports = run_suite(suite, on_report)?;
    let passed = reports.iter().all(|r| r.pass || !r.gating);
    let report = VerifyReport {
        suite: format!("{suite:?}").to_lowercase(),
        reports,
        passed,
    };
    if let Some(path) = report_path {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, serde_json::to_string_pretty(&report)? + "\n")?;
    }
    Ok(report)
}
