//! Experiment harness: configs in, run directories out.
//!
//! A run is described by an [`ExperimentConfig`]; [`execute`] resolves its
//! defaults, runs the pipeline and writes one directory per run.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compare;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod plotdata;
pub mod report;

use std::path::{Path, PathBuf};

pub use compare::{compare, Comparison};
pub use config::{DataSource, ExperimentConfig, ModelKind};
pub use error::{HarnessError, Stage};
pub use plotdata::emit_plot_data;
pub use report::ExperimentReport;

/// Run `config` and write its artifacts under `out_dir/<run name>`.
pub fn execute(config: &ExperimentConfig, out_dir: &Path) -> Result<(PathBuf, ExperimentReport), HarnessError> {
    let art = pipeline::run(config)?;
    let dir = out_dir.join(art.report.config.run_name());
    report::write_run(&dir, &art)?;
    Ok((dir, art.report))
}

/// Turn a `compare` argument into a report: a run directory, a report file,
/// or a config file (which is run first).
pub fn load_or_run(path: &Path, out_dir: &Path) -> Result<ExperimentReport, HarnessError> {
    if path.is_dir() {
        return ExperimentReport::load(&path.join("report.json"));
    }
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    if value.get("metrics").is_some() {
        ExperimentReport::from_json(&text)
    } else {
        let cfg = ExperimentConfig::from_json(&text)?;
        Ok(execute(&cfg, out_dir)?.1)
    }
}
