//! Report types and the per-run artifact files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use qweather_core::models::Task;
use qweather_core::numfmt;
use qweather_core::weather::{CorrelationReport, IngestionReport};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{write_err, HarnessError};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    /// Mean squared error of the standardized target.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mse_scaled: Option<f64>,
    /// Mean squared error in K².
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mse_original: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub train: SplitMetrics,
    pub test: SplitMetrics,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterCount {
    pub total: usize,
    pub circuit: usize,
    pub classical: usize,
    /// Dual coefficients kept by kernel machines (support vectors).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub time: String,
    /// Target in K (regression) or class label.
    pub actual: f64,
    pub predicted: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scores: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    /// Class trained against the rest, or `None` for a binary machine.
    pub class: Option<usize>,
    pub iterations: usize,
    pub kkt_gap: f64,
    pub n_support: usize,
    pub dual_objective: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub defaults_applied: Vec<String>,
    /// Fixed structural choices of the model (feature map, optimizer, head).
    pub architecture: BTreeMap<String, String>,
    pub features: Vec<String>,
    pub ingestion: IngestionReport,
    pub correlations: CorrelationReport,
    pub n_train: usize,
    pub n_test: usize,
    pub metrics: Metrics,
    pub parameters: ParameterCount,
    pub loss_history: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub solver: Vec<SolverSummary>,
    /// `probability` or `decision` for classification scores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score_kind: Option<String>,
    pub predictions: Vec<PredictionRow>,
}

impl ExperimentReport {
    pub fn task(&self) -> Task {
        self.config.task
    }

    pub fn label(&self) -> String {
        self.config.name.clone().unwrap_or_else(|| self.config.model.to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Data(format!("not a report: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn predictions_csv(&self) -> String {
        let width = self.predictions.iter().map(|p| p.scores.len()).max().unwrap_or(0);
        let mut out = String::from("time,actual,predicted");
        for k in 0..width {
            out.push_str(&format!(",score_{k}"));
        }
        out.push('\n');
        let classify = self.task().is_classification();
        for p in &self.predictions {
            if classify {
                out.push_str(&format!("{},{},{}", p.time, p.actual, p.predicted));
            } else {
                out.push_str(&format!("{},{},{}", p.time, numfmt::full(p.actual), numfmt::full(p.predicted)));
            }
            for s in &p.scores {
                out.push(',');
                out.push_str(&numfmt::full(*s));
            }
            out.push('\n');
        }
        out
    }

    pub fn loss_history_csv(&self) -> String {
        let mut out = String::from("epoch,loss\n");
        for (i, l) in self.loss_history.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, numfmt::full(*l)));
        }
        out
    }
}

/// Wall-clock timings; kept apart from the report so reruns stay identical.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Timing {
    pub wall_time_s: f64,
    pub stages: BTreeMap<String, f64>,
}

/// Everything a run leaves behind besides the report itself.
pub struct RunArtifacts {
    pub report: ExperimentReport,
    pub model_json: String,
    pub kernel_csv: Option<Vec<u8>>,
    pub timing: Timing,
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(|e| write_err(path, e))
}

/// Write `config.json`, `report.json`, `predictions.csv`, `loss_history.csv`,
/// `model.json`, `timing.json` and optionally `kernel.csv` into `dir`.
pub fn write_run(dir: &Path, art: &RunArtifacts) -> Result<PathBuf, HarnessError> {
    fs::create_dir_all(dir).map_err(|e| write_err(dir, e))?;
    write_file(&dir.join("config.json"), art.report.config.to_json() + "\n")?;
    write_file(&dir.join("report.json"), art.report.to_json() + "\n")?;
    write_file(&dir.join("predictions.csv"), art.report.predictions_csv())?;
    write_file(&dir.join("loss_history.csv"), art.report.loss_history_csv())?;
    write_file(&dir.join("model.json"), art.model_json.clone() + "\n")?;
    let timing = serde_json::to_string_pretty(&art.timing).expect("timing serializes");
    write_file(&dir.join("timing.json"), timing + "\n")?;
    if let Some(k) = &art.kernel_csv {
        write_file(&dir.join("kernel.csv"), k)?;
    }
    Ok(dir.to_path_buf())
}
