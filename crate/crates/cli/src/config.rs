//! Experiment configuration and default resolution.

use std::fmt;
use std::path::{Path, PathBuf};

use qweather_core::models::Task;
use qweather_core::weather::{ScaleMethod, Selection, DEFAULT_TARGET};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    QnnIsing,
    QnnSel,
    Vqc,
    Qsvm,
    Qlstm,
    Qgru,
    Nn,
    Lstm,
    Gru,
    Svc,
}

impl ModelKind {
    pub const ALL: [ModelKind; 10] = [
        ModelKind::QnnIsing,
        ModelKind::QnnSel,
        ModelKind::Vqc,
        ModelKind::Qsvm,
        ModelKind::Qlstm,
        ModelKind::Qgru,
        ModelKind::Nn,
        ModelKind::Lstm,
        ModelKind::Gru,
        ModelKind::Svc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::QnnIsing => "qnn-ising",
            ModelKind::QnnSel => "qnn-sel",
            ModelKind::Vqc => "vqc",
            ModelKind::Qsvm => "qsvm",
            ModelKind::Qlstm => "qlstm",
            ModelKind::Qgru => "qgru",
            ModelKind::Nn => "nn",
            ModelKind::Lstm => "lstm",
            ModelKind::Gru => "gru",
            ModelKind::Svc => "svc",
        }
    }

    pub fn is_recurrent(self) -> bool {
        matches!(self, ModelKind::Qlstm | ModelKind::Qgru | ModelKind::Lstm | ModelKind::Gru)
    }

    pub fn is_kernel(self) -> bool {
        matches!(self, ModelKind::Qsvm | ModelKind::Svc)
    }

    pub fn supports(self, task: Task) -> bool {
        match self {
            ModelKind::Qsvm | ModelKind::Vqc | ModelKind::Svc => task.is_classification(),
            m if m.is_recurrent() => task == Task::Regression,
            _ => true,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Synth { seed: u64, n: usize },
    Csv(PathBuf),
}

/// One experiment. Every optional field left out is filled by
/// [`ExperimentConfig::resolve`], and the filled copy is what reports echo.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub task: Task,
    pub data: DataSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<Selection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScaleMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    /// Optimizer steps for the derivative-free VQC trainer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub export_kernel: Option<bool>,
}

pub const DEFAULT_SPLIT: f64 = 0.8;
pub const QUANTUM_RECURRENT_QUBITS: usize = 4;

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

impl ExperimentConfig {
    /// Minimal config for `model` on `task` with everything else defaulted.
    pub fn new(model: ModelKind, task: Task, data: DataSource) -> Self {
        ExperimentConfig {
            model,
            task,
            data,
            name: None,
            target: None,
            selection: None,
            scaling: None,
            split: None,
            seed: None,
            epochs: None,
            iters: None,
            lr: None,
            layers: None,
            c: None,
            gamma: None,
            tol: None,
            batch_size: None,
            window: None,
            hidden: None,
            budget: None,
            export_kernel: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Fill every default that applies to this model and reject fields that
    /// do not. Returns the filled config and the names of defaulted keys.
    /// `gamma` for the RBF baseline depends on the data and is filled later.
    pub fn resolve(&self) -> Result<(ExperimentConfig, Vec<String>), HarnessError> {
        let m = self.model;
        if !m.supports(self.task) {
            return Err(config_err(format!("model {m} does not support the {} task", self.task)));
        }
        let mut out = self.clone();
        let mut applied = Vec::new();

        macro_rules! fill {
            ($field:ident, $value:expr) => {
                if out.$field.is_none() {
                    out.$field = Some($value);
                    applied.push(stringify!($field).to_string());
                }
            };
        }
        macro_rules! forbid {
            ($($field:ident),*) => {
                $(if self.$field.is_some() {
                    return Err(config_err(format!("`{}` does not apply to model {m}", stringify!($field))));
                })*
            };
        }

        let top_k = match m {
            ModelKind::QnnIsing | ModelKind::Nn => 3,
            _ => 4,
        };
        fill!(target, DEFAULT_TARGET.to_string());
        fill!(selection, Selection::TopK(top_k));
        fill!(split, DEFAULT_SPLIT);
        fill!(seed, 0);
        let scaling = match m {
            ModelKind::Vqc | ModelKind::Qsvm | ModelKind::Svc => ScaleMethod::Minmax,
            _ => ScaleMethod::Standard,
        };
        fill!(scaling, scaling);

        match m {
            ModelKind::QnnIsing | ModelKind::QnnSel => {
                forbid!(iters, c, gamma, tol, batch_size, window, hidden, budget, export_kernel);
                fill!(layers, if m == ModelKind::QnnIsing { 2 } else { 4 });
                fill!(epochs, 60);
                fill!(lr, 0.05);
            }
            ModelKind::Nn => {
                forbid!(iters, layers, c, gamma, tol, batch_size, window, hidden, export_kernel);
                fill!(epochs, 300);
                fill!(lr, 0.05);
            }
            ModelKind::Vqc => {
                forbid!(epochs, lr, layers, c, gamma, tol, batch_size, window, hidden, budget, export_kernel);
                fill!(iters, 150);
            }
            ModelKind::Qsvm | ModelKind::Svc => {
                forbid!(epochs, iters, lr, layers, batch_size, window, hidden, budget);
                if m == ModelKind::Qsvm {
                    forbid!(gamma);
                }
                fill!(c, 1.0);
                fill!(tol, 1e-3);
                fill!(export_kernel, false);
            }
            ModelKind::Qlstm | ModelKind::Qgru | ModelKind::Lstm | ModelKind::Gru => {
                forbid!(iters, c, gamma, tol, budget, export_kernel);
                let quantum = matches!(m, ModelKind::Qlstm | ModelKind::Qgru);
                fill!(epochs, if matches!(m, ModelKind::Qlstm | ModelKind::Lstm) { 50 } else { 20 });
                fill!(lr, 0.01);
                fill!(batch_size, 32);
                fill!(window, 4);
                if quantum {
                    fill!(layers, 2);
                    fill!(hidden, QUANTUM_RECURRENT_QUBITS);
                } else {
                    forbid!(layers);
                    fill!(hidden, if m == ModelKind::Lstm { 8 } else { 16 });
                }
            }
        }
        out.validate()?;
        Ok((out, applied))
    }

    fn validate(&self) -> Result<(), HarnessError> {
        let pos = |name: &str, v: Option<usize>| match v {
            Some(0) => Err(config_err(format!("`{name}` must be positive"))),
            _ => Ok(()),
        };
        pos("epochs", self.epochs)?;
        pos("iters", self.iters)?;
        pos("layers", self.layers)?;
        pos("batch_size", self.batch_size)?;
        pos("window", self.window)?;
        pos("hidden", self.hidden)?;
        pos("budget", self.budget)?;
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(config_err(format!("`{name}` must be positive, got {x}"))),
            _ => Ok(()),
        };
        positive("lr", self.lr)?;
        positive("c", self.c)?;
        positive("gamma", self.gamma)?;
        positive("tol", self.tol)?;
        if let Some(s) = self.split {
            if !(s > 0.0 && s < 1.0) {
                return Err(config_err(format!("`split` must lie in (0, 1), got {s}")));
            }
        }
        match self.selection {
            Some(Selection::TopK(0)) => return Err(config_err("`top_k` must be positive")),
            Some(Selection::Threshold(t)) if !(0.0..=1.0).contains(&t) => {
                return Err(config_err(format!("threshold must lie in [0, 1], got {t}")))
            }
            _ => {}
        }
        if let DataSource::Synth { n, .. } = self.data {
            if n < 24 {
                return Err(config_err("synthetic data needs at least 24 months"));
            }
        }
        if let Some(name) = &self.name {
            if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
                return Err(config_err(format!("`name` must be a plain directory name, got {name:?}")));
            }
        }
        let quantum = matches!(self.model, ModelKind::Qlstm | ModelKind::Qgru);
        if quantum && self.hidden.is_some_and(|h| h != QUANTUM_RECURRENT_QUBITS) {
            return Err(config_err("quantum recurrent cells use a hidden size equal to their 4 qubits"));
        }
        Ok(())
    }

    /// Directory name under the output root.
    pub fn run_name(&self) -> String {
        match &self.name {
            Some(n) => n.clone(),
            None => format!("{}-{}-seed{}", self.model, self.task, self.seed.unwrap_or(0)),
        }
    }
}
