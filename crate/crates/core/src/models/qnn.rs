//! Re-uploading QNN for regression and classification.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{mean_loss_grad, nll, softmax, Prediction, TargetScaler, Targets, Task, TrainOptions};
use crate::autodiff::z_param_jacobian;
use crate::circuits::{from_layout, reuploading_ising, reuploading_sel, Circuit, Layout, ParamVector};
use crate::error::{invalid, Error, Result};
use crate::optim::Adam;
use crate::par;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QnnTemplate {
    Ising,
    Sel,
}

impl QnnTemplate {
    pub fn build(self, n_qubits: usize, n_layers: usize) -> Result<Circuit> {
        match self {
            QnnTemplate::Ising => reuploading_ising(n_qubits, n_layers),
            QnnTemplate::Sel => reuploading_sel(n_qubits, n_layers),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QnnModel {
    circuit: Circuit,
    pub params: ParamVector,
    pub task: Task,
    /// Qubits whose `⟨Z⟩` feed the head.
    pub readout: Vec<usize>,
    pub target_scaler: Option<TargetScaler>,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct QnnDocument {
    layout: Layout,
    values: Vec<f64>,
    task: Task,
    readout: Vec<usize>,
    target_scaler: Option<TargetScaler>,
    seed: u64,
}

impl QnnModel {
    pub fn new(template: QnnTemplate, n_qubits: usize, n_layers: usize, task: Task, seed: u64) -> Result<Self> {
        Self::from_circuit(template.build(n_qubits, n_layers)?, task, seed)
    }

    /// Parameters drawn from `[−π/8, π/8]` with `seed`.
    pub fn from_circuit(circuit: Circuit, task: Task, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = circuit.init_params(&mut rng);
        Self::with_params(circuit, params, task, seed)
    }

    pub fn with_params(circuit: Circuit, params: ParamVector, task: Task, seed: u64) -> Result<Self> {
        if params.len() != circuit.n_trainable() || params.layout != *circuit.layout() {
            return Err(invalid("parameter vector does not match the circuit"));
        }
        let readout: Vec<usize> = (0..task.n_outputs()).collect();
        if readout.len() > circuit.n_qubits() {
            return Err(invalid(format!("{task} readout needs {} qubits", readout.len())));
        }
        Ok(QnnModel { circuit, params, task, readout, target_scaler: None, seed })
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    /// `⟨Z_r⟩` for each readout qubit.
    pub fn readouts(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z = self.circuit.run(&self.params.values, x)?.expectations_z();
        Ok(self.readout.iter().map(|&q| z[q]).collect())
    }

    fn scaler(&self) -> TargetScaler {
        self.target_scaler.unwrap_or(TargetScaler { min: -1.0, max: 1.0 })
    }

    pub fn head(&self, z: &[f64]) -> Prediction {
        match self.task {
            Task::Regression => Prediction::Value(self.scaler().from_unit(z[0])),
            Task::Binary => {
                let p1 = (1.0 - z[0]) / 2.0;
                Prediction::Class { label: usize::from(p1 >= 0.5), probabilities: vec![1.0 - p1, p1] }
            }
            Task::Ternary => {
                let p = softmax(z);
                Prediction::Class { label: super::argmax(&p), probabilities: p }
            }
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Prediction> {
        Ok(self.head(&self.readouts(x)?))
    }

    pub fn predict_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<Prediction>> {
        par::try_map_range(xs.len(), |i| self.forward(&xs[i]))
    }

    /// Per-sample loss and its derivative with respect to the readouts.
    fn sample_loss(&self, z: &[f64], targets: Targets<'_>, i: usize) -> (f64, Vec<f64>) {
        match (self.task, targets) {
            (Task::Regression, Targets::Values(v)) => {
                let u = self.scaler().to_unit(v[i]);
                let d = z[0] - u;
                (d * d, vec![2.0 * d])
            }
            (Task::Binary, Targets::Labels(l)) => {
                let p1 = ((1.0 - z[0]) / 2.0).clamp(super::PROB_FLOOR, 1.0 - super::PROB_FLOOR);
                if l[i] == 1 {
                    (nll(p1), vec![0.5 / p1])
                } else {
                    (nll(1.0 - p1), vec![-0.5 / (1.0 - p1)])
                }
            }
            (Task::Ternary, Targets::Labels(l)) => {
                let p = softmax(z);
                let g = (0..3).map(|k| p[k] - f64::from(u8::from(k == l[i]))).collect();
                (nll(p[l[i]]), g)
            }
            _ => unreachable!("targets validated against the task"),
        }
    }

    pub fn loss(&self, xs: &[Vec<f64>], targets: Targets<'_>) -> Result<f64> {
        targets.check(self.task, xs.len())?;
        let parts = par::try_map_range(xs.len(), |i| {
            let z = self.readouts(&xs[i])?;
            Ok::<_, Error>((self.sample_loss(&z, targets, i).0, Vec::new()))
        })?;
        Ok(mean_loss_grad(parts, 0).0)
    }

    /// Mean loss and its parameter-shift gradient over the batch.
    pub fn loss_and_grad(&self, xs: &[Vec<f64>], targets: Targets<'_>) -> Result<(f64, Vec<f64>)> {
        targets.check(self.task, xs.len())?;
        let dim = self.n_params();
        let parts = par::try_map_range(xs.len(), |i| {
            let (values, jac) = z_param_jacobian(&self.circuit, &self.params.values, &xs[i])?;
            let z: Vec<f64> = self.readout.iter().map(|&q| values[q]).collect();
            let (l, dz) = self.sample_loss(&z, targets, i);
            let mut g = vec![0.0; dim];
            for (k, &q) in self.readout.iter().enumerate() {
                for p in 0..dim {
                    g[p] += dz[k] * jac[q][p];
                }
            }
            Ok::<_, Error>((l, g))
        })?;
        Ok(mean_loss_grad(parts, dim))
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = QnnDocument {
            layout: self.params.layout.clone(),
            values: self.params.values.clone(),
            task: self.task,
            readout: self.readout.clone(),
            target_scaler: self.target_scaler,
            seed: self.seed,
        };
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: QnnDocument = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        let circuit = from_layout(&doc.layout)?;
        let params = ParamVector { values: doc.values, layout: doc.layout };
        let mut m = QnnModel::with_params(circuit, params, doc.task, doc.seed)?;
        if doc.readout != m.readout {
            return Err(Error::Format("unexpected readout qubits".into()));
        }
        m.target_scaler = doc.target_scaler;
        Ok(m)
    }
}

/// Full-batch Adam over parameter-shift gradients. Returns the loss at the
/// start of every epoch. Regression targets are mapped to `[−1, 1]` by a
/// scaler fit here unless one is already set.
pub fn qnn_train(model: &mut QnnModel, xs: &[Vec<f64>], targets: Targets<'_>, opts: &TrainOptions) -> Result<Vec<f64>> {
    opts.check()?;
    targets.check(model.task, xs.len())?;
    if let (Task::Regression, Targets::Values(v), None) = (model.task, targets, model.target_scaler) {
        model.target_scaler = Some(TargetScaler::fit(v)?);
    }
    let mut adam = Adam::new(model.n_params(), opts.learning_rate);
    let mut history = Vec::with_capacity(opts.epochs);
    for _ in 0..opts.epochs {
        let (loss, grad) = model.loss_and_grad(xs, targets)?;
        if !loss.is_finite() {
            return Err(Error::OptimizationAborted { x_best: model.params.values.clone(), f_best: loss });
        }
        history.push(loss);
        adam.step(&mut model.params.values, &grad)?;
    }
    Ok(history)
}
