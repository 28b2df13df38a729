//! Feed-forward models: re-uploading QNNs, the variational classifier and
//! parameter-matched dense baselines.

pub mod dense;
pub mod qnn;
pub mod vqc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use dense::{build_dense_baseline, dense_train, DenseBaseline};
pub use qnn::{qnn_train, QnnModel, QnnTemplate};
pub use vqc::{vqc_train, ReadoutRule, VqcClassifier};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    Binary,
    Ternary,
}

impl Task {
    pub fn is_classification(self) -> bool {
        self != Task::Regression
    }

    pub fn n_classes(self) -> usize {
        match self {
            Task::Regression => 0,
            Task::Binary => 2,
            Task::Ternary => 3,
        }
    }

    /// Model outputs consumed by the head: one value, one probability, or three logits.
    pub fn n_outputs(self) -> usize {
        match self {
            Task::Ternary => 3,
            _ => 1,
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Task::Regression => "regression",
            Task::Binary => "binary",
            Task::Ternary => "ternary",
        })
    }
}

/// Affine map between target units and `[−1, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetScaler {
    pub min: f64,
    pub max: f64,
}

impl TargetScaler {
    /// Fit to the observed range; a constant target gets a unit half-width.
    pub fn fit(y: &[f64]) -> Result<Self> {
        if y.is_empty() {
            return Err(invalid("cannot fit a target scaler on no rows"));
        }
        let min = y.iter().copied().fold(f64::INFINITY, f64::min);
        let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max > min {
            Ok(TargetScaler { min, max })
        } else {
            Ok(TargetScaler { min: min - 1.0, max: max + 1.0 })
        }
    }

    pub fn to_unit(&self, y: f64) -> f64 {
        2.0 * (y - self.min) / (self.max - self.min) - 1.0
    }

    pub fn from_unit(&self, u: f64) -> f64 {
        (u + 1.0) * 0.5 * (self.max - self.min) + self.min
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Targets<'a> {
    Values(&'a [f64]),
    Labels(&'a [usize]),
}

impl Targets<'_> {
    pub fn len(&self) -> usize {
        match self {
            Targets::Values(v) => v.len(),
            Targets::Labels(l) => l.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn check(&self, task: Task, n_rows: usize) -> Result<()> {
        if n_rows == 0 {
            return Err(invalid("empty training set"));
        }
        if self.len() != n_rows {
            return Err(invalid(format!("{} targets for {n_rows} rows", self.len())));
        }
        match (task, self) {
            (Task::Regression, Targets::Values(v)) => {
                if v.iter().any(|t| !t.is_finite()) {
                    return Err(invalid("non-finite regression target"));
                }
            }
            (Task::Regression, Targets::Labels(_)) => return Err(invalid("regression needs real targets")),
            (_, Targets::Labels(l)) => {
                if let Some(bad) = l.iter().find(|&&c| c >= task.n_classes()) {
                    return Err(invalid(format!("label {bad} out of range for {task}")));
                }
            }
            (_, Targets::Values(_)) => return Err(invalid("classification needs integer labels")),
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Prediction {
    Value(f64),
    Class { label: usize, probabilities: Vec<f64> },
}

impl Prediction {
    pub fn value(&self) -> Option<f64> {
        match self {
            Prediction::Value(v) => Some(*v),
            Prediction::Class { .. } => None,
        }
    }

    pub fn label(&self) -> Option<usize> {
        match self {
            Prediction::Class { label, .. } => Some(*label),
            Prediction::Value(_) => None,
        }
    }
}

/// Index of the first maximal entry.
pub fn argmax(v: &[f64]) -> usize {
    crate::qkernel::argmax(v)
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub(crate) const PROB_FLOOR: f64 = 1e-12;

/// `−ln p`, floored away from zero.
pub(crate) fn nll(p: f64) -> f64 {
    -p.max(PROB_FLOOR).ln()
}

pub fn mse(pred: &[f64], actual: &[f64]) -> f64 {
    if pred.is_empty() {
        return 0.0;
    }
    pred.iter().zip(actual).map(|(p, a)| (p - a) * (p - a)).sum::<f64>() / pred.len() as f64
}

pub fn accuracy(pred: &[usize], actual: &[usize]) -> f64 {
    if pred.is_empty() {
        return 0.0;
    }
    pred.iter().zip(actual).filter(|(p, a)| p == a).count() as f64 / pred.len() as f64
}

/// Full-batch gradient training settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub epochs: usize,
    pub learning_rate: f64,
}

impl TrainOptions {
    pub(crate) fn check(&self) -> Result<()> {
        if self.epochs == 0 || !(self.learning_rate > 0.0) {
            return Err(invalid("epochs must be ≥ 1 and learning rate positive"));
        }
        Ok(())
    }
}

/// Sum per-sample `(loss, grad)` pairs in index order and average.
pub(crate) fn mean_loss_grad(parts: Vec<(f64, Vec<f64>)>, dim: usize) -> (f64, Vec<f64>) {
    let n = parts.len().max(1) as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; dim];
    for (l, g) in parts {
        loss += l;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }
    (loss / n, grad.into_iter().map(|g| g / n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_scaler_maps_range() {
        let s = TargetScaler::fit(&[284.53, 300.0, 317.59]).unwrap();
        assert!((s.to_unit(284.53) + 1.0).abs() < 1e-12);
        assert!((s.to_unit(317.59) - 1.0).abs() < 1e-12);
        assert!((s.from_unit(0.0) - (284.53 + 317.59) / 2.0).abs() < 1e-12);
        let c = TargetScaler::fit(&[5.0, 5.0]).unwrap();
        assert_eq!(c.to_unit(5.0), 0.0);
    }

    #[test]
    fn softmax_is_shift_invariant() {
        let a = softmax(&[0.1, 0.7, -0.2]);
        let b = softmax(&[3.1, 3.7, 2.8]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-15);
        }
        assert_eq!(argmax(&softmax(&[0.5, 0.5, 0.5])), 0);
    }
}
