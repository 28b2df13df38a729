//! One-hidden-layer tanh networks sized to an exact parameter budget.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{mean_loss_grad, nll, softmax, Prediction, TargetScaler, Targets, Task, TrainOptions};
use crate::error::{invalid, Error, Result};
use crate::optim::Adam;
use crate::par;

/// `input → hidden (tanh, bias) → outputs (optional bias)`; parameters are
/// stored flat as `[W1 (h×d), b1, W2 (o×h), b2]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseBaseline {
    pub input_dim: usize,
    pub hidden: usize,
    pub outputs: usize,
    pub output_bias: bool,
    pub params: Vec<f64>,
    pub task: Task,
    pub target_scaler: Option<TargetScaler>,
    pub seed: u64,
}

fn count(d: usize, h: usize, o: usize, bias: bool) -> usize {
    d * h + h + h * o + if bias { o } else { 0 }
}

/// Smallest hidden width hitting `budget` exactly, preferring an output bias.
pub fn build_dense_baseline(budget: usize, input_dim: usize, task: Task, seed: u64) -> Result<DenseBaseline> {
    if input_dim == 0 {
        return Err(invalid("input dimension must be positive"));
    }
    let o = task.n_outputs();
    let shape = [true, false]
        .into_iter()
        .find_map(|bias| (1..=budget).find(|&h| count(input_dim, h, o, bias) == budget).map(|h| (h, bias)));
    let Some((hidden, output_bias)) = shape else {
        return Err(invalid(format!("no tanh network with {input_dim} inputs has exactly {budget} parameters")));
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b1 = 1.0 / (input_dim as f64).sqrt();
    let b2 = 1.0 / (hidden as f64).sqrt();
    let mut params = Vec::with_capacity(budget);
    params.extend((0..hidden * input_dim + hidden).map(|_| rng.random_range(-b1..=b1)));
    params.extend((0..hidden * o + if output_bias { o } else { 0 }).map(|_| rng.random_range(-b2..=b2)));
    let net = DenseBaseline { input_dim, hidden, outputs: o, output_bias, params, task, target_scaler: None, seed };
    debug_assert_eq!(net.count_params(), budget);
    Ok(net)
}

impl DenseBaseline {
    pub fn count_params(&self) -> usize {
        count(self.input_dim, self.hidden, self.outputs, self.output_bias)
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let (d, h, o) = (self.input_dim, self.hidden, self.outputs);
        (h * d, h * d + h, h * d + h + o * h)
    }

    /// Hidden activations and raw outputs.
    fn pass(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (d, h) = (self.input_dim, self.hidden);
        let (ob1, ow2, ob2) = self.offsets();
        let p = &self.params;
        let a: Vec<f64> = (0..h)
            .map(|j| (p[ob1 + j] + (0..d).map(|i| p[j * d + i] * x[i]).sum::<f64>()).tanh())
            .collect();
        let out = (0..self.outputs)
            .map(|k| {
                let b = if self.output_bias { p[ob2 + k] } else { 0.0 };
                b + (0..h).map(|j| p[ow2 + k * h + j] * a[j]).sum::<f64>()
            })
            .collect();
        (a, out)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(invalid(format!("expected {} features, got {}", self.input_dim, x.len())));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Prediction> {
        self.check_input(x)?;
        let (_, out) = self.pass(x);
        Ok(match self.task {
            Task::Regression => {
                let s = self.target_scaler.unwrap_or(TargetScaler { min: -1.0, max: 1.0 });
                Prediction::Value(s.from_unit(out[0]))
            }
            Task::Binary => {
                let p1 = 1.0 / (1.0 + (-out[0]).exp());
                Prediction::Class { label: usize::from(p1 >= 0.5), probabilities: vec![1.0 - p1, p1] }
            }
            Task::Ternary => {
                let p = softmax(&out);
                Prediction::Class { label: super::argmax(&p), probabilities: p }
            }
        })
    }

    pub fn predict_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<Prediction>> {
        par::try_map_range(xs.len(), |i| self.forward(&xs[i]))
    }

    fn sample(&self, x: &[f64], targets: Targets<'_>, i: usize) -> (f64, Vec<f64>) {
        let (d, h, o) = (self.input_dim, self.hidden, self.outputs);
        let (ob1, ow2, ob2) = self.offsets();
        let (a, out) = self.pass(x);
        let (loss, dout): (f64, Vec<f64>) = match (self.task, targets) {
            (Task::Regression, Targets::Values(v)) => {
                let s = self.target_scaler.unwrap_or(TargetScaler { min: -1.0, max: 1.0 });
                let e = out[0] - s.to_unit(v[i]);
                (e * e, vec![2.0 * e])
            }
            (Task::Binary, Targets::Labels(l)) => {
                let p1 = 1.0 / (1.0 + (-out[0]).exp());
                let y = l[i] as f64;
                let loss = if l[i] == 1 { nll(p1) } else { nll(1.0 - p1) };
                (loss, vec![p1 - y])
            }
            (Task::Ternary, Targets::Labels(l)) => {
                let p = softmax(&out);
                (nll(p[l[i]]), (0..o).map(|k| p[k] - f64::from(u8::from(k == l[i]))).collect())
            }
            _ => unreachable!("targets validated against the task"),
        };
        let mut g = vec![0.0; self.params.len()];
        for k in 0..o {
            for j in 0..h {
                g[ow2 + k * h + j] = dout[k] * a[j];
            }
            if self.output_bias {
                g[ob2 + k] = dout[k];
            }
        }
        for j in 0..h {
            let da: f64 = (0..o).map(|k| dout[k] * self.params[ow2 + k * h + j]).sum();
            let dz = da * (1.0 - a[j] * a[j]);
            g[ob1 + j] = dz;
            for i2 in 0..d {
                g[j * d + i2] = dz * x[i2];
            }
        }
        (loss, g)
    }

    pub fn loss_and_grad(&self, xs: &[Vec<f64>], targets: Targets<'_>) -> Result<(f64, Vec<f64>)> {
        targets.check(self.task, xs.len())?;
        for x in xs {
            self.check_input(x)?;
        }
        let parts = par::map_range(xs.len(), |i| self.sample(&xs[i], targets, i));
        Ok(mean_loss_grad(parts, self.params.len()))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: DenseBaseline = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if m.params.len() != m.count_params() {
            return Err(Error::Format("parameter count does not match the declared shape".into()));
        }
        Ok(m)
    }
}

/// Full-batch Adam with analytic backprop; loss recorded at the start of each epoch.
pub fn dense_train(net: &mut DenseBaseline, xs: &[Vec<f64>], targets: Targets<'_>, opts: &TrainOptions) -> Result<Vec<f64>> {
    opts.check()?;
    targets.check(net.task, xs.len())?;
    if let (Task::Regression, Targets::Values(v), None) = (net.task, targets, net.target_scaler) {
        net.target_scaler = Some(TargetScaler::fit(v)?);
    }
    let mut adam = Adam::new(net.params.len(), opts.learning_rate);
    let mut history = Vec::with_capacity(opts.epochs);
    for _ in 0..opts.epochs {
        let (loss, grad) = net.loss_and_grad(xs, targets)?;
        if !loss.is_finite() {
            return Err(Error::OptimizationAborted { x_best: net.params.clone(), f_best: loss });
        }
        history.push(loss);
        adam.step(&mut net.params, &grad)?;
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budgets() {
        let a = build_dense_baseline(21, 3, Task::Binary, 0).unwrap();
        assert_eq!((a.hidden, a.output_bias, a.count_params()), (4, true, 21));
        let b = build_dense_baseline(48, 4, Task::Binary, 0).unwrap();
        assert_eq!((b.hidden, b.output_bias, b.count_params()), (8, false, 48));
        let c = build_dense_baseline(21, 3, Task::Ternary, 0).unwrap();
        assert_eq!((c.hidden, c.output_bias, c.params.len()), (3, false, 21));
        let d = build_dense_baseline(48, 4, Task::Ternary, 0).unwrap();
        assert_eq!((d.hidden, d.params.len()), (6, 48));
        assert!(build_dense_baseline(21, 4, Task::Binary, 0).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let xs = vec![vec![0.3, -0.2, 0.9], vec![-1.0, 0.5, 0.1], vec![0.0, 0.7, -0.4]];
        let labels = [0usize, 2, 1];
        let values = [0.2, -0.6, 0.4];
        for (task, t) in [
            (Task::Ternary, Targets::Labels(&labels)),
            (Task::Binary, Targets::Labels(&[0, 1, 1])),
            (Task::Regression, Targets::Values(&values)),
        ] {
            let net = build_dense_baseline(21, 3, task, 5).unwrap();
            let (_, g) = net.loss_and_grad(&xs, t).unwrap();
            for p in 0..net.params.len() {
                let mut a = net.clone();
                let mut b = net.clone();
                a.params[p] += 1e-6;
                b.params[p] -= 1e-6;
                let fd = (a.loss_and_grad(&xs, t).unwrap().0 - b.loss_and_grad(&xs, t).unwrap().0) / 2e-6;
                assert!((fd - g[p]).abs() < 1e-7, "{task} param {p}: {fd} vs {}", g[p]);
            }
        }
    }

    #[test]
    fn learns_a_threshold() {
        let xs: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 / 20.0 - 1.0, 0.0, 0.0]).collect();
        let y: Vec<usize> = xs.iter().map(|x| usize::from(x[0] > 0.0)).collect();
        let mut net = build_dense_baseline(21, 3, Task::Binary, 1).unwrap();
        let h = dense_train(&mut net, &xs, Targets::Labels(&y), &TrainOptions { epochs: 300, learning_rate: 0.05 }).unwrap();
        assert!(h.last() < h.first());
        let pred: Vec<usize> = net.predict_batch(&xs).unwrap().iter().map(|p| p.label().unwrap()).collect();
        assert_eq!(super::super::accuracy(&pred, &y), 1.0);
        assert_eq!(DenseBaseline::from_json(&net.to_json().unwrap()).unwrap(), net);
    }
}
