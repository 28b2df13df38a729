//! Training drivers: Adam for gradient-trained models and a derivative-free
//! linear-approximation trust-region method (the unconstrained COBYLA
//! scheme) for the variational classifier.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::par;

/// Bias-corrected Adam.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
}

impl Adam {
    pub fn new(dim: usize, learning_rate: f64) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first_moment: vec![0.0; dim],
            second_moment: vec![0.0; dim],
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn dim(&self) -> usize {
        self.first_moment.len()
    }

    /// One update of `params` in place.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != self.dim() || grad.len() != self.dim() {
            return Err(invalid(format!(
                "adam state has dimension {}, got params {} / grad {}",
                self.dim(),
                params.len(),
                grad.len()
            )));
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for i in 0..params.len() {
            let g = grad[i];
            self.first_moment[i] = self.beta1 * self.first_moment[i] + (1.0 - self.beta1) * g;
            self.second_moment[i] = self.beta2 * self.second_moment[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.first_moment[i] / bc1;
            let v_hat = self.second_moment[i] / bc2;
            params[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CobylaOptions {
    /// Model steps (trust-region or geometry steps), each costing one evaluation.
    pub max_iters: usize,
    pub initial_radius: f64,
    pub end_radius: f64,
}

impl Default for CobylaOptions {
    fn default() -> Self {
        CobylaOptions { max_iters: 150, initial_radius: 1.0, end_radius: 1e-4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CobylaResult {
    pub x: Vec<f64>,
    pub f: f64,
    /// Total objective evaluations, including the initial simplex.
    pub evals: usize,
    /// Model steps taken.
    pub iterations: usize,
    pub final_radius: f64,
    /// Best objective value after each model step.
    pub history: Vec<f64>,
}

/// Working state of the simplex method.
#[derive(Clone, Debug)]
pub struct CobylaState {
    pub simplex: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub trust_radius: f64,
    pub end_radius: f64,
    pub iteration: usize,
    best: usize,
}

/// Linear interpolation model on the current simplex, anchored at the best vertex.
struct LinearModel {
    /// Indices of the non-anchor vertices, in row order of `dual`.
    others: Vec<usize>,
    gradient: DVector<f64>,
    /// Column `k` is orthogonal to every edge from the anchor except edge `k`,
    /// with unit inner product against it.
    dual: DMatrix<f64>,
}

const MAX_EDGE: f64 = 2.1;
const MIN_HEIGHT: f64 = 0.25;
const POOR_RATIO: f64 = 0.1;
const SHRINK_FACTOR: f64 = 0.3;

impl CobylaState {
    fn anchor(&self) -> &[f64] {
        &self.simplex[self.best]
    }

    fn model(&self) -> Option<LinearModel> {
        let n = self.simplex[0].len();
        let others: Vec<usize> = (0..=n).filter(|&i| i != self.best).collect();
        let xb = self.anchor();
        let fb = self.values[self.best];
        let edges = DMatrix::from_fn(n, n, |r, c| self.simplex[others[r]][c] - xb[c]);
        let df = DVector::from_iterator(n, others.iter().map(|&i| self.values[i] - fb));
        let dual = edges.clone().try_inverse()?;
        let gradient = &dual * df;
        if gradient.iter().any(|g| !g.is_finite()) {
            return None;
        }
        Some(LinearModel { others, gradient, dual })
    }

    fn edge_len(&self, i: usize) -> f64 {
        dist(&self.simplex[i], self.anchor())
    }

    /// Vertex to move for a geometry step, or `None` if the simplex is acceptable.
    fn geometry_violation(&self, model: &LinearModel) -> Option<usize> {
        let rho = self.trust_radius;
        let (far, far_len) = model
            .others
            .iter()
            .enumerate()
            .map(|(k, &i)| (k, self.edge_len(i)))
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        if far_len > MAX_EDGE * rho {
            return Some(far);
        }
        let (flat, height) = (0..model.others.len())
            .map(|k| (k, 1.0 / model.dual.column(k).norm()))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        (height < MIN_HEIGHT * rho).then_some(flat)
    }

    fn replace(&mut self, vertex: usize, x: Vec<f64>, f: f64) {
        self.simplex[vertex] = x;
        self.values[vertex] = f;
        if f < self.values[self.best] {
            self.best = vertex;
        }
    }

    fn shrink(&mut self) {
        let (rho, end) = (self.trust_radius, self.end_radius);
        let next = SHRINK_FACTOR * rho;
        self.trust_radius = if next <= 1.5 * end { end } else { next };
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Minimize `objective` from `x0` by linear models on a simplex inside a
/// shrinking trust region.
///
/// The simplex starts as `x0` plus `initial_radius` along each axis. Each
/// iteration either takes a trust-region step along the model's descent
/// direction or, when the last step was poor and the simplex has degraded,
/// a geometry step that restores a well-shaped simplex. The radius shrinks
/// once steps stop improving on an acceptable simplex; the loop ends after
/// `max_iters` steps or once the radius would fall below `end_radius`.
pub fn cobyla_minimize<F>(objective: F, x0: &[f64], opts: &CobylaOptions) -> Result<CobylaResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if opts.max_iters == 0 {
        return Err(invalid("max_iters must be at least 1"));
    }
    if !(opts.initial_radius > 0.0 && opts.end_radius > 0.0 && opts.end_radius <= opts.initial_radius)
    {
        return Err(invalid("radii must satisfy 0 < end_radius ≤ initial_radius"));
    }
    let n = x0.len();
    let rho0 = opts.initial_radius;
    let simplex: Vec<Vec<f64>> = (0..=n)
        .map(|i| {
            let mut x = x0.to_vec();
            if i > 0 {
                x[i - 1] += rho0;
            }
            x
        })
        .collect();
    let values = par::map_slice(&simplex, |x| objective(x));
    let mut evals = n + 1;

    let mut state = CobylaState {
        simplex,
        values,
        trust_radius: rho0,
        end_radius: opts.end_radius,
        iteration: 0,
        best: 0,
    };
    let abort = |state: &CobylaState| {
        let (x_best, f_best) = best_finite(state);
        Error::OptimizationAborted { x_best, f_best }
    };
    if state.values.iter().any(|v| !v.is_finite()) {
        return Err(abort(&state));
    }
    for i in 1..=n {
        if state.values[i] < state.values[state.best] {
            state.best = i;
        }
    }

    let mut history = Vec::new();
    let mut poor_step = false;
    while state.iteration < opts.max_iters && n > 0 {
        let rho = state.trust_radius;
        let Some(model) = state.model() else {
            // Degenerate simplex: rebuild it around the anchor.
            let xb = state.anchor().to_vec();
            let others: Vec<usize> = (0..=n).filter(|&i| i != state.best).collect();
            for (axis, &v) in others.iter().enumerate() {
                if state.iteration >= opts.max_iters {
                    break;
                }
                let mut x = xb.clone();
                x[axis] += rho;
                let f = objective(&x);
                evals += 1;
                state.iteration += 1;
                if !f.is_finite() {
                    return Err(abort(&state));
                }
                state.replace(v, x, f);
                history.push(state.values[state.best]);
            }
            continue;
        };

        if poor_step {
            poor_step = false;
            if let Some(k) = state.geometry_violation(&model) {
                let dir = model.dual.column(k).normalize();
                let sign = if model.gradient.dot(&dir) > 0.0 { -1.0 } else { 1.0 };
                let x: Vec<f64> =
                    state.anchor().iter().zip(dir.iter()).map(|(a, d)| a + sign * rho * d).collect();
                let f = objective(&x);
                evals += 1;
                state.iteration += 1;
                if !f.is_finite() {
                    return Err(abort(&state));
                }
                state.replace(model.others[k], x, f);
                history.push(state.values[state.best]);
                continue;
            }
            if rho <= state.end_radius {
                break;
            }
            state.shrink();
            continue;
        }

        let gnorm = model.gradient.norm();
        if gnorm <= f64::EPSILON * (1.0 + state.values[state.best].abs()) {
            poor_step = true;
            continue;
        }
        let step = -&model.gradient * (rho / gnorm);
        let predicted = rho * gnorm;
        let fb = state.values[state.best];
        let x: Vec<f64> = state.anchor().iter().zip(step.iter()).map(|(a, d)| a + d).collect();
        let f = objective(&x);
        evals += 1;
        state.iteration += 1;
        if !f.is_finite() {
            return Err(abort(&state));
        }

        // Coordinates of the step in the edge basis: replacing vertex k scales
        // the simplex volume by |λ_k|; replacing the anchor by |1 − Σλ|.
        let lambda = model.dual.transpose() * &step;
        let new_best = f < fb;
        let pivot: &[f64] = if new_best { &x } else { state.anchor() };
        let mut choice: Option<(usize, f64)> = None;
        for (k, &v) in model.others.iter().enumerate() {
            let far = (dist(&state.simplex[v], pivot) / rho).max(1.0);
            let score = lambda[k].abs() * far * far;
            if choice.is_none_or(|(_, s)| score > s) {
                choice = Some((v, score));
            }
        }
        if new_best {
            let anchor_score = (1.0 - lambda.sum()).abs();
            if let Some((_, s)) = choice {
                if anchor_score > s {
                    choice = Some((state.best, anchor_score));
                }
            }
        }
        match choice {
            Some((v, score)) if new_best || score > 1.0 => state.replace(v, x, f),
            _ => {}
        }
        history.push(state.values[state.best]);

        if (fb - f) / predicted < POOR_RATIO {
            poor_step = true;
        }
    }

    let (x, f) = best_finite(&state);
    Ok(CobylaResult {
        x,
        f,
        evals,
        iterations: state.iteration,
        final_radius: state.trust_radius,
        history,
    })
}

fn best_finite(state: &CobylaState) -> (Vec<f64>, f64) {
    let mut best: Option<usize> = None;
    for (i, v) in state.values.iter().enumerate() {
        if v.is_finite() && best.is_none_or(|b| *v < state.values[b]) {
            best = Some(i);
        }
    }
    match best {
        Some(b) => (state.simplex[b].clone(), state.values[b]),
        None => (state.simplex[0].clone(), f64::NAN),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_gradient_keeps_params() {
        let mut adam = Adam::new(3, 0.01);
        let mut p = vec![1.0, -2.0, 0.5];
        adam.step(&mut p, &[0.0; 3]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        for g in [3.0, -0.02, 150.0] {
            let mut adam = Adam::new(1, 0.01);
            let mut p = vec![0.0];
            adam.step(&mut p, &[g]).unwrap();
            assert!((p[0].abs() - 0.01).abs() < 1e-6, "{g}: {}", p[0]);
            assert!(p[0].signum() == -g.signum());
        }
    }

    #[test]
    fn adam_solves_scalar_quadratic() {
        let mut adam = Adam::new(1, 0.05);
        let mut p = vec![0.0];
        for _ in 0..500 {
            let g = 2.0 * (p[0] - 3.0);
            adam.step(&mut p, &[g]).unwrap();
        }
        assert!((p[0] - 3.0).abs() < 1e-2, "{}", p[0]);
    }

    #[test]
    fn adam_dimension_mismatch() {
        let mut adam = Adam::new(2, 0.01);
        assert!(adam.step(&mut [0.0; 3], &[0.0; 3]).is_err());
        assert!(adam.step(&mut [0.0; 2], &[0.0; 1]).is_err());
    }

    #[test]
    fn adam_is_deterministic() {
        let run = || {
            let mut adam = Adam::new(2, 0.01);
            let mut p = vec![0.3, -0.1];
            for i in 0..20 {
                let g = [p[0] * i as f64, (p[1] - 1.0).sin()];
                adam.step(&mut p, &g).unwrap();
            }
            (adam, p)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn constant_objective_returns_start() {
        let x0 = [0.3, -1.0, 2.0];
        let r = cobyla_minimize(|_| 4.2, &x0, &CobylaOptions::default()).unwrap();
        assert_eq!(r.x, x0.to_vec());
        assert_eq!(r.f, 4.2);
    }

    #[test]
    fn sphere_in_four_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = |x: &[f64]| x.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let r = cobyla_minimize(f, &[0.0; 4], &CobylaOptions::default()).unwrap();
        assert!(dist(&r.x, &c) < 1e-3, "{:?} vs {:?}", r.x, c);
        assert!(r.evals <= 150 + 5);
    }

    #[test]
    fn sine_minimum() {
        let opts = CobylaOptions { max_iters: 500, ..Default::default() };
        let r = cobyla_minimize(|x| x[0].sin(), &[0.0], &opts).unwrap();
        assert!(r.f <= -1.0 + 1e-4, "{}", r.f);
    }

    #[test]
    fn non_finite_objective_aborts_with_best() {
        let f = |x: &[f64]| if x[0] > 1.5 { f64::NAN } else { (x[0] - 2.0).powi(2) };
        match cobyla_minimize(f, &[0.0], &CobylaOptions::default()) {
            Err(Error::OptimizationAborted { x_best, f_best }) => {
                assert!(f_best.is_finite());
                assert!(f_best <= 4.0);
                assert_eq!(x_best.len(), 1);
            }
            other => panic!("expected abort, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_options() {
        let bad = CobylaOptions { max_iters: 0, ..Default::default() };
        assert!(cobyla_minimize(|_| 0.0, &[0.0], &bad).is_err());
        let bad = CobylaOptions { end_radius: 2.0, ..Default::default() };
        assert!(cobyla_minimize(|_| 0.0, &[0.0], &bad).is_err());
    }
}
