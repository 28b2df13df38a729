//! Fidelity kernels, RBF kernels and a precomputed-kernel soft-margin SVM.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuits::Circuit;
use crate::error::{invalid, Error, Result};
use crate::par;
use crate::qsim::Statevector;

/// Tolerances for accepting a Gram matrix.
pub const SYMMETRY_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-8;
pub const DIAGONAL_TOL: f64 = 1e-10;

/// Stable short hash of a feature matrix (dimensions plus row-major bits).
pub fn fingerprint(x: &[Vec<f64>]) -> String {
    let mut h = Sha256::new();
    h.update((x.len() as u64).to_le_bytes());
    h.update((x.first().map_or(0, Vec::len) as u64).to_le_bytes());
    for row in x {
        for v in row {
            h.update(v.to_le_bytes());
        }
    }
    hex::encode(&h.finalize()[..8])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSource {
    pub descriptor: String,
    pub fingerprint: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix {
    entries: DMatrix<f64>,
    pub source: KernelSource,
}

impl KernelMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>, source: KernelSource) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(invalid("kernel matrix must be square"));
        }
        let entries = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Ok(KernelMatrix { entries, source })
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.entries.row(i).iter().copied().collect()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.size();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.size() == 0 {
            return 0.0;
        }
        let sym = (&self.entries + self.entries.transpose()) * 0.5;
        sym.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Symmetric, unit diagonal and PSD within the tolerances above.
    pub fn validate(&self) -> Result<()> {
        if let Some(i) = (0..self.size()).find(|&i| (self.entries[(i, i)] - 1.0).abs() > DIAGONAL_TOL) {
            return Err(Error::IllConditionedKernel(format!(
                "diagonal entry {i} is {}",
                self.entries[(i, i)]
            )));
        }
        let asym = self.max_asymmetry();
        if asym > SYMMETRY_TOL {
            return Err(Error::IllConditionedKernel(format!("asymmetry {asym:e}")));
        }
        let lmin = self.min_eigenvalue();
        if lmin < -PSD_TOL {
            return Err(Error::IllConditionedKernel(format!("minimum eigenvalue {lmin:e}")));
        }
        Ok(())
    }

    /// Row-major CSV, preceded by a `#` line naming the source and dataset fingerprint.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# source={};fingerprint={};n={}",
            self.source.descriptor,
            self.source.fingerprint,
            self.size()
        )?;
        for i in 0..self.size() {
            let line: Vec<String> = self.entries.row(i).iter().map(|v| crate::numfmt::full(*v)).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty kernel file".into()))??;
        let meta = header
            .strip_prefix("# ")
            .ok_or_else(|| Error::Format("missing kernel header".into()))?;
        let mut descriptor = String::new();
        let mut fp = String::new();
        for kv in meta.split(';') {
            match kv.split_once('=') {
                Some(("source", v)) => descriptor = v.to_string(),
                Some(("fingerprint", v)) => fp = v.to_string(),
                _ => {}
            }
        }
        let mut rows = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|c| c.trim().parse::<f64>()).collect();
            rows.push(row.map_err(|e| Error::Format(format!("bad kernel entry: {e}")))?);
        }
        KernelMatrix::from_rows(rows, KernelSource { descriptor, fingerprint: fp })
    }
}

fn check_rows(x: &[Vec<f64>], dim: usize) -> Result<()> {
    for (i, row) in x.iter().enumerate() {
        if row.len() != dim {
            return Err(invalid(format!("row {i} has {} features, expected {dim}", row.len())));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(invalid(format!("row {i} has a non-finite feature")));
        }
    }
    Ok(())
}

/// Embed each row with a trainable-free feature map.
pub fn embed(x: &[Vec<f64>], feature_map: &Circuit) -> Result<Vec<Statevector>> {
    if feature_map.n_trainable() != 0 {
        return Err(invalid("fidelity kernels need a feature map without trainable slots"));
    }
    check_rows(x, feature_map.n_inputs())?;
    par::try_map_range(x.len(), |i| feature_map.run(&[], &x[i]))
}

fn descriptor(feature_map: &Circuit) -> String {
    let l = feature_map.layout();
    let shape: Vec<String> = l.shape.iter().map(|s| s.to_string()).collect();
    format!("fidelity:{}({})", l.template, shape.join("x"))
}

/// Gram matrix `K_ij = |⟨φ(x_i)|φ(x_j)⟩|²`.
pub fn fidelity_kernel_matrix(x: &[Vec<f64>], feature_map: &Circuit) -> Result<KernelMatrix> {
    let states = embed(x, feature_map)?;
    let n = states.len();
    let upper = par::try_map_range(n, |i| {
        (i..n).map(|j| states[i].fidelity(&states[j])).collect::<Result<Vec<f64>>>()
    })?;
    let entries = DMatrix::from_fn(n, n, |i, j| {
        if j >= i {
            upper[i][j - i]
        } else {
            upper[j][i - j]
        }
    });
    Ok(KernelMatrix {
        entries,
        source: KernelSource { descriptor: descriptor(feature_map), fingerprint: fingerprint(x) },
    })
}

/// Kernel rows between `queries` and `train` under a fidelity kernel.
pub fn fidelity_cross_kernel(
    queries: &[Vec<f64>],
    train: &[Vec<f64>],
    feature_map: &Circuit,
) -> Result<Vec<Vec<f64>>> {
    let q = embed(queries, feature_map)?;
    let t = embed(train, feature_map)?;
    par::try_map_range(q.len(), |i| t.iter().map(|s| q[i].fidelity(s)).collect())
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `1 / (n_features · Var(X))` over all entries of `x`.
pub fn default_gamma(x: &[Vec<f64>]) -> f64 {
    let d = x.first().map_or(1, Vec::len).max(1);
    let all: Vec<f64> = x.iter().flatten().copied().collect();
    if all.is_empty() {
        return 1.0;
    }
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    let var = all.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / all.len() as f64;
    if var > 0.0 {
        1.0 / (d as f64 * var)
    } else {
        1.0
    }
}

/// `K_ij = exp(−γ‖x_i − x_j‖²)`.
pub fn rbf_kernel_matrix(x: &[Vec<f64>], gamma: f64) -> Result<KernelMatrix> {
    if !(gamma > 0.0) {
        return Err(invalid(format!("gamma must be positive, got {gamma}")));
    }
    let d = x.first().map_or(0, Vec::len);
    check_rows(x, d)?;
    let n = x.len();
    let rows = par::map_range(n, |i| (0..n).map(|j| (-gamma * sq_dist(&x[i], &x[j])).exp()).collect());
    KernelMatrix::from_rows(
        rows,
        KernelSource { descriptor: format!("rbf:gamma={gamma}"), fingerprint: fingerprint(x) },
    )
}

pub fn rbf_cross_kernel(queries: &[Vec<f64>], train: &[Vec<f64>], gamma: f64) -> Result<Vec<Vec<f64>>> {
    if !(gamma > 0.0) {
        return Err(invalid(format!("gamma must be positive, got {gamma}")));
    }
    let d = train.first().map_or(0, Vec::len);
    check_rows(train, d)?;
    check_rows(queries, d)?;
    Ok(par::map_range(queries.len(), |i| {
        train.iter().map(|t| (-gamma * sq_dist(&queries[i], t)).exp()).collect()
    }))
}

/// Original class labels behind the `−1` / `+1` encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMap {
    pub negative: i64,
    pub positive: i64,
}

impl Default for LabelMap {
    fn default() -> Self {
        LabelMap { negative: -1, positive: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    /// `α_i` of each support vector.
    pub dual_coefficients: Vec<f64>,
    pub support_indices: Vec<usize>,
    /// `y_i ∈ {−1, +1}` of each support vector.
    pub support_labels: Vec<i8>,
    pub bias: f64,
    pub regularization_c: f64,
    pub n_train: usize,
    pub label_map: LabelMap,
    /// Maximal KKT violation `m(α) − M(α)` at exit.
    pub kkt_gap: f64,
    pub iterations: usize,
}

const MAX_SMO_ITERS: usize = 1_000_000;
const TAU: f64 = 1e-12;

fn check_binary(y: &[i8], n: usize) -> Result<()> {
    if y.len() != n {
        return Err(invalid(format!("{} labels for a {n}×{n} kernel", y.len())));
    }
    if let Some(bad) = y.iter().find(|&&v| v != 1 && v != -1) {
        return Err(invalid(format!("labels must be ±1, got {bad}")));
    }
    if !(y.contains(&1) && y.contains(&-1)) {
        return Err(invalid("both classes must be present"));
    }
    Ok(())
}

/// Train a soft-margin SVM on a precomputed kernel by sequential minimal
/// optimization, picking at each step the maximal violating pair (the pair
/// with the largest error gap `|E_i − E_j|`).
pub fn svm_train(k: &KernelMatrix, y: &[i8], c: f64, tol: f64) -> Result<SvmModel> {
    if !(c > 0.0) || !(tol > 0.0) {
        return Err(invalid("C and tol must be positive"));
    }
    check_binary(y, k.size())?;
    k.validate()?;
    Ok(smo(k.as_matrix(), y, c, tol))
}

fn smo(k: &DMatrix<f64>, y: &[i8], c: f64, tol: f64) -> SvmModel {
    let n = y.len();
    let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
    let mut alpha = vec![0.0; n];
    // Gradient of ½αᵀQα − eᵀα with Q_ij = y_i y_j K_ij.
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let in_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

    let mut iterations = 0;
    let mut gap;
    loop {
        let mut i = usize::MAX;
        let mut m = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut big_m = f64::INFINITY;
        for t in 0..n {
            let v = -yf[t] * grad[t];
            if in_up(alpha[t], yf[t]) && v > m {
                m = v;
                i = t;
            }
            if in_low(alpha[t], yf[t]) && v < big_m {
                big_m = v;
                j = t;
            }
        }
        gap = m - big_m;
        if i == usize::MAX || j == usize::MAX || gap < tol || iterations >= MAX_SMO_ITERS {
            break;
        }
        iterations += 1;

        let (ai, aj) = (alpha[i], alpha[j]);
        let kii = k[(i, i)];
        let kjj = k[(j, j)];
        let kij = k[(i, j)];
        let mut quad = kii + kjj - 2.0 * kij;
        if quad <= 0.0 {
            quad = TAU;
        }
        if yf[i] != yf[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (dai, daj) = (alpha[i] - ai, alpha[j] - aj);
        for t in 0..n {
            grad[t] += yf[t] * (yf[i] * k[(t, i)] * dai + yf[j] * k[(t, j)] * daj);
        }
    }

    let eps = 1e-12 * c;
    let free: Vec<f64> = (0..n)
        .filter(|&t| alpha[t] > eps && alpha[t] < c - eps)
        .map(|t| -yf[t] * grad[t])
        .collect();
    let bias = if !free.is_empty() {
        free.iter().sum::<f64>() / free.len() as f64
    } else {
        let up = (0..n).filter(|&t| in_up(alpha[t], yf[t])).map(|t| -yf[t] * grad[t]);
        let low = (0..n).filter(|&t| in_low(alpha[t], yf[t])).map(|t| -yf[t] * grad[t]);
        let lb = up.fold(f64::NEG_INFINITY, f64::max);
        let ub = low.fold(f64::INFINITY, f64::min);
        match (lb.is_finite(), ub.is_finite()) {
            (true, true) => 0.5 * (lb + ub),
            (true, false) => lb,
            (false, true) => ub,
            _ => 0.0,
        }
    };

    let support: Vec<usize> = (0..n).filter(|&t| alpha[t] > 0.0).collect();
    SvmModel {
        dual_coefficients: support.iter().map(|&t| alpha[t]).collect(),
        support_labels: support.iter().map(|&t| y[t]).collect(),
        support_indices: support,
        bias,
        regularization_c: c,
        n_train: n,
        label_map: LabelMap::default(),
        kkt_gap: gap.max(0.0),
        iterations,
    }
}

impl SvmModel {
    /// Full-length dual vector `α` over the training set.
    pub fn alphas(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.n_train];
        for (&i, &v) in self.support_indices.iter().zip(&self.dual_coefficients) {
            a[i] = v;
        }
        a
    }

    pub fn decision(&self, k_row: &[f64]) -> Result<f64> {
        if k_row.len() != self.n_train {
            return Err(invalid(format!(
                "kernel row has {} entries, model was trained on {}",
                k_row.len(),
                self.n_train
            )));
        }
        Ok(self
            .support_indices
            .iter()
            .zip(&self.dual_coefficients)
            .zip(&self.support_labels)
            .map(|((&i, &a), &yi)| a * yi as f64 * k_row[i])
            .sum::<f64>()
            + self.bias)
    }
}

/// `(label ∈ {−1, +1}, decision value)`; a zero decision maps to `+1`.
pub fn svm_predict(model: &SvmModel, k_row: &[f64]) -> Result<(i8, f64)> {
    let d = model.decision(k_row)?;
    Ok((if d >= 0.0 { 1 } else { -1 }, d))
}

/// Dual objective `½ Σ α_i α_j y_i y_j K_ij − Σ α_i` (minimized).
pub fn dual_objective(k: &KernelMatrix, y: &[i8], alpha: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * (y[i] * y[j]) as f64 * k.get(i, j);
        }
    }
    0.5 * quad - alpha.iter().sum::<f64>()
}

/// One-vs-rest ensemble over class labels `classes[k]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OvrModel {
    pub classes: Vec<usize>,
    pub models: Vec<SvmModel>,
}

pub fn ovr_train(k: &KernelMatrix, y: &[usize], c: f64, tol: f64) -> Result<OvrModel> {
    if y.len() != k.size() {
        return Err(invalid(format!("{} labels for a {}-point kernel", y.len(), k.size())));
    }
    let mut classes: Vec<usize> = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(invalid("one-vs-rest needs at least two classes"));
    }
    if !(c > 0.0) || !(tol > 0.0) {
        return Err(invalid("C and tol must be positive"));
    }
    k.validate()?;
    let models = par::map_slice(&classes, |&cls| {
        let yb: Vec<i8> = y.iter().map(|&v| if v == cls { 1 } else { -1 }).collect();
        let mut m = smo(k.as_matrix(), &yb, c, tol);
        m.label_map = LabelMap { negative: -1, positive: cls as i64 };
        m
    });
    Ok(OvrModel { classes, models })
}

impl OvrModel {
    pub fn decisions(&self, k_row: &[f64]) -> Result<Vec<f64>> {
        self.models.iter().map(|m| m.decision(k_row)).collect()
    }
}

/// Class with the largest decision value; ties go to the lowest class.
pub fn ovr_predict(model: &OvrModel, k_row: &[f64]) -> Result<usize> {
    let d = model.decisions(k_row)?;
    Ok(model.classes[argmax(&d)])
}

/// Index of the first maximal element.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::z_feature_map;
    use std::f64::consts::PI;

    fn src() -> KernelSource {
        KernelSource { descriptor: "test".into(), fingerprint: "0".into() }
    }

    #[test]
    fn fidelity_basics() {
        let fm = z_feature_map(1, 1).unwrap();
        let x = vec![vec![0.3], vec![0.3 + PI / 4.0], vec![0.3]];
        let k = fidelity_kernel_matrix(&x, &fm).unwrap();
        for i in 0..3 {
            assert!((k.get(i, i) - 1.0).abs() < 1e-12);
        }
        assert!((k.get(0, 1) - 0.5).abs() < 1e-12);
        assert!((k.get(0, 2) - 1.0).abs() < 1e-12);
        let q = fidelity_cross_kernel(&x[..1], &x, &fm).unwrap();
        assert!((q[0][1] - k.get(0, 1)).abs() < 1e-15);
        assert!(fidelity_kernel_matrix(&[vec![0.1, 0.2]], &fm).is_err());
    }

    #[test]
    fn rbf_examples() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0]];
        let k = rbf_kernel_matrix(&x, 1.0).unwrap();
        assert_eq!(k.get(0, 0), 1.0);
        assert!((k.get(0, 1) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((k.get(0, 2) - (-4.0f64).exp()).abs() < 1e-15);
        let g = 0.7;
        let d = (2.0f64.ln() / g).sqrt();
        let k = rbf_kernel_matrix(&[vec![0.0], vec![d]], g).unwrap();
        assert!((k.get(0, 1) - 0.5).abs() < 1e-12);
        assert!(rbf_kernel_matrix(&x, 0.0).is_err());
    }

    #[test]
    fn two_point_closed_form() {
        // Dual: min ½(a²K11 + a²K22 − 2a²K12) − 2a with α1 = α2 = a, so a = 2/(2 − 2·0.1) = 1.111…,
        // clipped by C = 1. Both points sit at the bound.
        let k = KernelMatrix::from_rows(vec![vec![1.0, 0.1], vec![0.1, 1.0]], src()).unwrap();
        let y = [1, -1];
        let m = svm_train(&k, &y, 1.0, 1e-3).unwrap();
        assert_eq!(m.support_indices, vec![0, 1]);
        assert!(m.dual_coefficients.iter().all(|&a| (a - 1.0).abs() < 1e-12));
        let (l0, d0) = svm_predict(&m, &k.row(0)).unwrap();
        let (l1, d1) = svm_predict(&m, &k.row(1)).unwrap();
        assert_eq!((l0, l1), (1, -1));
        assert!(d0 > 0.0 && d1 < 0.0);
        // alphas sum to zero against labels
        let s: f64 = m.alphas().iter().zip(y).map(|(a, yi)| a * yi as f64).sum();
        assert!(s.abs() < 1e-12);
        // relaxing C frees both points: α = 1/0.9
        let m = svm_train(&k, &y, 10.0, 1e-6).unwrap();
        assert!(m.dual_coefficients.iter().all(|&a| (a - 1.0 / 0.9).abs() < 1e-6));
        let (_, d0) = svm_predict(&m, &k.row(0)).unwrap();
        assert!((d0 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn single_class_is_rejected() {
        let k = KernelMatrix::from_rows(vec![vec![1.0, 0.1], vec![0.1, 1.0]], src()).unwrap();
        assert!(svm_train(&k, &[1, 1], 1.0, 1e-3).is_err());
        assert!(ovr_train(&k, &[2, 2], 1.0, 1e-3).is_err());
    }

    #[test]
    fn non_psd_kernel_is_rejected() {
        let k = KernelMatrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 1.0]], src()).unwrap();
        assert!(matches!(svm_train(&k, &[1, -1], 1.0, 1e-3), Err(Error::IllConditionedKernel(_))));
    }

    #[test]
    fn prediction_edge_cases() {
        let k = KernelMatrix::from_rows(vec![vec![1.0, 0.1], vec![0.1, 1.0]], src()).unwrap();
        let m = svm_train(&k, &[1, -1], 1.0, 1e-3).unwrap();
        let (l, d) = svm_predict(&m, &[0.0, 0.0]).unwrap();
        assert_eq!(d, m.bias);
        assert_eq!(l, if m.bias >= 0.0 { 1 } else { -1 });
        assert!(svm_predict(&m, &[0.0]).is_err());
    }

    #[test]
    fn ovr_tie_goes_to_lowest_class() {
        let model = OvrModel {
            classes: vec![0, 1, 2],
            models: (0..3)
                .map(|c| SvmModel {
                    dual_coefficients: vec![],
                    support_indices: vec![],
                    support_labels: vec![],
                    bias: 0.25,
                    regularization_c: 1.0,
                    n_train: 2,
                    label_map: LabelMap { negative: -1, positive: c },
                    kkt_gap: 0.0,
                    iterations: 0,
                })
                .collect(),
        };
        assert_eq!(ovr_predict(&model, &[0.3, 0.9]).unwrap(), 0);
    }

    #[test]
    fn csv_round_trip() {
        let x = vec![vec![0.1, 0.2], vec![0.5, 0.9], vec![0.3, 0.3]];
        let k = rbf_kernel_matrix(&x, 1.3).unwrap();
        let mut buf = Vec::new();
        k.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&format!("# source=rbf:gamma=1.3;fingerprint={}", fingerprint(&x))));
        let back = KernelMatrix::read_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, k);
    }
}
