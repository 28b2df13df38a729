//! Recurrent sequence regressors: hybrid QLSTM / QGRU cells whose gate maps
//! are variational circuits, and classical LSTM / GRU baselines.
//!
//! Every model reads a window of feature rows and predicts one scalar from
//! the final step. Parameters live in one flat vector per model:
//!
//! * quantum cells: `[vqc_1 … vqc_k, W_in, b_in, w_head, b_head]`, where
//!   `W_in` maps `[x_t; h]` onto the register and the hidden size equals the
//!   qubit count;
//! * classical cells: `[W_ih, W_hh, b_ih, b_hh, w_head, b_head]` with gates
//!   stacked `i, f, g, o` (LSTM) or `r, z, n` (GRU).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::z_jacobian;
use crate::circuits::{qlstm_vqc, Circuit};
use crate::error::{invalid, Error, Result};
use crate::optim::Adam;
use crate::par;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Qlstm,
    Qgru,
    Lstm,
    Gru,
}

impl CellKind {
    pub fn is_quantum(self) -> bool {
        matches!(self, CellKind::Qlstm | CellKind::Qgru)
    }

    /// Circuits per quantum cell, gate blocks per classical cell.
    fn blocks(self) -> usize {
        match self {
            CellKind::Qlstm => 6,
            CellKind::Qgru => 3,
            CellKind::Lstm => 4,
            CellKind::Gru => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceModel {
    pub kind: CellKind,
    pub input_dim: usize,
    pub hidden: usize,
    /// Circuit depth of each VQC; zero for classical cells.
    pub n_layers: usize,
    pub params: Vec<f64>,
    pub seed: u64,
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `c' = f⊙c + i⊙g`.
pub fn lstm_cell_update(f: &[f64], c: &[f64], i: &[f64], g: &[f64]) -> Vec<f64> {
    (0..c.len()).map(|k| f[k] * c[k] + i[k] * g[k]).collect()
}

/// `h' = (1 − z)⊙h + z⊙g`.
pub fn gru_blend(h: &[f64], z: &[f64], g: &[f64]) -> Vec<f64> {
    (0..h.len()).map(|k| (1.0 - z[k]) * h[k] + z[k] * g[k]).collect()
}

fn affine(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let cols = x.len();
    b.iter()
        .enumerate()
        .map(|(r, &br)| br + w[r * cols..(r + 1) * cols].iter().zip(x).map(|(a, v)| a * v).sum::<f64>())
        .collect()
}

/// Accumulate `dW += dy ⊗ x`, and return `Wᵀ dy`.
fn back_linear(w: &[f64], x: &[f64], dy: &[f64], dw: &mut [f64]) -> Vec<f64> {
    let cols = x.len();
    let mut dx = vec![0.0; cols];
    for (r, &d) in dy.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        for c in 0..cols {
            dw[r * cols + c] += d * x[c];
            dx[c] += d * w[r * cols + c];
        }
    }
    dx
}

fn add_into(acc: &mut [f64], v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}

/// One VQC evaluation with optional Jacobians.
struct Vqc {
    z: Vec<f64>,
    dp: Vec<Vec<f64>>,
    dx: Vec<Vec<f64>>,
}

fn run_vqc(c: &Circuit, theta: &[f64], v: &[f64], grad: bool) -> Result<Vqc> {
    if grad {
        let j = z_jacobian(c, theta, v)?;
        Ok(Vqc { z: j.values, dp: j.d_params, dx: j.d_inputs })
    } else {
        Ok(Vqc { z: c.run(theta, v)?.expectations_z(), dp: Vec::new(), dx: Vec::new() })
    }
}

fn back_vqc(e: &Vqc, dz: &[f64], dtheta: &mut [f64], dv: &mut [f64]) {
    for (q, &d) in dz.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        add_scaled(dtheta, &e.dp[q], d);
        add_scaled(dv, &e.dx[q], d);
    }
}

fn add_scaled(acc: &mut [f64], v: &[f64], s: f64) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += s * b;
    }
}

/// Offsets into the flat parameter vector.
struct Blocks {
    /// Quantum: params per VQC. Classical: rows per gate block (= hidden).
    per_block: usize,
    w_in: usize,
    b_in: usize,
    /// Classical only.
    w_hh: usize,
    b_hh: usize,
    w_head: usize,
    b_head: usize,
    total: usize,
}

impl SequenceModel {
    fn quantum(kind: CellKind, input_dim: usize, n_qubits: usize, n_layers: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 {
            return Err(invalid("input dimension must be positive"));
        }
        qlstm_vqc(n_qubits, n_layers)?;
        let mut m = SequenceModel { kind, input_dim, hidden: n_qubits, n_layers, params: Vec::new(), seed };
        let b = m.blocks();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let angle = std::f64::consts::PI / 8.0;
        let map = 1.0 / ((input_dim + n_qubits) as f64).sqrt();
        let head = 1.0 / (n_qubits as f64).sqrt();
        m.params = (0..b.total)
            .map(|i| {
                let bound = if i < b.w_in {
                    angle
                } else if i < b.w_head {
                    map
                } else {
                    head
                };
                rng.random_range(-bound..=bound)
            })
            .collect();
        Ok(m)
    }

    fn classical(kind: CellKind, input_dim: usize, hidden: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 || hidden == 0 {
            return Err(invalid("input and hidden sizes must be positive"));
        }
        let mut m = SequenceModel { kind, input_dim, hidden, n_layers: 0, params: Vec::new(), seed };
        let total = m.blocks().total;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 1.0 / (hidden as f64).sqrt();
        m.params = (0..total).map(|_| rng.random_range(-bound..=bound)).collect();
        Ok(m)
    }

    /// Six circuits: forget, input, update, output, hidden projection, output projection.
    pub fn qlstm(input_dim: usize, n_qubits: usize, n_layers: usize, seed: u64) -> Result<Self> {
        Self::quantum(CellKind::Qlstm, input_dim, n_qubits, n_layers, seed)
    }

    /// Three circuits: reset, update, candidate.
    pub fn qgru(input_dim: usize, n_qubits: usize, n_layers: usize, seed: u64) -> Result<Self> {
        Self::quantum(CellKind::Qgru, input_dim, n_qubits, n_layers, seed)
    }

    pub fn lstm(input_dim: usize, hidden: usize, seed: u64) -> Result<Self> {
        Self::classical(CellKind::Lstm, input_dim, hidden, seed)
    }

    pub fn gru(input_dim: usize, hidden: usize, seed: u64) -> Result<Self> {
        Self::classical(CellKind::Gru, input_dim, hidden, seed)
    }

    fn blocks(&self) -> Blocks {
        let (d, h, k) = (self.input_dim, self.hidden, self.kind.blocks());
        if self.kind.is_quantum() {
            let per = 3 * h * self.n_layers;
            let w_in = k * per;
            let b_in = w_in + h * (d + h);
            let w_head = b_in + h;
            Blocks { per_block: per, w_in, b_in, w_hh: 0, b_hh: 0, w_head, b_head: w_head + h, total: w_head + h + 1 }
        } else {
            let g = k * h;
            let w_hh = g * d;
            let b_in = w_hh + g * h;
            let b_hh = b_in + g;
            let w_head = b_hh + g;
            Blocks { per_block: h, w_in: 0, b_in, w_hh, b_hh, w_head, b_head: w_head + h, total: w_head + h + 1 }
        }
    }

    /// All trainable scalars.
    pub fn count_params(&self) -> usize {
        self.params.len()
    }

    /// Circuit angles only (zero for classical cells).
    pub fn circuit_params(&self) -> usize {
        if self.kind.is_quantum() {
            self.kind.blocks() * self.blocks().per_block
        } else {
            0
        }
    }

    fn circuit(&self) -> Result<Circuit> {
        qlstm_vqc(self.hidden, self.n_layers)
    }

    fn theta(&self, k: usize) -> &[f64] {
        let per = self.blocks().per_block;
        &self.params[k * per..(k + 1) * per]
    }

    fn check_window(&self, window: &[Vec<f64>]) -> Result<()> {
        if window.is_empty() {
            return Err(invalid("empty window"));
        }
        if let Some(r) = window.iter().find(|r| r.len() != self.input_dim) {
            return Err(invalid(format!("expected {} features per step, got {}", self.input_dim, r.len())));
        }
        Ok(())
    }

    fn input_map(&self, x: &[f64], h: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let b = self.blocks();
        let xh = [x, h].concat();
        let v = affine(&self.params[b.w_in..b.b_in], &self.params[b.b_in..b.w_head], &xh);
        (xh, v)
    }

    fn head(&self, u: &[f64]) -> f64 {
        let b = self.blocks();
        self.params[b.b_head] + self.params[b.w_head..b.b_head].iter().zip(u).map(|(w, v)| w * v).sum::<f64>()
    }

    /// One QLSTM step: `(h', c', y_t)`.
    pub fn qlstm_step(&self, x: &[f64], h: &[f64], c: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
        if self.kind != CellKind::Qlstm {
            return Err(invalid("not a QLSTM model"));
        }
        self.check_state(x, h)?;
        if c.len() != self.hidden {
            return Err(invalid("cell state has the wrong size"));
        }
        let circ = self.circuit()?;
        let s = self.qlstm_forward(&circ, x, h, c, false)?;
        let y = self.head(&run_vqc(&circ, self.theta(5), &s.m, false)?.z);
        Ok((s.h, s.c, y))
    }

    /// One QGRU step: `h'`.
    pub fn qgru_step(&self, x: &[f64], h: &[f64]) -> Result<Vec<f64>> {
        if self.kind != CellKind::Qgru {
            return Err(invalid("not a QGRU model"));
        }
        self.check_state(x, h)?;
        Ok(self.qgru_forward(&self.circuit()?, x, h, false)?.h)
    }

    fn check_state(&self, x: &[f64], h: &[f64]) -> Result<()> {
        if x.len() != self.input_dim || h.len() != self.hidden {
            return Err(invalid(format!(
                "expected x of {} and h of {}, got {} and {}",
                self.input_dim,
                self.hidden,
                x.len(),
                h.len()
            )));
        }
        Ok(())
    }

    fn qlstm_forward(&self, circ: &Circuit, x: &[f64], h: &[f64], c: &[f64], grad: bool) -> Result<QlstmCache> {
        let (xh, v) = self.input_map(x, h);
        let gates = [0, 1, 2, 3].map(|k| run_vqc(circ, self.theta(k), &v, grad));
        let [gf, gi, gg, go] = gates;
        let (gf, gi, gg, go) = (gf?, gi?, gg?, go?);
        let f: Vec<f64> = gf.z.iter().map(|&a| sigmoid(a)).collect();
        let i: Vec<f64> = gi.z.iter().map(|&a| sigmoid(a)).collect();
        let g: Vec<f64> = gg.z.iter().map(|&a| a.tanh()).collect();
        let o: Vec<f64> = go.z.iter().map(|&a| sigmoid(a)).collect();
        let c_new = lstm_cell_update(&f, c, &i, &g);
        let tc: Vec<f64> = c_new.iter().map(|v| v.tanh()).collect();
        let m: Vec<f64> = o.iter().zip(&tc).map(|(a, b)| a * b).collect();
        let proj = run_vqc(circ, self.theta(4), &m, grad)?;
        Ok(QlstmCache {
            xh,
            c_prev: c.to_vec(),
            gates: [gf, gi, gg, go],
            f,
            i,
            g,
            o,
            tc,
            h: proj.z.clone(),
            c: c_new,
            m,
            proj,
        })
    }

    fn qgru_forward(&self, circ: &Circuit, x: &[f64], h: &[f64], grad: bool) -> Result<QgruCache> {
        let (xh, v) = self.input_map(x, h);
        let er = run_vqc(circ, self.theta(0), &v, grad)?;
        let ez = run_vqc(circ, self.theta(1), &v, grad)?;
        let r: Vec<f64> = er.z.iter().map(|&a| sigmoid(a)).collect();
        let z: Vec<f64> = ez.z.iter().map(|&a| sigmoid(a)).collect();
        let rh: Vec<f64> = r.iter().zip(h).map(|(a, b)| a * b).collect();
        let (xrh, vt) = self.input_map(x, &rh);
        let eg = run_vqc(circ, self.theta(2), &vt, grad)?;
        let g: Vec<f64> = eg.z.iter().map(|a| a.tanh()).collect();
        let h_new = gru_blend(h, &z, &g);
        Ok(QgruCache { xh, xrh, h_prev: h.to_vec(), er, ez, eg, r, z, g, h: h_new })
    }

    /// Prediction from the final step of `window`.
    pub fn predict(&self, window: &[Vec<f64>]) -> Result<f64> {
        self.check_window(window)?;
        Ok(self.forward(window, None)?.0)
    }

    /// Squared error against `target` and its gradient.
    pub fn loss_grad(&self, window: &[Vec<f64>], target: f64) -> Result<(f64, Vec<f64>)> {
        self.check_window(window)?;
        let (y, g) = self.forward(window, Some(target))?;
        Ok(((y - target).powi(2), g.expect("requested")))
    }

    fn forward(&self, window: &[Vec<f64>], target: Option<f64>) -> Result<(f64, Option<Vec<f64>>)> {
        match self.kind {
            CellKind::Qlstm => self.run_qlstm(window, target),
            CellKind::Qgru => self.run_qgru(window, target),
            CellKind::Lstm => Ok(self.run_lstm(window, target)),
            CellKind::Gru => Ok(self.run_gru(window, target)),
        }
    }

    fn run_qlstm(&self, window: &[Vec<f64>], target: Option<f64>) -> Result<(f64, Option<Vec<f64>>)> {
        let grad = target.is_some();
        let circ = self.circuit()?;
        let b = self.blocks();
        let nh = self.hidden;
        let mut h = vec![0.0; nh];
        let mut c = vec![0.0; nh];
        let mut steps = Vec::with_capacity(window.len());
        for x in window {
            let s = self.qlstm_forward(&circ, x, &h, &c, grad)?;
            h = s.h.clone();
            c = s.c.clone();
            steps.push(s);
        }
        let last = steps.last().expect("non-empty window");
        let out = run_vqc(&circ, self.theta(5), &last.m, grad)?;
        let y = self.head(&out.z);
        let Some(t) = target else { return Ok((y, None)) };

        let mut gp = vec![0.0; b.total];
        let dy = 2.0 * (y - t);
        gp[b.b_head] += dy;
        add_scaled(&mut gp[b.w_head..b.b_head], &out.z, dy);
        let dz6: Vec<f64> = self.params[b.w_head..b.b_head].iter().map(|w| w * dy).collect();
        let mut dm_last = vec![0.0; nh];
        back_vqc(&out, &dz6, &mut gp[5 * b.per_block..6 * b.per_block], &mut dm_last);

        let mut dh = vec![0.0; nh];
        let mut dc = vec![0.0; nh];
        for (t_idx, s) in steps.iter().enumerate().rev() {
            let mut dm = if t_idx + 1 == steps.len() { dm_last.clone() } else { vec![0.0; nh] };
            back_vqc(&s.proj, &dh, &mut gp[4 * b.per_block..5 * b.per_block], &mut dm);
            let mut dc_new = dc.clone();
            let mut da = [vec![0.0; nh], vec![0.0; nh], vec![0.0; nh], vec![0.0; nh]];
            for q in 0..nh {
                let d_o = dm[q] * s.tc[q];
                dc_new[q] += dm[q] * s.o[q] * (1.0 - s.tc[q] * s.tc[q]);
                let df = dc_new[q] * s.c_prev[q];
                let di = dc_new[q] * s.g[q];
                let dg = dc_new[q] * s.i[q];
                dc[q] = dc_new[q] * s.f[q];
                da[0][q] = df * s.f[q] * (1.0 - s.f[q]);
                da[1][q] = di * s.i[q] * (1.0 - s.i[q]);
                da[2][q] = dg * (1.0 - s.g[q] * s.g[q]);
                da[3][q] = d_o * s.o[q] * (1.0 - s.o[q]);
            }
            let mut dv = vec![0.0; nh];
            for k in 0..4 {
                back_vqc(&s.gates[k], &da[k], &mut gp[k * b.per_block..(k + 1) * b.per_block], &mut dv);
            }
            add_into(&mut gp[b.b_in..b.w_head], &dv);
            let dxh = back_linear(&self.params[b.w_in..b.b_in], &s.xh, &dv, &mut gp[b.w_in..b.b_in]);
            dh = dxh[self.input_dim..].to_vec();
        }
        Ok((y, Some(gp)))
    }

    fn run_qgru(&self, window: &[Vec<f64>], target: Option<f64>) -> Result<(f64, Option<Vec<f64>>)> {
        let grad = target.is_some();
        let circ = self.circuit()?;
        let b = self.blocks();
        let (d, nh) = (self.input_dim, self.hidden);
        let mut h = vec![0.0; nh];
        let mut steps = Vec::with_capacity(window.len());
        for x in window {
            let s = self.qgru_forward(&circ, x, &h, grad)?;
            h = s.h.clone();
            steps.push(s);
        }
        let y = self.head(&h);
        let Some(t) = target else { return Ok((y, None)) };

        let mut gp = vec![0.0; b.total];
        let dy = 2.0 * (y - t);
        gp[b.b_head] += dy;
        add_scaled(&mut gp[b.w_head..b.b_head], &h, dy);
        let mut dh: Vec<f64> = self.params[b.w_head..b.b_head].iter().map(|w| w * dy).collect();
        let w_in = &self.params[b.w_in..b.b_in];
        let per = b.per_block;
        for s in steps.iter().rev() {
            let mut dh_prev: Vec<f64> = (0..nh).map(|q| dh[q] * (1.0 - s.z[q])).collect();
            let mut da_z = vec![0.0; nh];
            let mut da_g = vec![0.0; nh];
            for q in 0..nh {
                let dz = dh[q] * (s.g[q] - s.h_prev[q]);
                da_z[q] = dz * s.z[q] * (1.0 - s.z[q]);
                da_g[q] = dh[q] * s.z[q] * (1.0 - s.g[q] * s.g[q]);
            }
            let mut dvt = vec![0.0; nh];
            back_vqc(&s.eg, &da_g, &mut gp[2 * per..3 * per], &mut dvt);
            add_into(&mut gp[b.b_in..b.w_head], &dvt);
            let dxrh = back_linear(w_in, &s.xrh, &dvt, &mut gp[b.w_in..b.b_in]);
            let mut da_r = vec![0.0; nh];
            for q in 0..nh {
                let drh = dxrh[d + q];
                da_r[q] = drh * s.h_prev[q] * s.r[q] * (1.0 - s.r[q]);
                dh_prev[q] += drh * s.r[q];
            }
            let mut dv = vec![0.0; nh];
            back_vqc(&s.er, &da_r, &mut gp[0..per], &mut dv);
            back_vqc(&s.ez, &da_z, &mut gp[per..2 * per], &mut dv);
            add_into(&mut gp[b.b_in..b.w_head], &dv);
            let dxh = back_linear(w_in, &s.xh, &dv, &mut gp[b.w_in..b.b_in]);
            add_into(&mut dh_prev, &dxh[d..]);
            dh = dh_prev;
        }
        Ok((y, Some(gp)))
    }

    fn classical_parts(&self) -> (&[f64], &[f64], &[f64], &[f64]) {
        let b = self.blocks();
        let p = &self.params;
        (&p[..b.w_hh], &p[b.w_hh..b.b_in], &p[b.b_in..b.b_hh], &p[b.b_hh..b.w_head])
    }

    fn run_lstm(&self, window: &[Vec<f64>], target: Option<f64>) -> (f64, Option<Vec<f64>>) {
        let b = self.blocks();
        let nh = self.hidden;
        let (w_ih, w_hh, b_ih, b_hh) = self.classical_parts();
        let mut h = vec![0.0; nh];
        let mut c = vec![0.0; nh];
        let mut steps: Vec<LstmCache> = Vec::with_capacity(window.len());
        for x in window {
            let mut a = affine(w_ih, b_ih, x);
            add_into(&mut a, &affine(w_hh, b_hh, &h));
            let i: Vec<f64> = a[..nh].iter().map(|&v| sigmoid(v)).collect();
            let f: Vec<f64> = a[nh..2 * nh].iter().map(|&v| sigmoid(v)).collect();
            let g: Vec<f64> = a[2 * nh..3 * nh].iter().map(|v| v.tanh()).collect();
            let o: Vec<f64> = a[3 * nh..].iter().map(|&v| sigmoid(v)).collect();
            let c_new = lstm_cell_update(&f, &c, &i, &g);
            let tc: Vec<f64> = c_new.iter().map(|v| v.tanh()).collect();
            let h_new: Vec<f64> = o.iter().zip(&tc).map(|(a, b)| a * b).collect();
            steps.push(LstmCache { x: x.clone(), h_prev: h, c_prev: c, i, f, g, o, tc });
            h = h_new;
            c = c_new;
        }
        let y = self.head(&h);
        let Some(t) = target else { return (y, None) };

        let mut gp = vec![0.0; b.total];
        let dy = 2.0 * (y - t);
        gp[b.b_head] += dy;
        add_scaled(&mut gp[b.w_head..b.b_head], &h, dy);
        let mut dh: Vec<f64> = self.params[b.w_head..b.b_head].iter().map(|w| w * dy).collect();
        let mut dc = vec![0.0; nh];
        for s in steps.iter().rev() {
            let mut da = vec![0.0; 4 * nh];
            for q in 0..nh {
                let d_o = dh[q] * s.tc[q];
                let dcq = dc[q] + dh[q] * s.o[q] * (1.0 - s.tc[q] * s.tc[q]);
                da[q] = dcq * s.g[q] * s.i[q] * (1.0 - s.i[q]);
                da[nh + q] = dcq * s.c_prev[q] * s.f[q] * (1.0 - s.f[q]);
                da[2 * nh + q] = dcq * s.i[q] * (1.0 - s.g[q] * s.g[q]);
                da[3 * nh + q] = d_o * s.o[q] * (1.0 - s.o[q]);
                dc[q] = dcq * s.f[q];
            }
            back_linear(w_ih, &s.x, &da, &mut gp[..b.w_hh]);
            dh = back_linear(w_hh, &s.h_prev, &da, &mut gp[b.w_hh..b.b_in]);
            add_into(&mut gp[b.b_in..b.b_hh], &da);
            add_into(&mut gp[b.b_hh..b.w_head], &da);
        }
        (y, Some(gp))
    }

    fn run_gru(&self, window: &[Vec<f64>], target: Option<f64>) -> (f64, Option<Vec<f64>>) {
        let b = self.blocks();
        let nh = self.hidden;
        let (w_ih, w_hh, b_ih, b_hh) = self.classical_parts();
        let mut h = vec![0.0; nh];
        let mut steps: Vec<GruCache> = Vec::with_capacity(window.len());
        for x in window {
            let ax = affine(w_ih, b_ih, x);
            let ah = affine(w_hh, b_hh, &h);
            let r: Vec<f64> = (0..nh).map(|q| sigmoid(ax[q] + ah[q])).collect();
            let z: Vec<f64> = (0..nh).map(|q| sigmoid(ax[nh + q] + ah[nh + q])).collect();
            let hn = ah[2 * nh..].to_vec();
            let n: Vec<f64> = (0..nh).map(|q| (ax[2 * nh + q] + r[q] * hn[q]).tanh()).collect();
            let h_new: Vec<f64> = (0..nh).map(|q| (1.0 - z[q]) * n[q] + z[q] * h[q]).collect();
            steps.push(GruCache { x: x.clone(), h_prev: h, r, z, n, hn });
            h = h_new;
        }
        let y = self.head(&h);
        let Some(t) = target else { return (y, None) };

        let mut gp = vec![0.0; b.total];
        let dy = 2.0 * (y - t);
        gp[b.b_head] += dy;
        add_scaled(&mut gp[b.w_head..b.b_head], &h, dy);
        let mut dh: Vec<f64> = self.params[b.w_head..b.b_head].iter().map(|w| w * dy).collect();
        for s in steps.iter().rev() {
            let mut dax = vec![0.0; 3 * nh];
            let mut dah = vec![0.0; 3 * nh];
            let mut dh_prev = vec![0.0; nh];
            for q in 0..nh {
                let dn = dh[q] * (1.0 - s.z[q]);
                let dz = dh[q] * (s.h_prev[q] - s.n[q]);
                dh_prev[q] = dh[q] * s.z[q];
                let dan = dn * (1.0 - s.n[q] * s.n[q]);
                let dr = dan * s.hn[q];
                let dar = dr * s.r[q] * (1.0 - s.r[q]);
                let daz = dz * s.z[q] * (1.0 - s.z[q]);
                dax[q] = dar;
                dax[nh + q] = daz;
                dax[2 * nh + q] = dan;
                dah[q] = dar;
                dah[nh + q] = daz;
                dah[2 * nh + q] = dan * s.r[q];
            }
            back_linear(w_ih, &s.x, &dax, &mut gp[..b.w_hh]);
            add_into(&mut dh_prev, &back_linear(w_hh, &s.h_prev, &dah, &mut gp[b.w_hh..b.b_in]));
            add_into(&mut gp[b.b_in..b.b_hh], &dax);
            add_into(&mut gp[b.b_hh..b.w_head], &dah);
            dh = dh_prev;
        }
        (y, Some(gp))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: SequenceModel = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if m.kind.is_quantum() {
            qlstm_vqc(m.hidden, m.n_layers)?;
        }
        if m.params.len() != m.blocks().total {
            return Err(Error::Format("parameter count does not match the declared shape".into()));
        }
        Ok(m)
    }
}

/// Trainable scalars of a classical cell with dual bias and a scalar head.
pub fn classical_param_formula(kind: CellKind, d: usize, h: usize) -> usize {
    let gates = match kind {
        CellKind::Lstm => 4,
        CellKind::Gru => 3,
        _ => 0,
    };
    gates * ((d + h) * h + 2 * h) + h + 1
}

struct QlstmCache {
    xh: Vec<f64>,
    c_prev: Vec<f64>,
    gates: [Vqc; 4],
    f: Vec<f64>,
    i: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    c: Vec<f64>,
    tc: Vec<f64>,
    m: Vec<f64>,
    proj: Vqc,
    h: Vec<f64>,
}

struct QgruCache {
    xh: Vec<f64>,
    xrh: Vec<f64>,
    h_prev: Vec<f64>,
    er: Vqc,
    ez: Vqc,
    eg: Vqc,
    r: Vec<f64>,
    z: Vec<f64>,
    g: Vec<f64>,
    h: Vec<f64>,
}

struct LstmCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    tc: Vec<f64>,
}

struct GruCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    r: Vec<f64>,
    z: Vec<f64>,
    n: Vec<f64>,
    hn: Vec<f64>,
}

/// Sliding windows of `len` consecutive rows; window `k` ends at row `k + len − 1`.
pub fn sliding_windows(rows: &[Vec<f64>], len: usize) -> Result<Vec<Vec<Vec<f64>>>> {
    if len == 0 || rows.len() < len {
        return Err(invalid(format!("cannot cut windows of {len} from {} rows", rows.len())));
    }
    Ok((0..=rows.len() - len).map(|k| rows[k..k + len].to_vec()).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceTrainOptions {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for SequenceTrainOptions {
    fn default() -> Self {
        SequenceTrainOptions { epochs: 50, learning_rate: 0.01, batch_size: 32, seed: 0 }
    }
}

/// Mean squared error and gradient over a set of windows, summed in index order.
pub fn batch_loss_grad(model: &SequenceModel, windows: &[Vec<Vec<f64>>], targets: &[f64], idx: &[usize]) -> Result<(f64, Vec<f64>)> {
    let parts = par::try_map_range(idx.len(), |k| model.loss_grad(&windows[idx[k]], targets[idx[k]]))?;
    let n = idx.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; model.count_params()];
    for (l, g) in parts {
        loss += l;
        add_into(&mut grad, &g);
    }
    Ok((loss / n, grad.into_iter().map(|g| g / n).collect()))
}

/// Mini-batch Adam on squared error. Batches are drawn from a seeded shuffle
/// each epoch; the history holds the mean batch loss of every epoch.
pub fn train_sequence_model(
    model: &mut SequenceModel,
    windows: &[Vec<Vec<f64>>],
    targets: &[f64],
    opts: &SequenceTrainOptions,
) -> Result<Vec<f64>> {
    if windows.is_empty() {
        return Err(invalid("no training windows"));
    }
    if windows.len() != targets.len() {
        return Err(invalid(format!("{} targets for {} windows", targets.len(), windows.len())));
    }
    if opts.epochs == 0 || opts.batch_size == 0 || !(opts.learning_rate > 0.0) {
        return Err(invalid("epochs, batch size and learning rate must be positive"));
    }
    for w in windows {
        model.check_window(w)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut adam = Adam::new(model.count_params(), opts.learning_rate);
    let mut order: Vec<usize> = (0..windows.len()).collect();
    let mut history = Vec::with_capacity(opts.epochs);
    for _ in 0..opts.epochs {
        for i in (1..order.len()).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let mut total = 0.0;
        for batch in order.chunks(opts.batch_size) {
            let (loss, grad) = batch_loss_grad(model, windows, targets, batch)?;
            if !loss.is_finite() {
                return Err(Error::OptimizationAborted { x_best: model.params.clone(), f_best: loss });
            }
            total += loss * batch.len() as f64;
            adam.step(&mut model.params, &grad)?;
        }
        history.push(total / windows.len() as f64);
    }
    Ok(history)
}
