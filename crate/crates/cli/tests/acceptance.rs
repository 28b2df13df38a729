//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fail.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_3, FRAC_PI_4, PI};
use std::fs;
use std::time::{Duration, Instant};

use qweather_bench::{execute, DataSource, ExperimentConfig, ExperimentReport, ModelKind};
use qweather_core::autodiff::{finite_diff_grad, param_shift_grad, GradientRequest, Observable, Wrt};
use qweather_core::circuits::{qlstm_vqc, real_amplitudes, reuploading_ising, reuploading_sel, z_feature_map, Circuit};
use qweather_core::models::Task;
use qweather_core::optim::{cobyla_minimize, CobylaOptions};
use qweather_core::qkernel::{
    dual_objective, fidelity_cross_kernel, fidelity_kernel_matrix, rbf_kernel_matrix, svm_predict, svm_train,
    KernelMatrix,
};
use qweather_core::qsim::{Gate, GateKind, Statevector};
use qweather_core::recurrent::SequenceModel;
use qweather_core::weather::{
    bin_target, select_features, BinMode, CorrelationReport, Selection, BINARY_BOUNDARY_K, TERNARY_BOUNDARIES_K,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn max_abs_diff(a: &Statevector, b: &Statevector) -> f64 {
    a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn amps_close(s: &Statevector, expected: &[(f64, f64)]) -> bool {
    s.amplitudes().len() == expected.len()
        && s.amplitudes().iter().zip(expected).all(|(a, &(re, im))| (a.re - re).abs() < 1e-12 && (a.im - im).abs() < 1e-12)
}

fn random_gate(rng: &mut ChaCha8Rng, n: usize) -> Gate {
    const KINDS: [GateKind; 10] = [
        GateKind::H,
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::R3,
        GateKind::Cnot,
        GateKind::Cz,
        GateKind::Rxx,
        GateKind::Ryy,
        GateKind::Rzz,
    ];
    let kind = KINDS[rng.random_range(0..KINDS.len())];
    let mut qubits: Vec<usize> = (0..n).collect();
    qubits.shuffle(rng);
    let angles: Vec<f64> = (0..kind.n_angles()).map(|_| rng.random_range(-PI..PI)).collect();
    Gate::new(kind, &qubits[..kind.n_targets()], &angles).expect("valid random gate")
}

fn simulator_exactness() -> Outcome {
    let t0 = Instant::now();
    let s = |n| Statevector::new(n).unwrap();
    let h = FRAC_1_SQRT_2;
    ensure(amps_close(&s(1), &[(1.0, 0.0), (0.0, 0.0)]), || "|0> amplitudes".into())?;
    ensure(amps_close(&s(2), &[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)]), || "|00> amplitudes".into())?;
    ensure(Statevector::new(25).is_err(), || "25 qubits accepted".into())?;
    let plus = s(1).apply_gate(&Gate::h(0)).unwrap();
    ensure(amps_close(&plus, &[(h, 0.0), (h, 0.0)]), || "H|0>".into())?;
    ensure(amps_close(&s(1).apply_gate(&Gate::rx(0, PI)).unwrap(), &[(0.0, 0.0), (0.0, -1.0)]), || "RX(pi)|0>".into())?;
    let ten = Statevector::basis(2, 0b10).unwrap().apply_gate(&Gate::cnot(0, 1)).unwrap();
    ensure(amps_close(&ten, &Statevector::basis(2, 0b11).unwrap().amplitudes().iter().map(|a| (a.re, a.im)).collect::<Vec<_>>()), || {
        "CNOT|10>".into()
    })?;
    let theta = 0.7;
    let zz = s(2).apply_gate(&Gate::rzz(0, 1, theta)).unwrap();
    ensure(amps_close(&zz, &[((theta / 2.0).cos(), -(theta / 2.0).sin()), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)]), || "RZZ|00>".into())?;
    ensure(s(1).expectation_z(0).unwrap() == 1.0, || "<Z> of |0>".into())?;
    ensure(plus.expectation_z(0).unwrap().abs() < 1e-12, || "<Z> of H|0>".into())?;
    let ry = s(1).apply_gate(&Gate::ry(0, FRAC_PI_3)).unwrap();
    ensure((ry.expectation_z(0).unwrap() - 0.5).abs() < 1e-12, || "<Z> of RY(pi/3)|0>".into())?;
    let close = |p: Vec<f64>, e: &[f64]| p.len() == e.len() && p.iter().zip(e).all(|(a, b)| (a - b).abs() < 1e-12);
    ensure(close(plus.probabilities(), &[0.5, 0.5]), || "probabilities H|0>".into())?;
    ensure(close(Statevector::basis(2, 3).unwrap().probabilities(), &[0.0, 0.0, 0.0, 1.0]), || "probabilities |11>".into())?;
    let hh = s(2).apply_gate(&Gate::h(0)).unwrap().apply_gate(&Gate::h(1)).unwrap();
    ensure(close(hh.probabilities(), &[0.25; 4]), || "probabilities H⊗H|00>".into())?;
    let ip = hh.inner_product(&hh).unwrap();
    ensure((ip.re - 1.0).abs() < 1e-12 && ip.im.abs() < 1e-12, || "<a|a>".into())?;
    ensure(s(1).inner_product(&Statevector::basis(1, 1).unwrap()).unwrap().norm() == 0.0, || "<0|1>".into())?;
    ensure((s(1).inner_product(&plus).unwrap().re - h).abs() < 1e-12, || "<0|H|0>".into())?;

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut state = s(6);
    let mut worst_norm: f64 = 0.0;
    let mut worst_inverse: f64 = 0.0;
    for _ in 0..1000 {
        let g = random_gate(&mut rng, 6);
        let before = state.clone();
        let undone = state.clone().apply_gate(&g).unwrap().apply_gate(&g.inverse()).unwrap();
        worst_inverse = worst_inverse.max(max_abs_diff(&undone, &before));
        state.apply(&g).unwrap();
        worst_norm = worst_norm.max((state.norm_sqr() - 1.0).abs());
    }
    let elapsed = t0.elapsed();
    ensure(worst_norm < 1e-10, || format!("norm drift {worst_norm:e}"))?;
    ensure(worst_inverse < 1e-12, || format!("inverse residual {worst_inverse:e}"))?;
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!("norm drift {worst_norm:.1e}, inverse residual {worst_inverse:.1e}, {:.2}s", elapsed.as_secs_f64()))
}

fn gradient_oracle() -> Outcome {
    let t0 = Instant::now();
    let templates: [(&str, Circuit); 4] = [
        ("ising", reuploading_ising(3, 2).unwrap()),
        ("sel", reuploading_sel(4, 4).unwrap()),
        ("real_amplitudes", real_amplitudes(4, 3).unwrap()),
        ("qlstm_vqc", qlstm_vqc(4, 2).unwrap()),
    ];
    let mut worst: f64 = 0.0;
    for (name, c) in &templates {
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let params: Vec<f64> = (0..c.n_trainable()).map(|_| rng.random_range(-PI..PI)).collect();
            let inputs: Vec<f64> = (0..c.n_inputs()).map(|_| rng.random_range(-1.5..1.5)).collect();
            let terms: Vec<(usize, f64)> = (0..c.n_qubits()).map(|q| (q, rng.random_range(-1.0..1.0))).collect();
            let obs = if seed % 2 == 0 { Observable::z(seed as usize % c.n_qubits()) } else { Observable::weighted(terms) };
            for wrt in [Wrt::Trainable, Wrt::Inputs] {
                let req = GradientRequest { circuit: c, params: &params, inputs: &inputs, observable: &obs, wrt };
                let ps = param_shift_grad(&req).map_err(|e| format!("{name}: {e}"))?;
                let fd = finite_diff_grad(&req, 1e-5).map_err(|e| format!("{name}: {e}"))?;
                ensure(ps.len() == fd.len(), || format!("{name}: gradient lengths differ"))?;
                let d = ps.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                ensure(d < 1e-5, || format!("{name} seed {seed} {wrt:?}: max diff {d:e}"))?;
                worst = worst.max(d);
            }
        }
    }
    let elapsed = t0.elapsed();
    ensure(elapsed < Duration::from_secs(120), || format!("took {elapsed:?}"))?;
    Ok(format!("80 instances, max |shift - fd| {worst:.1e}, {:.2}s", elapsed.as_secs_f64()))
}

fn kernel_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x: Vec<Vec<f64>> = (0..30).map(|_| (0..4).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
    let fm = z_feature_map(4, 1).unwrap();
    let k = fidelity_kernel_matrix(&x, &fm).map_err(|e| e.to_string())?;
    let diag = (0..30).map(|i| (k.get(i, i) - 1.0).abs()).fold(0.0, f64::max);
    let asym = k.max_asymmetry();
    let lmin = k.min_eigenvalue();
    ensure(diag < 1e-10, || format!("diagonal off by {diag:e}"))?;
    ensure(asym < 1e-10, || format!("asymmetry {asym:e}"))?;
    ensure(lmin > -1e-8, || format!("min eigenvalue {lmin:e}"))?;
    let fm1 = z_feature_map(1, 1).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (a, b) = (rng.random_range(-PI..PI), rng.random_range(-PI..PI));
        let kv = fidelity_cross_kernel(&[vec![a]], &[vec![b]], &fm1).map_err(|e| e.to_string())?[0][0];
        worst = worst.max((kv - (a - b).cos().powi(2)).abs());
    }
    ensure(worst < 1e-10, || format!("1-qubit kernel off by {worst:e}"))?;
    let quarter = fidelity_cross_kernel(&[vec![0.3]], &[vec![0.3 + FRAC_PI_4]], &fm1).unwrap()[0][0];
    ensure((quarter - 0.5).abs() < 1e-12, || format!("cos^2(pi/4) gave {quarter}"))?;
    Ok(format!("diag {diag:.1e}, asym {asym:.1e}, lambda_min {lmin:.2e}, analytic {worst:.1e}"))
}

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Exact dual minimum by enumerating which coefficients sit at 0, at C, or free.
fn brute_force_dual(k: &KernelMatrix, y: &[i8], c: f64) -> f64 {
    let n = y.len();
    let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let q = |i: usize, j: usize| yf[i] * yf[j] * k.get(i, j);
    let mut best = f64::INFINITY;
    for code in 0..3usize.pow(n as u32) {
        let mut state = vec![0u8; n];
        let mut m = code;
        for s in state.iter_mut() {
            *s = (m % 3) as u8;
            m /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        if !free.is_empty() {
            let f = free.len();
            let mut a = vec![vec![0.0; f + 1]; f + 1];
            let mut rhs = vec![0.0; f + 1];
            for (r, &i) in free.iter().enumerate() {
                for (cc, &j) in free.iter().enumerate() {
                    a[r][cc] = q(i, j);
                }
                a[r][f] = yf[i];
                a[f][r] = yf[i];
                rhs[r] = 1.0 - (0..n).filter(|j| state[*j] == 1).map(|j| q(i, j) * c).sum::<f64>();
            }
            rhs[f] = -(0..n).filter(|j| state[*j] == 1).map(|j| yf[j] * c).sum::<f64>();
            let Some(sol) = solve(a, rhs) else { continue };
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r];
            }
        }
        let balance: f64 = alpha.iter().zip(&yf).map(|(a, y)| a * y).sum();
        if balance.abs() > 1e-9 || alpha.iter().any(|&a| a < -1e-12 || a > c + 1e-12) {
            continue;
        }
        best = best.min(dual_objective(k, y, &alpha));
    }
    best
}

fn kkt_residual(k: &KernelMatrix, y: &[i8], alpha: &[f64], bias: f64, c: f64) -> f64 {
    let n = y.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let f: f64 = (0..n).map(|j| alpha[j] * f64::from(y[j]) * k.get(i, j)).sum::<f64>() + bias;
        let m = f64::from(y[i]) * f;
        let r = if alpha[i] <= 1e-12 {
            (1.0 - m).max(0.0)
        } else if alpha[i] >= c - 1e-12 {
            (m - 1.0).max(0.0)
        } else {
            (m - 1.0).abs()
        };
        worst = worst.max(r);
    }
    worst
}

fn svm_correctness() -> Outcome {
    let mut worst_obj: f64 = 0.0;
    let mut worst_kkt: f64 = 0.0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
        let n = rng.random_range(2..=6);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..2).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        let mut y: Vec<i8> = (0..n).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
        y[0] = 1;
        y[1] = -1;
        let c = rng.random_range(0.1..10.0);
        let k = if seed % 2 == 0 {
            rbf_kernel_matrix(&x, rng.random_range(0.5..5.0)).unwrap()
        } else {
            fidelity_kernel_matrix(&x, &z_feature_map(2, 1).unwrap()).unwrap()
        };
        let model = svm_train(&k, &y, c, 1e-6).map_err(|e| e.to_string())?;
        let alpha = model.alphas();
        let got = dual_objective(&k, &y, &alpha);
        let want = brute_force_dual(&k, &y, c);
        let d = (got - want).abs();
        ensure(d < 1e-4, || format!("seed {seed}: smo {got} vs brute force {want}"))?;
        worst_obj = worst_obj.max(d);
        worst_kkt = worst_kkt.max(kkt_residual(&k, &y, &alpha, model.bias, c));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..20 {
        let centre = if i % 2 == 0 { 0.25 } else { 0.75 };
        x.push(vec![centre + rng.random_range(-0.1..0.1), centre + rng.random_range(-0.1..0.1)]);
        y.push(if i % 2 == 0 { -1i8 } else { 1 });
    }
    let c = 100.0;
    let k = rbf_kernel_matrix(&x, 4.0).unwrap();
    let model = svm_train(&k, &y, c, 1e-4).map_err(|e| e.to_string())?;
    let correct = (0..20).filter(|&i| svm_predict(&model, &k.row(i)).unwrap().0 == y[i]).count();
    ensure(correct == 20, || format!("separable set: {correct}/20 correct"))?;
    let sep_kkt = kkt_residual(&k, &y, &model.alphas(), model.bias, c);
    worst_kkt = worst_kkt.max(sep_kkt);
    ensure(worst_kkt < 1e-3, || format!("KKT residual {worst_kkt:e}"))?;
    Ok(format!("20 brute-force instances within {worst_obj:.1e}, separable accuracy 1.0, KKT residual {worst_kkt:.1e}"))
}

fn parameter_counts() -> Outcome {
    let gru = SequenceModel::gru(4, 16, 0).unwrap().count_params();
    let lstm = SequenceModel::lstm(4, 8, 0).unwrap().count_params();
    let sel = reuploading_sel(4, 4).unwrap().n_trainable();
    let ising = reuploading_ising(3, 2).unwrap().n_trainable();
    let qlstm = SequenceModel::qlstm(4, 4, 2, 0).unwrap().count_params();
    let qgru = SequenceModel::qgru(4, 4, 2, 0).unwrap().count_params();
    ensure(gru == 1073, || format!("GRU(4,16) = {gru}"))?;
    ensure(lstm == 457, || format!("LSTM(4,8) = {lstm}"))?;
    ensure(sel == 48, || format!("SEL(4,4) = {sel}"))?;
    ensure(ising == 21, || format!("Ising(3,2) = {ising}"))?;
    ensure(qlstm < lstm, || format!("QLSTM {qlstm} not below LSTM {lstm}"))?;
    ensure(qgru < gru, || format!("QGRU {qgru} not below GRU {gru}"))?;
    Ok(format!("GRU 1073, LSTM 457, SEL 48, Ising 21, QLSTM {qlstm} < 457, QGRU {qgru} < 1073"))
}

fn binning() -> Outcome {
    let b = BINARY_BOUNDARY_K;
    let got = bin_target(&[b - 1e-9, b, b + 1e-9], BinMode::Binary).unwrap();
    ensure(b == 298.0 && got == [0, 1, 1], || format!("binary {got:?}"))?;
    let [lo, hi] = TERNARY_BOUNDARIES_K;
    ensure(lo == 295.55 && hi == 306.57, || format!("ternary boundaries {lo}, {hi}"))?;
    let got = bin_target(&[lo - 1e-9, lo, lo + 1e-9, hi - 1e-9, hi, hi + 1e-9], BinMode::Ternary).unwrap();
    ensure(got == [0, 1, 1, 1, 2, 2], || format!("ternary {got:?}"))?;
    Ok("298 K; 295.55 K, 306.57 K with ±1e-9 K".into())
}

const TABLE_ONE: [(&str, f64); 30] = [
    ("skt", 0.972),
    ("tsr", 0.803),
    ("ssrdc", 0.783),
    ("cdir", 0.778),
    ("ssrd", 0.766),
    ("ssr", 0.759),
    ("p54.162", 0.689),
    ("vithe", 0.678),
    ("fdir", 0.668),
    ("vitoe", 0.542),
    ("u10", 0.173),
    ("hcc", 0.165),
    ("mcc", 0.164),
    ("u100", 0.136),
    ("cbh", 0.094),
    ("v100", 0.036),
    ("vithed", 0.005),
    ("viwvd", -0.001),
    ("cp", -0.012),
    ("v10", -0.012),
    ("tp", -0.025),
    ("mtpr", -0.025),
    ("lcc", -0.103),
    ("str", -0.133),
    ("v10n", -0.179),
    ("slhf", -0.531),
    ("e", -0.531),
    ("mer", -0.531),
    ("sshf", -0.561),
    ("sp", -0.806),
];

fn feature_selection() -> Outcome {
    let rep = CorrelationReport::from_values("t2m", &TABLE_ONE).map_err(|e| e.to_string())?;
    let mut a = select_features(&rep, Selection::Threshold(0.8)).map_err(|e| e.to_string())?;
    let mut b = select_features(&rep, Selection::Threshold(0.78)).map_err(|e| e.to_string())?;
    a.sort();
    b.sort();
    ensure(a == ["skt", "sp", "tsr"], || format!("tau 0.8 gave {a:?}"))?;
    ensure(b == ["skt", "sp", "ssrdc", "tsr"], || format!("tau 0.78 gave {b:?}"))?;
    Ok("{skt, sp, tsr} at 0.8; {skt, sp, tsr, ssrdc} at 0.78".into())
}

/// Random orthogonal matrix as a product of Householder reflections.
fn random_rotation(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _ in 0..n {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let vv: f64 = v.iter().map(|a| a * a).sum();
        for row in q.iter_mut() {
            let dot: f64 = row.iter().zip(&v).map(|(a, b)| a * b).sum();
            for (r, vi) in row.iter_mut().zip(&v) {
                *r -= 2.0 * dot / vv * vi;
            }
        }
    }
    q
}

fn cobyla_quadratics() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut most_iters = 0;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
        let n = 2 + (seed as usize % 5);
        let q = random_rotation(&mut rng, n);
        let eig: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let x_star: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = |x: &[f64]| {
            let d: Vec<f64> = x.iter().zip(&x_star).map(|(a, b)| a - b).collect();
            (0..n)
                .map(|k| {
                    let p: f64 = (0..n).map(|j| q[k][j] * d[j]).sum();
                    eig[k] * p * p
                })
                .sum::<f64>()
        };
        let res = cobyla_minimize(f, &vec![0.0; n], &CobylaOptions::default()).map_err(|e| e.to_string())?;
        let err = res.x.iter().zip(&x_star).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        ensure(res.iterations <= 150, || format!("seed {seed}: {} iterations", res.iterations))?;
        ensure(err < 1e-3, || format!("seed {seed} ({n}-D): |x - x*| = {err:e}"))?;
        worst = worst.max(err);
        most_iters = most_iters.max(res.iterations);
    }
    Ok(format!("10 quadratics in 2-6 dims, max |x - x*| {worst:.1e}, at most {most_iters} iterations"))
}

fn synth_config(model: ModelKind, task: Task) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(model, task, DataSource::Synth { seed: 7, n: 1000 });
    c.seed = Some(7);
    c
}

fn run_timed(cfg: &ExperimentConfig, out: &std::path::Path) -> Result<(ExperimentReport, Duration), String> {
    let t0 = Instant::now();
    let (_, report) = execute(cfg, out).map_err(|e| format!("{} {}: {e}", cfg.model, cfg.task))?;
    let dt = t0.elapsed();
    if dt > Duration::from_secs(600) {
        return Err(format!("{} {} took {dt:?}", cfg.model, cfg.task));
    }
    Ok((report, dt))
}

fn end_to_end() -> Outcome {
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    for (model, task, floor) in [
        (ModelKind::Qsvm, Task::Binary, 0.90),
        (ModelKind::QnnSel, Task::Binary, 0.90),
        (ModelKind::Vqc, Task::Ternary, 0.70),
        (ModelKind::QnnIsing, Task::Ternary, 0.70),
        (ModelKind::QnnSel, Task::Ternary, 0.70),
    ] {
        let (r, dt) = run_timed(&synth_config(model, task), out.path())?;
        let acc = r.metrics.test.accuracy.ok_or("missing test accuracy")?;
        ensure(acc >= floor, || format!("{model} {task} test accuracy {acc:.4} < {floor}"))?;
        lines.push(format!("{model} {task} {acc:.4} ({:.0}s)", dt.as_secs_f64()));
    }
    let (r, dt) = run_timed(&synth_config(ModelKind::Qlstm, Task::Regression), out.path())?;
    let mse = r.metrics.test.mse_scaled.ok_or("missing test mse")?;
    ensure(r.loss_history.len() == 50, || format!("qlstm trained {} epochs", r.loss_history.len()))?;
    ensure(mse < 0.1, || format!("qlstm scaled test mse {mse:.4}"))?;
    lines.push(format!("qlstm mse {mse:.4} ({:.0}s)", dt.as_secs_f64()));
    let (r, dt) = run_timed(&synth_config(ModelKind::Qgru, Task::Regression), out.path())?;
    let h = &r.loss_history;
    ensure(h.len() == 20, || format!("qgru trained {} epochs", h.len()))?;
    let head: f64 = h[..5].iter().sum::<f64>() / 5.0;
    let tail: f64 = h[15..].iter().sum::<f64>() / 5.0;
    ensure(tail < head && h[19] < h[0], || format!("qgru loss not decreasing: {h:?}"))?;
    lines.push(format!("qgru loss {:.4} -> {:.4} ({:.0}s)", h[0], h[19], dt.as_secs_f64()));
    Ok(lines.join(", "))
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut checked = Vec::new();
    for (model, task) in [
        (ModelKind::Qsvm, Task::Ternary),
        (ModelKind::QnnIsing, Task::Binary),
        (ModelKind::Vqc, Task::Binary),
        (ModelKind::Gru, Task::Regression),
        (ModelKind::Nn, Task::Regression),
    ] {
        let cfg = synth_config(model, task);
        let (da, _) = execute(&cfg, a.path()).map_err(|e| e.to_string())?;
        let (db, _) = execute(&cfg, b.path()).map_err(|e| e.to_string())?;
        for file in ["report.json", "predictions.csv"] {
            let x = fs::read(da.join(file)).map_err(|e| e.to_string())?;
            let y = fs::read(db.join(file)).map_err(|e| e.to_string())?;
            ensure(x == y, || format!("{model} {task}: {file} differs between runs"))?;
        }
        checked.push(format!("{model}/{task}"));
    }
    Ok(format!("byte-identical report.json and predictions.csv for {}", checked.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("simulator exactness", simulator_exactness),
        ("gradient oracle", gradient_oracle),
        ("kernel properties", kernel_properties),
        ("svm correctness", svm_correctness),
        ("parameter counts", parameter_counts),
        ("binning exactness", binning),
        ("feature selection", feature_selection),
        ("cobyla quadratics", cobyla_quadratics),
        ("end-to-end synthetic runs", end_to_end),
        ("determinism", determinism),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        match std::panic::catch_unwind(check) {
            Ok(Ok(detail)) => println!("PASS {n:>2} {name}: {detail}"),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL {n:>2} {name}: {why}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL {n:>2} {name}: panicked");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
