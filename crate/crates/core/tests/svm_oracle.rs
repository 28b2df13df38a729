use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use qweather_core::circuits::z_feature_map;
use qweather_core::qkernel::*;

/// Exact dual minimum by enumerating every active set (α_i at 0, at C, or free)
/// and solving the equality-constrained KKT system on the free block.
fn brute_force_dual(k: &KernelMatrix, y: &[i8], c: f64) -> f64 {
    let n = y.len();
    let q = DMatrix::from_fn(n, n, |i, j| (y[i] * y[j]) as f64 * k.get(i, j));
    let mut best = f64::INFINITY;
    for code in 0..3usize.pow(n as u32) {
        let mut status = vec![0u8; n];
        let mut t = code;
        for s in status.iter_mut() {
            *s = (t % 3) as u8;
            t /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| status[i] == 2).collect();
        let mut alpha = vec![0.0; n];
        for i in 0..n {
            if status[i] == 1 {
                alpha[i] = c;
            }
        }
        if !free.is_empty() {
            let f = free.len();
            let mut a = DMatrix::zeros(f + 1, f + 1);
            let mut b = DVector::zeros(f + 1);
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    a[(r, s)] = q[(i, j)];
                }
                a[(r, f)] = y[i] as f64;
                a[(f, r)] = y[i] as f64;
                b[r] = 1.0 - (0..n).filter(|j| status[*j] != 2).map(|j| q[(i, j)] * alpha[j]).sum::<f64>();
            }
            b[f] = -(0..n).filter(|j| status[*j] != 2).map(|j| y[j] as f64 * alpha[j]).sum::<f64>();
            let Some(sol) = a.lu().solve(&b) else { continue };
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r];
            }
        }
        let feasible = alpha.iter().all(|&v| (-1e-12..=c + 1e-12).contains(&v))
            && alpha.iter().zip(y).map(|(a, &yi)| a * yi as f64).sum::<f64>().abs() < 1e-9;
        if feasible {
            best = best.min(dual_objective(k, y, &alpha));
        }
    }
    best
}

fn points_and_labels() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<i8>)> {
    (3usize..=6).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 2), n),
            prop::collection::vec(prop::bool::ANY, n),
        )
            .prop_filter_map("both classes", |(x, b)| {
                let y: Vec<i8> = b.iter().map(|&v| if v { 1 } else { -1 }).collect();
                (y.contains(&1) && y.contains(&-1)).then_some((x, y))
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn smo_matches_brute_force(
        (x, y) in points_and_labels(),
        gamma in 0.2f64..3.0,
        c in prop::sample::select(vec![0.5, 1.0, 10.0]),
    ) {
        let k = rbf_kernel_matrix(&x, gamma).unwrap();
        let model = svm_train(&k, &y, c, 1e-3).unwrap();
        let alpha = model.alphas();
        let smo = dual_objective(&k, &y, &alpha);
        let exact = brute_force_dual(&k, &y, c);
        prop_assert!((smo - exact).abs() < 1e-4, "smo {smo} exact {exact}");
        prop_assert!(alpha.iter().all(|&a| (0.0..=c).contains(&a)));
        let balance: f64 = alpha.iter().zip(&y).map(|(a, &yi)| a * yi as f64).sum();
        prop_assert!(balance.abs() < 1e-8);
    }

    #[test]
    fn fidelity_kernel_is_permutation_equivariant(
        x in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 2), 2..6),
        seed in any::<u64>(),
    ) {
        let fm = z_feature_map(2, 1).unwrap();
        let n = x.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let xp: Vec<Vec<f64>> = perm.iter().map(|&i| x[i].clone()).collect();
        let k = fidelity_kernel_matrix(&x, &fm).unwrap();
        let kp = fidelity_kernel_matrix(&xp, &fm).unwrap();
        for a in 0..n {
            for b in 0..n {
                prop_assert!((kp.get(a, b) - k.get(perm[a], perm[b])).abs() < 1e-12);
            }
        }
        prop_assert!(k.validate().is_ok());
    }
}

fn ring(n: usize, radius: f64, phase: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let t = phase + i as f64 * std::f64::consts::TAU / n as f64;
            vec![radius * t.cos(), radius * t.sin()]
        })
        .collect()
}

#[test]
fn separable_twenty_points_fit_exactly() {
    let mut x = ring(10, 0.3, 0.0);
    x.extend(ring(10, 2.0, 0.1));
    let y: Vec<i8> = (0..20).map(|i| if i < 10 { 1 } else { -1 }).collect();
    let k = rbf_kernel_matrix(&x, 1.0).unwrap();
    let model = svm_train(&k, &y, 1000.0, 1e-3).unwrap();
    for i in 0..20 {
        let (label, d) = svm_predict(&model, &k.row(i)).unwrap();
        assert_eq!(label, y[i]);
        assert!(y[i] as f64 * d >= 1.0 - 1e-3, "margin {}", y[i] as f64 * d);
    }
    // a free support vector sits on its margin
    let alpha = model.alphas();
    let free = (0..20).find(|&i| alpha[i] > 1e-9 && alpha[i] < 1000.0 - 1e-9).unwrap();
    let (_, d) = svm_predict(&model, &k.row(free)).unwrap();
    assert!((y[free] as f64 * d - 1.0).abs() < 1e-3);
}

#[test]
fn ovr_three_clusters() {
    let centers = [(0.0, 0.0), (3.0, 0.0), (0.0, 3.0)];
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (c, &(cx, cy)) in centers.iter().enumerate() {
        for p in ring(6, 0.4, c as f64) {
            x.push(vec![cx + p[0], cy + p[1]]);
            y.push(c);
        }
    }
    let k = rbf_kernel_matrix(&x, 0.5).unwrap();
    let model = ovr_train(&k, &y, 1.0, 1e-3).unwrap();
    assert_eq!(model.models.len(), 3);
    for i in 0..x.len() {
        assert_eq!(ovr_predict(&model, &k.row(i)).unwrap(), y[i]);
    }
}

#[test]
fn ovr_with_two_classes_matches_binary() {
    let mut x = ring(5, 0.5, 0.0);
    x.extend(ring(5, 1.5, 0.3));
    x.push(vec![1.0, 0.0]);
    let y: Vec<usize> = (0..11).map(|i| usize::from(i >= 5)).collect();
    let yb: Vec<i8> = y.iter().map(|&v| if v == 1 { 1 } else { -1 }).collect();
    let k = rbf_kernel_matrix(&x, 1.0).unwrap();
    let ovr = ovr_train(&k, &y, 1.0, 1e-3).unwrap();
    let bin = svm_train(&k, &yb, 1.0, 1e-3).unwrap();
    let probe = ring(16, 1.0, 0.05);
    let rows = rbf_cross_kernel(&probe, &x, 1.0).unwrap();
    for r in rows.iter().chain((0..11).map(|i| k.row(i)).collect::<Vec<_>>().iter()) {
        let (l, _) = svm_predict(&bin, r).unwrap();
        assert_eq!(ovr_predict(&ovr, r).unwrap(), usize::from(l == 1));
    }
}

#[test]
fn sub_tolerance_noise_keeps_labels() {
    let source = KernelSource { descriptor: "hand".into(), fingerprint: "-".into() };
    let k = KernelMatrix::from_rows(vec![vec![1.0, 0.1], vec![0.1, 1.0]], source.clone()).unwrap();
    let noisy = KernelMatrix::from_rows(vec![vec![1.0, 0.1 + 4e-4], vec![0.1 + 4e-4, 1.0]], source).unwrap();
    let y = [1, -1];
    let a = svm_train(&k, &y, 1.0, 1e-3).unwrap();
    let b = svm_train(&noisy, &y, 1.0, 1e-3).unwrap();
    for i in 0..2 {
        assert_eq!(svm_predict(&a, &k.row(i)).unwrap().0, svm_predict(&b, &noisy.row(i)).unwrap().0);
    }
}
