//! Cross-checks exact GP inference against an independent dense-solve oracle
//! and the analytic likelihood gradient against finite differences.
//!
//! The oracle never touches the library's factorization: it inverts the noisy
//! Gram matrix by Gauss-Jordan elimination on plain `Vec<Vec<f64>>` and forms
//! the posterior and likelihood from the explicit inverse.

use gppf_core::gp::{
    fit, log_marginal_likelihood, mll_gradient, rbf_kernel, train_hyperparameters,
    KernelHyperparams, OptimizerConfig, TrainingSet,
};
use gppf_core::stream::SeededStream;
use gppf_core::Point2;

/// Gauss-Jordan inverse with partial pivoting. Returns the inverse and
/// `log|det|`, which for the positive definite matrices used here is
/// `log det`.
fn invert(mut a: Vec<Vec<f64>>) -> (Vec<Vec<f64>>, f64) {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut log_det = 0.0;
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .unwrap();
        a.swap(col, pivot_row);
        inv.swap(col, pivot_row);
        let p = a[col][col];
        assert!(p != 0.0, "singular matrix in oracle");
        log_det += p.abs().ln();
        for j in 0..n {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r][col];
            if f == 0.0 {
                continue;
            }
            for j in 0..n {
                a[r][j] -= f * a[col][j];
                inv[r][j] -= f * inv[col][j];
            }
        }
    }
    (inv, log_det)
}

fn noisy_gram(pts: &[Point2], hp: &KernelHyperparams) -> Vec<Vec<f64>> {
    let n = pts.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    rbf_kernel(pts[i], pts[j], hp)
                        + if i == j { hp.noise_variance() } else { 0.0 }
                })
                .collect()
        })
        .collect()
}

/// Posterior mean and variance from the explicit inverse.
fn oracle_posterior(
    pts: &[Point2],
    ys: &[f64],
    hp: &KernelHyperparams,
    queries: &[Point2],
) -> (Vec<f64>, Vec<f64>) {
    let n = pts.len();
    let (ainv, _) = invert(noisy_gram(pts, hp));
    let alpha: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| ainv[i][j] * ys[j]).sum())
        .collect();
    let mut means = Vec::new();
    let mut vars = Vec::new();
    for q in queries {
        let kstar: Vec<f64> = pts.iter().map(|p| rbf_kernel(*p, *q, hp)).collect();
        let mean: f64 = kstar.iter().zip(&alpha).map(|(k, a)| k * a).sum();
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += kstar[i] * ainv[i][j] * kstar[j];
            }
        }
        means.push(mean);
        vars.push(hp.signal_variance() - quad);
    }
    (means, vars)
}

fn oracle_mll(pts: &[Point2], ys: &[f64], hp: &KernelHyperparams) -> f64 {
    let n = pts.len();
    let (ainv, log_det) = invert(noisy_gram(pts, hp));
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += ys[i] * ainv[i][j] * ys[j];
        }
    }
    -0.5 * quad - 0.5 * log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
}

/// Deterministic scattered fixture; coordinates in roughly [-1.5, 1.5].
fn fixture(seed: u64, n: usize) -> (Vec<Point2>, Vec<f64>) {
    let mut s = SeededStream::new(seed);
    let pts: Vec<Point2> = (0..n)
        .map(|_| Point2::new(s.standard_normal() * 0.75, s.standard_normal() * 0.75))
        .collect();
    let ys: Vec<f64> = pts
        .iter()
        .map(|p| (3.0 * p.x1).sin() + (2.0 * p.x2).cos() + 0.1 * s.standard_normal())
        .collect();
    (pts, ys)
}

fn hp(l: f64, sf2: f64, sn2: f64) -> KernelHyperparams {
    KernelHyperparams::new(l, sf2, sn2).unwrap()
}

#[test]
fn predict_matches_dense_solve_oracle() {
    let cases = [
        (1_u64, 2_usize, hp(1.0, 1.0, 0.01)),
        (2, 5, hp(0.6, 1.5, 0.1)),
        (3, 9, hp(0.4, 0.8, 1e-3)),
        (4, 16, hp(1.3, 2.2, 0.05)),
    ];
    let queries: Vec<Point2> = (0..7)
        .map(|i| Point2::new(-1.2 + 0.4 * i as f64, 0.9 - 0.3 * i as f64))
        .collect();
    for (seed, n, h) in cases {
        let (pts, ys) = fixture(seed, n);
        let model = fit(&TrainingSet::new(pts.clone(), ys.clone()).unwrap(), &h).unwrap();
        assert_eq!(model.jitter(), 0.0, "fixture unexpectedly needed jitter");
        let post = model.predict(&queries);
        let (om, ov) = oracle_posterior(&pts, &ys, &h, &queries);
        for j in 0..queries.len() {
            assert!(
                (post.mean[j] - om[j]).abs() < 1e-9,
                "seed {seed} mean[{j}]: {} vs {}",
                post.mean[j],
                om[j]
            );
            assert!(
                (post.variance[j] - ov[j]).abs() < 1e-9,
                "seed {seed} var[{j}]: {} vs {}",
                post.variance[j],
                ov[j]
            );
        }
    }
}

#[test]
fn mll_matches_dense_solve_oracle() {
    let cases = [
        (11_u64, 1_usize, hp(1.0, 1.0, 0.0)),
        (12, 3, hp(0.5, 2.0, 0.2)),
        (13, 8, hp(0.9, 1.1, 0.01)),
        (14, 14, hp(1.6, 0.7, 0.08)),
    ];
    for (seed, n, h) in cases {
        let (pts, ys) = fixture(seed, n);
        let train = TrainingSet::new(pts.clone(), ys.clone()).unwrap();
        let mine = log_marginal_likelihood(&train, &h).unwrap();
        let oracle = oracle_mll(&pts, &ys, &h);
        assert!(
            (mine - oracle).abs() < 1e-9,
            "seed {seed}: {mine} vs {oracle}"
        );
    }
}

#[test]
fn gradient_matches_central_finite_differences() {
    let cases = [
        (21_u64, 1_usize, hp(1.0, 1.0, 0.5)),
        (22, 2, hp(0.7, 1.3, 0.05)),
        (23, 4, hp(1.1, 0.9, 0.2)),
        (24, 8, hp(0.5, 1.8, 0.01)),
        (25, 12, hp(1.4, 0.6, 0.1)),
        (26, 10, hp(0.8, 1.0, 1e-3)),
    ];
    let h_step = 1e-5;
    for (seed, n, h) in cases {
        let (pts, ys) = fixture(seed, n);
        let train = TrainingSet::new(pts, ys).unwrap();
        let g = mll_gradient(&train, &h).unwrap();
        let analytic = [
            g.d_log_lengthscale,
            g.d_log_signal_variance,
            g.d_log_noise_variance,
        ];
        let theta = h.to_log();
        for (p, &a) in analytic.iter().enumerate() {
            let mut up = theta;
            let mut dn = theta;
            up[p] += h_step;
            dn[p] -= h_step;
            let f_up =
                log_marginal_likelihood(&train, &KernelHyperparams::from_log(up)).unwrap();
            let f_dn =
                log_marginal_likelihood(&train, &KernelHyperparams::from_log(dn)).unwrap();
            let fd = (f_up - f_dn) / (2.0 * h_step);
            assert!(
                (a - fd).abs() <= 1e-6 * a.abs().max(1.0),
                "seed {seed} param {p}: analytic {a} vs fd {fd}"
            );
        }
    }
}

#[test]
fn gradient_of_pinned_zero_noise_is_exactly_zero() {
    let (pts, ys) = fixture(31, 6);
    let train = TrainingSet::new(pts, ys).unwrap();
    let g = mll_gradient(&train, &hp(0.9, 1.2, 0.0)).unwrap();
    assert_eq!(g.d_log_noise_variance, 0.0);
}

#[test]
fn more_observations_never_raise_posterior_variance() {
    let (pts, ys) = fixture(41, 20);
    let h = hp(0.8, 1.0, 0.05);
    let probes: Vec<Point2> = (0..5)
        .map(|i| Point2::new(-1.0 + 0.5 * i as f64, 0.25 * i as f64 - 0.5))
        .collect();
    let mut prev = vec![f64::INFINITY; probes.len()];
    for upto in [3, 6, 10, 15, 20] {
        let train =
            TrainingSet::new(pts[..upto].to_vec(), ys[..upto].to_vec()).unwrap();
        let post = fit(&train, &h).unwrap().predict(&probes);
        for j in 0..probes.len() {
            assert!(
                post.variance[j] <= prev[j] + 1e-10,
                "variance rose at probe {j} going to {upto} points: {} -> {}",
                prev[j],
                post.variance[j]
            );
            prev[j] = post.variance[j];
        }
    }
}

#[test]
fn gradient_is_small_at_a_trained_optimum() {
    let (pts, ys) = fixture(51, 10);
    let train = TrainingSet::new(pts, ys).unwrap();
    // The standard schedule gets close; two refinement passes at lower
    // learning rates settle into the optimum tightly enough to check the
    // first-order condition.
    let mut hp = KernelHyperparams::default();
    for (iters, lr) in [(100, 0.1), (400, 0.01), (800, 1e-3)] {
        let cfg = OptimizerConfig {
            iterations: iters,
            learning_rate: lr,
            ..OptimizerConfig::default()
        };
        hp = train_hyperparameters(&train, &hp, &cfg).unwrap();
    }
    let g = mll_gradient(&train, &hp).unwrap();
    let norm = g
        .d_log_lengthscale
        .abs()
        .max(g.d_log_signal_variance.abs())
        .max(g.d_log_noise_variance.abs());
    assert!(norm < 1e-3, "gradient norm {norm} at trained point");
}

#[test]
fn training_learns_a_plausible_lengthscale() {
    let mut s = SeededStream::new(61);
    let pts: Vec<Point2> = (0..30)
        .map(|_| Point2::new(s.standard_normal(), s.standard_normal()))
        .collect();
    let ys: Vec<f64> = pts.iter().map(|p| (3.0 * p.x1).sin() + (2.0 * p.x2).cos()).collect();
    let train = TrainingSet::new(pts, ys).unwrap();
    let init = KernelHyperparams::default();
    let trained = train_hyperparameters(&train, &init, &OptimizerConfig::default()).unwrap();
    let before = log_marginal_likelihood(&train, &init).unwrap();
    let after = log_marginal_likelihood(&train, &trained).unwrap();
    assert!(after > before + 1.0, "training barely moved: {before} -> {after}");
    let l = trained.lengthscale();
    assert!((0.1..3.0).contains(&l), "lengthscale {l} outside plausible band");
}
