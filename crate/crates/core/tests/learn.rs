use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use solvforge::descriptors::FeatureMatrix;
use solvforge::learn::*;
use solvforge::select::{default_lambda_grid, lasso_select};

fn names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("x{j}")).collect()
}

fn random_problem(rng: &mut ChaCha8Rng, n: usize, p: usize) -> (DMatrix<f64>, DVector<f64>) {
    let x = DMatrix::from_fn(n, p, |_, _| rng.gen_range(-3.0..5.0));
    let w: Vec<f64> = (0..p).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let y = DVector::from_fn(n, |i, _| 0.7 + (0..p).map(|j| w[j] * x[(i, j)]).sum::<f64>() + rng.gen_range(-1.0..1.0));
    (x, y)
}

/// Least squares with intercept through the SVD pseudo-inverse of [1 X].
fn pinv_solution(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let mut a = DMatrix::from_element(x.nrows(), x.ncols() + 1, 1.0);
    a.view_mut((0, 1), (x.nrows(), x.ncols())).copy_from(x);
    a.pseudo_inverse(1e-12).unwrap() * y
}

#[test]
fn mlr_matches_pseudo_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let (x, y) = random_problem(&mut rng, 20, 5);
        let m = fit_mlr(&x, &y, &names(5)).unwrap();
        let (b, w) = m.raw_coefficients();
        let oracle = pinv_solution(&x, &y);
        assert!((b - oracle[0]).abs() < 1e-8);
        for j in 0..5 {
            assert!((w[j] - oracle[j + 1]).abs() < 1e-8);
        }
    }
}

#[test]
fn mlr_exact_and_constant_cases() {
    let x = DMatrix::from_fn(8, 2, |i, j| (i * (j + 2)) as f64 + (i % 3) as f64);
    let y = DVector::from_fn(8, |i, _| 3.0 * x[(i, 0)] - x[(i, 1)] + 2.0);
    let m = fit_mlr(&x, &y, &names(2)).unwrap();
    assert!((r2(&m.predict(&x), &y).unwrap() - 1.0).abs() < 1e-12);

    let c = DMatrix::from_element(6, 1, 4.0);
    let y = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    let m = fit_mlr(&c, &y, &names(1)).unwrap();
    assert_eq!(m.weights, vec![0.0]);
    assert!((m.bias - 3.5).abs() < 1e-12);
    assert!(fit_mlr(&DMatrix::zeros(0, 1), &DVector::zeros(0), &names(1)).is_err());
}

#[test]
fn collinear_columns_use_jitter() {
    let x = DMatrix::from_fn(10, 2, |i, j| (i as f64) * (j + 1) as f64);
    let y = DVector::from_fn(10, |i, _| i as f64);
    let m = fit_mlr(&x, &y, &names(2)).unwrap();
    assert!(m.regularized);
    assert!(r2(&m.predict(&x), &y).unwrap() > 0.999999);
}

#[test]
fn lasso_at_zero_is_mlr() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let (x, y) = random_problem(&mut rng, 20, 5);
        let a = fit_mlr(&x, &y, &names(5)).unwrap();
        let b = fit_lasso(&x, &y, &names(5), &LassoConfig::new(0.0)).unwrap();
        assert!((a.bias - b.bias).abs() < 1e-6);
        for j in 0..5 {
            assert!((a.weights[j] - b.weights[j]).abs() < 1e-6);
        }
    }
}

#[test]
fn lasso_kkt_and_monotone_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for mode in [InterceptMode::Penalized, InterceptMode::Unpenalized, InterceptMode::None] {
        for _ in 0..20 {
            let (x, y) = random_problem(&mut rng, 20, 5);
            let cfg = LassoConfig {
                intercept: mode,
                ..LassoConfig::new(0.01)
            };
            let m = fit_lasso(&x, &y, &names(5), &cfg).unwrap();
            let z = m.bounds.normalize(&x);
            assert!(lasso_kkt_residual(&z, &y, &m.weights, m.bias, &cfg) <= 1e-6);
        }
    }
}

#[test]
fn lasso_large_lambda_and_soft_threshold() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (x, y) = random_problem(&mut rng, 30, 3);
    let m = fit_lasso(&x, &y, &names(3), &LassoConfig::new(1e6)).unwrap();
    assert!(m.weights.iter().all(|&w| w == 0.0));
    assert_eq!(m.bias, 0.0);

    // One feature, no intercept: w = S(Σ z·y, λn) / Σ z².
    let (x, y) = random_problem(&mut rng, 25, 1);
    for lambda in [0.0, 0.05, 0.3, 2.0, 50.0] {
        let cfg = LassoConfig {
            intercept: InterceptMode::None,
            ..LassoConfig::new(lambda)
        };
        let m = fit_lasso(&x, &y, &names(1), &cfg).unwrap();
        let z = m.bounds.normalize(&x);
        let corr = z.column(0).dot(&y);
        let n = 25.0;
        let t = lambda * n;
        let soft = corr.signum() * (corr.abs() - t).max(0.0);
        let expect = soft / z.column(0).norm_squared();
        assert!((m.weights[0] - expect).abs() < 1e-9, "λ={lambda}");
    }
}

#[test]
fn press_equals_naive_refit() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let nm = names(5);
    let trainer = |a: &DMatrix<f64>, b: &DVector<f64>| fit_mlr(a, b, &nm).map(Predictor::Linear);
    for _ in 0..20 {
        let (x, y) = random_problem(&mut rng, 30, 5);
        let fast = press_r2(&x, &y).unwrap();
        let slow = loov_r2(&x, &y, &trainer).unwrap();
        assert!((fast - slow).abs() < 1e-8);
    }
}

#[test]
fn loov_trivial_cases() {
    let x = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 4.0]);
    let y = DVector::from_vec(vec![2.0, 4.0, 8.0]);
    assert!((press_r2(&x, &y).unwrap() - 1.0).abs() < 1e-12);
    let failing = |_: &DMatrix<f64>, _: &DVector<f64>| -> Result<Predictor, LearnError> { Err(LearnError::Diverged) };
    let e = loov_r2(&x, &y, &failing).unwrap_err();
    assert!(matches!(e, LearnError::Fold { index: 0, .. }));
}

#[test]
fn r2_cases() {
    let y = DVector::from_vec(vec![1.0, 2.0, 3.0, 6.0]);
    assert_eq!(r2(&y, &y).unwrap(), 1.0);
    assert_eq!(r2(&DVector::from_element(4, 3.0), &y).unwrap(), 0.0);
    assert!(r2(&DVector::from_element(4, 30.0), &y).unwrap() < 0.0);
    assert_eq!(r2(&y, &DVector::from_element(4, 1.0)), Err(LearnError::ConstantTarget));
    let perm = [2, 0, 3, 1];
    let p = DVector::from_vec(vec![1.5, 2.0, 2.0, 5.0]);
    let a = r2(&p, &y).unwrap();
    let b = r2(&DVector::from_fn(4, |i, _| p[perm[i]]), &DVector::from_fn(4, |i, _| y[perm[i]])).unwrap();
    assert!((a - b).abs() < 1e-15);
}

#[test]
fn cross_validation_shapes_and_determinism() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let (x, y) = random_problem(&mut rng, 10, 2);
    let nm = names(2);
    let trainer = |a: &DMatrix<f64>, b: &DVector<f64>| fit_mlr(a, b, &nm).map(Predictor::Linear);
    assert_eq!(cross_validate(&x, &y, &trainer, 1, 3).unwrap().len(), 5);
    let (x, y) = random_problem(&mut rng, 40, 2);
    let a = cross_validate(&x, &y, &trainer, 10, 3).unwrap();
    assert_eq!(a.len(), 50);
    assert_eq!(a, cross_validate(&x, &y, &trainer, 10, 3).unwrap());
    let (x9, y9) = random_problem(&mut rng, 9, 2);
    assert!(matches!(
        cross_validate(&x9, &y9, &trainer, 1, 0),
        Err(LearnError::TooFewRecords { need: 10, got: 9 })
    ));
    let folds = fold_partition(23, 5, 0);
    let mut all: Vec<usize> = folds.concat();
    all.sort();
    assert_eq!(all, (0..23).collect::<Vec<_>>());
    assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
}

#[test]
fn ann_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let net = Network::init(&[3, 4, 1], &mut rng);
    let x = DMatrix::from_fn(5, 3, |_, _| rng.gen_range(0.0..1.0));
    let y = DVector::from_fn(5, |_, _| rng.gen_range(-1.0..1.0));
    let (_, grad) = net.loss_and_gradient(&x, &y);
    let p = net.params();
    let h = 1e-6;
    for k in 0..p.len() {
        let mut a = net.clone();
        let mut b = net.clone();
        let mut pa = p.clone();
        let mut pb = p.clone();
        pa[k] += h;
        pb[k] -= h;
        a.set_params(&pa);
        b.set_params(&pb);
        let fd = (a.loss_and_gradient(&x, &y).0 - b.loss_and_gradient(&x, &y).0) / (2.0 * h);
        let scale = fd.abs().max(grad[k].abs()).max(1e-8);
        assert!((fd - grad[k]).abs() / scale < 1e-4 || (fd - grad[k]).abs() < 1e-9, "param {k}: {fd} vs {}", grad[k]);
    }
    assert_eq!(relu(-1.5), 0.0);
    assert_eq!(relu(0.0), 0.0);
    assert_eq!(relu(2.5), 2.5);
}

#[test]
fn ann_fits_affine_target() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let x = DMatrix::from_fn(40, 2, |_, _| rng.gen_range(0.0..1.0));
    let y = DVector::from_fn(40, |i, _| 2.0 * x[(i, 0)] - x[(i, 1)] + 0.5);
    let cfg = AnnConfig {
        hidden: vec![8],
        epochs: 5000,
        ..AnnConfig::default()
    };
    let m = fit_ann(&x, &y, &names(2), &cfg).unwrap();
    assert!(r2(&m.predict(&x), &y).unwrap() >= 0.999);
    assert!(m.loss_trace.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(m, fit_ann(&x, &y, &names(2), &cfg).unwrap());
    let bad = AnnConfig { hidden: vec![], ..cfg };
    assert!(matches!(fit_ann(&x, &y, &names(2), &bad), Err(LearnError::Config(_))));
}

fn tiny_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize, noise: f64) -> (FeatureMatrix, DVector<f64>) {
    let data = DMatrix::from_fn(n, p, |_, _| rng.gen_range(0.0..4.0));
    let y = DVector::from_fn(n, |i, _| 1.0 + data[(i, 0)] - 0.5 * data[(i, 1)] + noise * rng.gen_range(-1.0..1.0));
    let fm = FeatureMatrix {
        ids: (0..n).map(|i| format!("r{i}")).collect(),
        names: names(p),
        data,
    };
    (fm, y)
}

#[test]
fn strategies_run_end_to_end() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let (fm, y) = tiny_matrix(&mut rng, 30, 4, 0.0);
    let cfg = StrategyConfig {
        k: Some(2),
        repeats: 2,
        ann: AnnConfig {
            epochs: 300,
            ..AnnConfig::default()
        },
        ..StrategyConfig::default()
    };
    let out = run_strategy(&fm, &y, Strategy::Mlr, &cfg).unwrap();
    assert!((out.report.score() - 1.0).abs() < 1e-9);
    for s in Strategy::ALL {
        let out = run_strategy(&fm, &y, s, &cfg).unwrap();
        assert_eq!(out.report.strategy, s);
        assert!(out.report.score().is_finite(), "{s}");
        let csv = write_report_csv(&out.report);
        assert!(csv.starts_with("strategy,seed,selected,metric,index,r2\n"));
        assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
    }
    let fsp = run_strategy(&fm, &y, Strategy::FspLooMlr, &cfg).unwrap();
    assert_eq!(fsp.report.selected, vec!["x0".to_string(), "x1".to_string()]);
    assert!(matches!(fsp.report.evaluation, Evaluation::Loov(_)));
    assert!(matches!(run_strategy(&fm, &y, Strategy::LlrLlr, &cfg).unwrap().model, Predictor::Linear(_)));
    assert!(matches!(run_strategy(&fm, &y, Strategy::LlrAnn, &cfg).unwrap().model, Predictor::Neural(_)));
    assert!("nope".parse::<Strategy>().is_err());
}

#[test]
fn k_scan_uses_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let (fm, y) = tiny_matrix(&mut rng, 40, 12, 0.3);
    let cfg = StrategyConfig {
        repeats: 1,
        ..StrategyConfig::default()
    };
    let out = run_strategy(&fm, &y, Strategy::FspMlr, &cfg).unwrap();
    let ks: Vec<usize> = out.report.k_scan.iter().map(|(k, _)| *k).collect();
    assert_eq!(ks, vec![5, 10]);
}

#[test]
fn lasso_selection_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let x = DMatrix::from_fn(40, 2, |_, _| rng.gen_range(0.0..1.0));
    let y = DVector::from_fn(40, |i, _| 3.0 * x[(i, 0)]);
    let base = LassoConfig::new(0.0);
    let (kept, _) = lasso_select(&x, &y, &names(2), &[1e6], &base, 0).unwrap();
    assert!(kept.is_empty());
    let (kept, _) = lasso_select(&x, &y, &names(2), &[0.0], &base, 0).unwrap();
    assert_eq!(kept.len(), 2);
    // Feature 1 is independent of y: its correlation with the residual of
    // feature 0 is far below a moderate λ, so it is soft-thresholded away.
    let cfg = LassoConfig {
        intercept: InterceptMode::Unpenalized,
        ..base
    };
    let (kept, _) = lasso_select(&x, &y, &names(2), &[0.05], &cfg, 0).unwrap();
    assert_eq!(kept, vec!["x0".to_string()]);
    assert!(lasso_select(&x, &y, &names(2), &[], &base, 0).is_err());
    let (kept, lam) = lasso_select(&x, &y, &names(2), &default_lambda_grid(), &cfg, 0).unwrap();
    assert!(kept.contains(&"x0".to_string()));
    assert!(default_lambda_grid().contains(&lam));
}
