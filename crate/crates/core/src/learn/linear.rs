use nalgebra::{DMatrix, DVector};

use super::LearnError;
use crate::descriptors::Bounds;

/// Affine predictor over min-max normalized descriptors.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    pub names: Vec<String>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub bounds: Bounds,
    /// True when the normal equations needed diagonal jitter.
    pub regularized: bool,
}

impl LinearModel {
    /// Prediction for one raw descriptor row.
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.bias
            + self
                .weights
                .iter()
                .enumerate()
                .map(|(j, w)| w * self.bounds.normalize_value(j, x[j]))
                .sum::<f64>()
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_fn(x.nrows(), |i, _| {
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            self.predict_row(&row)
        })
    }

    /// Intercept and weights on the raw descriptor scale.
    pub fn raw_coefficients(&self) -> (f64, Vec<f64>) {
        let mut b = self.bias;
        let w: Vec<f64> = (0..self.weights.len())
            .map(|j| {
                let s = self.bounds.scale(j);
                b -= self.weights[j] * self.bounds.min[j] * s;
                self.weights[j] * s
            })
            .collect();
        (b, w)
    }
}

fn check_shapes(x: &DMatrix<f64>, y: &DVector<f64>, names: &[String]) -> Result<(), LearnError> {
    if x.nrows() == 0 {
        return Err(LearnError::Empty);
    }
    assert_eq!(x.nrows(), y.len(), "one target per row");
    assert_eq!(x.ncols(), names.len(), "one name per column");
    Ok(())
}

/// Solves `a w = rhs` for symmetric positive semidefinite `a`, adding
/// 1e-10·trace/dim to the diagonal (growing tenfold) when Cholesky fails.
pub(crate) fn solve_spd(a: &DMatrix<f64>, rhs: &DVector<f64>) -> (DVector<f64>, bool) {
    if a.nrows() == 0 {
        return (DVector::zeros(0), false);
    }
    if let Some(ch) = a.clone().cholesky() {
        let w = ch.solve(rhs);
        if w.iter().all(|v| v.is_finite()) {
            return (w, false);
        }
    }
    let dim = a.nrows() as f64;
    let mut eps = 1e-10 * (a.trace() / dim).max(f64::MIN_POSITIVE);
    loop {
        let mut j = a.clone();
        for i in 0..a.nrows() {
            j[(i, i)] += eps;
        }
        if let Some(ch) = j.cholesky() {
            return (ch.solve(rhs), true);
        }
        eps *= 10.0;
    }
}

/// Least squares with intercept on normalized columns, via centered normal
/// equations. Constant columns get weight 0.
pub fn fit_mlr(x: &DMatrix<f64>, y: &DVector<f64>, names: &[String]) -> Result<LinearModel, LearnError> {
    check_shapes(x, y, names)?;
    let bounds = Bounds::fit(x, None);
    let z = bounds.normalize(x);
    let n = x.nrows() as f64;
    let live: Vec<usize> = (0..x.ncols()).filter(|&j| bounds.scale(j) > 0.0).collect();
    let y_mean = y.mean();
    let means: Vec<f64> = live.iter().map(|&j| z.column(j).sum() / n).collect();
    let zc = DMatrix::from_fn(x.nrows(), live.len(), |i, k| z[(i, live[k])] - means[k]);
    let yc = y.add_scalar(-y_mean);
    let gram = zc.tr_mul(&zc);
    let rhs = zc.tr_mul(&yc);
    let (w_live, regularized) = solve_spd(&gram, &rhs);
    let mut weights = vec![0.0; x.ncols()];
    let mut bias = y_mean;
    for (k, &j) in live.iter().enumerate() {
        weights[j] = w_live[k];
        bias -= w_live[k] * means[k];
    }
    Ok(LinearModel {
        names: names.to_vec(),
        weights,
        bias,
        bounds,
        regularized,
    })
}

/// Treatment of the intercept in the LASSO objective.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InterceptMode {
    /// `λ|b|` is part of the objective.
    #[default]
    Penalized,
    Unpenalized,
    /// Fixed at zero.
    None,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LassoConfig {
    pub lambda: f64,
    pub intercept: InterceptMode,
    pub max_sweeps: usize,
    /// Stop once every KKT residual is below this.
    pub tol: f64,
}

impl LassoConfig {
    pub fn new(lambda: f64) -> Self {
        LassoConfig {
            lambda,
            intercept: InterceptMode::Penalized,
            max_sweeps: 100_000,
            tol: 1e-9,
        }
    }
}

fn soft(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// (1/2n)·Σ r² + λ(Σ|w| + |b|) on the normalized design.
pub fn lasso_objective(z: &DMatrix<f64>, y: &DVector<f64>, w: &[f64], b: f64, cfg: &LassoConfig) -> f64 {
    let n = z.nrows() as f64;
    let r = y - z * DVector::from_column_slice(w) - DVector::from_element(z.nrows(), b);
    let pen_b = if cfg.intercept == InterceptMode::Penalized { b.abs() } else { 0.0 };
    r.norm_squared() / (2.0 * n) + cfg.lambda * (w.iter().map(|v| v.abs()).sum::<f64>() + pen_b)
}

/// Largest violation of the subgradient optimality conditions.
pub fn lasso_kkt_residual(z: &DMatrix<f64>, y: &DVector<f64>, w: &[f64], b: f64, cfg: &LassoConfig) -> f64 {
    let n = z.nrows() as f64;
    let r = y - z * DVector::from_column_slice(w) - DVector::from_element(z.nrows(), b);
    let kkt = |g: f64, v: f64, lam: f64| {
        if v != 0.0 {
            (g + lam * v.signum()).abs()
        } else {
            (g.abs() - lam).max(0.0)
        }
    };
    let mut worst: f64 = 0.0;
    for j in 0..z.ncols() {
        let g = -z.column(j).dot(&r) / n;
        worst = worst.max(kkt(g, w[j], cfg.lambda));
    }
    let gb = -r.sum() / n;
    match cfg.intercept {
        InterceptMode::Penalized => worst = worst.max(kkt(gb, b, cfg.lambda)),
        InterceptMode::Unpenalized => worst = worst.max(gb.abs()),
        InterceptMode::None => {}
    }
    worst
}

/// Coordinate descent on the normalized design. Returns weights, bias and the
/// objective after each sweep.
pub(crate) fn lasso_cd(z: &DMatrix<f64>, y: &DVector<f64>, cfg: &LassoConfig) -> Result<(Vec<f64>, f64, Vec<f64>), LearnError> {
    let n = z.nrows() as f64;
    let p = z.ncols();
    let sq: Vec<f64> = (0..p).map(|j| z.column(j).norm_squared() / n).collect();
    let mut w = vec![0.0; p];
    let mut b = 0.0;
    let mut r = y.clone();
    let mut trace = Vec::new();
    for _ in 0..cfg.max_sweeps {
        for j in 0..p {
            if sq[j] == 0.0 {
                continue;
            }
            let col = z.column(j);
            let rho = col.dot(&r) / n + sq[j] * w[j];
            let new = soft(rho, cfg.lambda) / sq[j];
            if new != w[j] {
                r.axpy(w[j] - new, &col, 1.0);
                w[j] = new;
            }
        }
        let rho_b = r.sum() / n + b;
        let new_b = match cfg.intercept {
            InterceptMode::Penalized => soft(rho_b, cfg.lambda),
            InterceptMode::Unpenalized => rho_b,
            InterceptMode::None => 0.0,
        };
        if new_b != b {
            r.add_scalar_mut(b - new_b);
            b = new_b;
        }
        trace.push(lasso_objective(z, y, &w, b, cfg));
        if lasso_kkt_residual(z, y, &w, b, cfg) <= cfg.tol {
            return Ok((w, b, trace));
        }
    }
    Err(LearnError::NoConvergence {
        objective: *trace.last().unwrap_or(&f64::NAN),
    })
}

pub fn fit_lasso(x: &DMatrix<f64>, y: &DVector<f64>, names: &[String], cfg: &LassoConfig) -> Result<LinearModel, LearnError> {
    check_shapes(x, y, names)?;
    if cfg.lambda < 0.0 || !cfg.lambda.is_finite() {
        return Err(LearnError::Config(format!("lambda must be finite and nonnegative, got {}", cfg.lambda)));
    }
    let bounds = Bounds::fit(x, None);
    let z = bounds.normalize(x);
    let (weights, bias, _) = lasso_cd(&z, y, cfg)?;
    Ok(LinearModel {
        names: names.to_vec(),
        weights,
        bias,
        bounds,
        regularized: false,
    })
}

/// Leave-one-out residuals of MLR from the hat-matrix diagonal. Points with
/// leverage 1 are refitted directly.
pub fn press_residuals(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>, LearnError> {
    let n = x.nrows();
    if n < 3 {
        return Err(LearnError::TooFewRecords { need: 3, got: n });
    }
    let names = vec![String::new(); x.ncols()];
    let full = fit_mlr(x, y, &names)?;
    let bounds = &full.bounds;
    let z = bounds.normalize(x);
    let mut design = DMatrix::from_element(n, x.ncols() + 1, 1.0);
    design.view_mut((0, 1), (n, x.ncols())).copy_from(&z);
    let svd = design.clone().svd(true, false);
    let u = svd.u.as_ref().expect("requested U");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > smax * 1e-10 * (n as f64))
        .collect();
    let fitted = full.predict(x);
    let mut out = DVector::zeros(n);
    for i in 0..n {
        let h: f64 = keep.iter().map(|&k| u[(i, k)] * u[(i, k)]).sum();
        if 1.0 - h > 1e-8 {
            out[i] = (y[i] - fitted[i]) / (1.0 - h);
        } else {
            let rest: Vec<usize> = (0..n).filter(|&k| k != i).collect();
            let xr = x.select_rows(&rest);
            let yr = DVector::from_iterator(n - 1, rest.iter().map(|&k| y[k]));
            let m = fit_mlr(&xr, &yr, &names)?;
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            out[i] = y[i] - m.predict_row(&row);
        }
    }
    Ok(out)
}
