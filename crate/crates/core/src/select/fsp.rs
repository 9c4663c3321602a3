use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{Evaluator, SelectionTrace};
use crate::learn::{cross_validate, fit_mlr, fold_partition, loov_r2, median, r2, LearnError, Predictor, Trainer};

/// Relative size below which a column counts as linearly dependent on the
/// columns already chosen.
const DEPENDENT: f64 = 1e-10;

fn check(x: &DMatrix<f64>, k: usize, evaluator: Evaluator) -> Result<(), LearnError> {
    if k == 0 || k > x.ncols() {
        return Err(LearnError::Config(format!("K must lie in 1..={}, got {k}", x.ncols())));
    }
    let need = match evaluator {
        Evaluator::TrainingR2 => 2,
        Evaluator::Cv { .. } => 10,
        Evaluator::Loov => 3,
    };
    if x.nrows() < need {
        return Err(LearnError::TooFewRecords { need, got: x.nrows() });
    }
    Ok(())
}

/// Scores an MLR on the given columns from scratch.
pub fn evaluate_subset(x: &DMatrix<f64>, y: &DVector<f64>, cols: &[usize], evaluator: Evaluator) -> Result<f64, LearnError> {
    let xs = x.select_columns(cols);
    let names = vec![String::new(); cols.len()];
    let mlr = |a: &DMatrix<f64>, b: &DVector<f64>| fit_mlr(a, b, &names).map(Predictor::Linear);
    let trainer: &Trainer = &mlr;
    match evaluator {
        Evaluator::TrainingR2 => r2(&trainer(&xs, y)?.predict(&xs), y),
        Evaluator::Cv { repeats, seed } => Ok(median(&cross_validate(&xs, y, trainer, repeats, seed)?)),
        Evaluator::Loov => loov_r2(&xs, y, trainer),
    }
}

fn argmax(names: &[String], candidates: &[usize], scores: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..candidates.len() {
        let (s, b) = (scores[i], scores[best]);
        if s > b || (s == b && names[candidates[i]] < names[candidates[best]]) {
            best = i;
        }
    }
    best
}

/// Greedy forward selection with every candidate refitted from scratch.
pub fn fsp_select_naive(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    names: &[String],
    k: usize,
    evaluator: Evaluator,
) -> Result<SelectionTrace, LearnError> {
    check(x, k, evaluator)?;
    let mut chosen: Vec<usize> = Vec::new();
    let mut trace = SelectionTrace::default();
    for _ in 0..k {
        let candidates: Vec<usize> = (0..x.ncols()).filter(|j| !chosen.contains(j)).collect();
        let scores: Vec<f64> = candidates
            .par_iter()
            .map(|&d| {
                let mut cols = chosen.clone();
                cols.push(d);
                evaluate_subset(x, y, &cols, evaluator)
            })
            .collect::<Result<_, _>>()?;
        let b = argmax(names, &candidates, &scores);
        chosen.push(candidates[b]);
        trace.rounds.push((names[candidates[b]].clone(), scores[b]));
    }
    Ok(trace)
}

/// Train/test statistics of one split, centred on the training means, with a
/// Cholesky factor of the training Gram matrix over the active columns.
struct Split {
    /// Centred training Gram matrix and cross products with y.
    gram: DMatrix<f64>,
    xty: DVector<f64>,
    /// Test-side quadratic form pieces: UᵀU, Uᵀw, wᵀw with U = X_v − μ and
    /// w = y_v − ȳ.
    utu: DMatrix<f64>,
    utw: DVector<f64>,
    wtw: f64,
    tss: f64,
    active: Vec<usize>,
    chol: Vec<Vec<f64>>,
    /// L⁻¹ xty restricted to the active columns.
    z: Vec<f64>,
    score: f64,
}

fn centred_rows(x: &DMatrix<f64>, rows: &[usize], mu: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), x.ncols(), |i, j| x[(rows[i], j)] - mu[j])
}

impl Split {
    fn new(x: &DMatrix<f64>, y: &DVector<f64>, train: &[usize], test: &[usize]) -> Split {
        let p = x.ncols();
        let nt = train.len() as f64;
        let mu: Vec<f64> = (0..p).map(|j| train.iter().map(|&i| x[(i, j)]).sum::<f64>() / nt).collect();
        let ybar = train.iter().map(|&i| y[i]).sum::<f64>() / nt;
        let xt = centred_rows(x, train, &mu);
        let yt = DVector::from_iterator(train.len(), train.iter().map(|&i| y[i] - ybar));
        let u = centred_rows(x, test, &mu);
        let w = DVector::from_iterator(test.len(), test.iter().map(|&i| y[i] - ybar));
        let yv_mean = test.iter().map(|&i| y[i]).sum::<f64>() / test.len() as f64;
        let tss = test.iter().map(|&i| (y[i] - yv_mean).powi(2)).sum();
        let wtw = w.norm_squared();
        let mut s = Split {
            gram: xt.tr_mul(&xt),
            xty: xt.tr_mul(&yt),
            utu: u.tr_mul(&u),
            utw: u.tr_mul(&w),
            wtw,
            tss,
            active: Vec::new(),
            chol: Vec::new(),
            z: Vec::new(),
            score: 0.0,
        };
        s.score = 1.0 - wtw / tss;
        s
    }

    /// Forward substitution L⁻¹ g[active, d].
    fn solve_lower(&self, d: usize) -> Vec<f64> {
        let k = self.active.len();
        let mut l = vec![0.0; k];
        for i in 0..k {
            let mut v = self.gram[(self.active[i], d)];
            for j in 0..i {
                v -= self.chol[i][j] * l[j];
            }
            l[i] = v / self.chol[i][i];
        }
        l
    }

    /// Factor row for appending `d`, or `None` when `d` is dependent.
    fn border(&self, d: usize) -> Option<(Vec<f64>, f64, f64)> {
        let gdd = self.gram[(d, d)];
        if gdd <= 0.0 {
            return None;
        }
        let l = self.solve_lower(d);
        let delta = gdd - l.iter().map(|v| v * v).sum::<f64>();
        if delta <= DEPENDENT * gdd {
            return None;
        }
        let diag = delta.sqrt();
        let zd = (self.xty[d] - l.iter().zip(&self.z).map(|(a, b)| a * b).sum::<f64>()) / diag;
        Some((l, diag, zd))
    }

    /// Test R² after appending `d` (unchanged when `d` is dependent).
    fn score_with(&self, d: usize) -> f64 {
        let Some((l, diag, zd)) = self.border(d) else {
            return self.score;
        };
        let k = self.active.len();
        let mut cols = self.active.clone();
        cols.push(d);
        let mut beta = vec![0.0; k + 1];
        beta[k] = zd / diag;
        for i in (0..k).rev() {
            let mut v = self.z[i] - l[i] * beta[k];
            for j in i + 1..k {
                v -= self.chol[j][i] * beta[j];
            }
            beta[i] = v / self.chol[i][i];
        }
        self.test_score(&cols, &beta)
    }

    fn test_score(&self, cols: &[usize], beta: &[f64]) -> f64 {
        let mut lin = 0.0;
        let mut quad = 0.0;
        for (a, &ca) in cols.iter().enumerate() {
            lin += beta[a] * self.utw[ca];
            for (b, &cb) in cols.iter().enumerate() {
                quad += beta[a] * beta[b] * self.utu[(ca, cb)];
            }
        }
        1.0 - (self.wtw - 2.0 * lin + quad) / self.tss
    }

    fn push(&mut self, d: usize) {
        if let Some((l, diag, zd)) = self.border(d) {
            self.score = self.score_with(d);
            let mut row = l;
            row.push(diag);
            self.chol.push(row);
            self.z.push(zd);
            self.active.push(d);
        }
    }
}

/// Leave-one-out state: orthonormal basis of the centred active columns,
/// residuals and leverages.
struct Press {
    xc: DMatrix<f64>,
    basis: Vec<DVector<f64>>,
    resid: DVector<f64>,
    lev: DVector<f64>,
    tss: f64,
    chosen: Vec<usize>,
    score: f64,
}

impl Press {
    fn new(x: &DMatrix<f64>, y: &DVector<f64>) -> Press {
        let n = x.nrows();
        let mean = y.mean();
        let means: Vec<f64> = (0..x.ncols()).map(|j| x.column(j).mean()).collect();
        let xc = DMatrix::from_fn(n, x.ncols(), |i, j| x[(i, j)] - means[j]);
        let resid = y.add_scalar(-mean);
        let tss = resid.norm_squared();
        let lev = DVector::from_element(n, 1.0 / n as f64);
        let mut p = Press {
            xc,
            basis: Vec::new(),
            resid,
            lev,
            tss,
            chosen: Vec::new(),
            score: 0.0,
        };
        p.score = p.score_of(&p.resid, &p.lev, &[], x, y);
        p
    }

    fn direction(&self, d: usize) -> Option<DVector<f64>> {
        let col = self.xc.column(d).into_owned();
        let norm2 = col.norm_squared();
        if norm2 == 0.0 {
            return None;
        }
        let mut r = col;
        for _ in 0..2 {
            for q in &self.basis {
                let c = q.dot(&r);
                r.axpy(-c, q, 1.0);
            }
        }
        let delta = r.norm_squared();
        if delta <= DEPENDENT * norm2 {
            return None;
        }
        Some(r / delta.sqrt())
    }

    fn score_of(&self, resid: &DVector<f64>, lev: &DVector<f64>, cols: &[usize], x: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
        let mut press = 0.0;
        for i in 0..resid.len() {
            let gap = 1.0 - lev[i];
            let e = if gap > 1e-8 {
                resid[i] / gap
            } else {
                naive_loo_residual(x, y, cols, i)
            };
            press += e * e;
        }
        1.0 - press / self.tss
    }

    fn score_with(&self, d: usize, x: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
        let Some(q) = self.direction(d) else {
            return self.score;
        };
        let c = q.dot(&self.resid);
        let resid = &self.resid - &q * c;
        let lev = &self.lev + q.map(|v| v * v);
        let mut cols = self.chosen.clone();
        cols.push(d);
        self.score_of(&resid, &lev, &cols, x, y)
    }

    fn push(&mut self, d: usize, x: &DMatrix<f64>, y: &DVector<f64>) {
        self.score = self.score_with(d, x, y);
        self.chosen.push(d);
        if let Some(q) = self.direction(d) {
            let c = q.dot(&self.resid);
            self.resid -= &q * c;
            self.lev += q.map(|v| v * v);
            self.basis.push(q);
        }
    }
}

/// Residual at `i` of an MLR refitted without row `i`.
fn naive_loo_residual(x: &DMatrix<f64>, y: &DVector<f64>, cols: &[usize], i: usize) -> f64 {
    let n = x.nrows();
    let rest: Vec<usize> = (0..n).filter(|&k| k != i).collect();
    let xs = x.select_columns(cols);
    let xr = xs.select_rows(&rest);
    let yr = DVector::from_iterator(n - 1, rest.iter().map(|&k| y[k]));
    let names = vec![String::new(); cols.len()];
    let m = fit_mlr(&xr, &yr, &names).expect("n - 1 >= 2 rows");
    let row: Vec<f64> = xs.row(i).iter().copied().collect();
    y[i] - m.predict_row(&row)
}

enum State {
    Splits(Vec<Split>),
    Press(Press),
}

impl State {
    fn score_with(&self, d: usize, x: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
        match self {
            State::Splits(s) => {
                let v: Vec<f64> = s.iter().map(|s| s.score_with(d)).collect();
                median(&v)
            }
            State::Press(p) => p.score_with(d, x, y),
        }
    }

    fn push(&mut self, d: usize, x: &DMatrix<f64>, y: &DVector<f64>) {
        match self {
            State::Splits(s) => s.iter_mut().for_each(|s| s.push(d)),
            State::Press(p) => p.push(d, x, y),
        }
    }
}

/// Forward stepwise selection: starting from the empty set, repeatedly add
/// the descriptor that maximizes the evaluator until `k` are chosen. Ties go
/// to the lexicographically smallest name. Candidate fits extend a running
/// factorization instead of refitting.
pub fn fsp_select(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    names: &[String],
    k: usize,
    evaluator: Evaluator,
) -> Result<SelectionTrace, LearnError> {
    check(x, k, evaluator)?;
    assert_eq!(names.len(), x.ncols(), "one name per column");
    let n = x.nrows();
    let mut state = match evaluator {
        Evaluator::TrainingR2 => {
            let all: Vec<usize> = (0..n).collect();
            let s = Split::new(x, y, &all, &all);
            if s.tss == 0.0 {
                return Err(LearnError::ConstantTarget);
            }
            State::Splits(vec![s])
        }
        Evaluator::Cv { repeats, seed } => {
            let mut splits = Vec::new();
            for r in 0..repeats.max(1) {
                for test in fold_partition(n, seed, r) {
                    let train: Vec<usize> = (0..n).filter(|i| !test.contains(i)).collect();
                    let s = Split::new(x, y, &train, &test);
                    if s.tss == 0.0 {
                        return Err(LearnError::ConstantTarget);
                    }
                    splits.push(s);
                }
            }
            State::Splits(splits)
        }
        Evaluator::Loov => {
            let p = Press::new(x, y);
            if p.tss == 0.0 {
                return Err(LearnError::ConstantTarget);
            }
            State::Press(p)
        }
    };
    let mut chosen = vec![false; x.ncols()];
    let mut trace = SelectionTrace::default();
    for _ in 0..k {
        let candidates: Vec<usize> = (0..x.ncols()).filter(|&j| !chosen[j]).collect();
        let scores: Vec<f64> = candidates.par_iter().map(|&d| state.score_with(d, x, y)).collect();
        let b = argmax(names, &candidates, &scores);
        let d = candidates[b];
        state.push(d, x, y);
        chosen[d] = true;
        trace.rounds.push((names[d].clone(), scores[b]));
    }
    Ok(trace)
}
