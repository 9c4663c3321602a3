//! Descriptor selection: greedy forward stepwise search scored by MLR, and
//! LASSO-based selection.

mod fsp;

pub use fsp::{evaluate_subset, fsp_select, fsp_select_naive};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::learn::{fit_lasso, fold_partition, median, r2, LassoConfig, LearnError};

/// Score `h` used to rank descriptor subsets; every variant wraps MLR.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Evaluator {
    TrainingR2,
    /// Median test R² over `repeats` seeded 5-fold partitions, fixed for
    /// the whole run.
    Cv { repeats: usize, seed: u64 },
    /// Pooled leave-one-out R².
    Loov,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SelectionTrace {
    pub rounds: Vec<(String, f64)>,
}

impl SelectionTrace {
    pub fn names(&self) -> Vec<String> {
        self.rounds.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn scores(&self) -> Vec<f64> {
        self.rounds.iter().map(|(_, s)| *s).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("round,descriptor,score\n");
        for (i, (n, s)) in self.rounds.iter().enumerate() {
            out.push_str(&format!("{},{},{:.10}\n", i + 1, n, s));
        }
        out
    }
}

/// Log-spaced LASSO grid from 1e-5 to 1.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..=10).map(|i| 10f64.powf(-5.0 + 0.5 * i as f64)).collect()
}

/// Chooses λ from `grid` by 5-fold CV (median test R², ties to the larger λ),
/// refits on all rows and returns the names with nonzero weight and the λ.
/// Grid points where coordinate descent fails to converge are skipped.
pub fn lasso_select(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    names: &[String],
    grid: &[f64],
    base: &LassoConfig,
    seed: u64,
) -> Result<(Vec<String>, f64), LearnError> {
    if grid.is_empty() {
        return Err(LearnError::Config("empty lambda grid".into()));
    }
    let n = x.nrows();
    let lambda = if grid.len() == 1 {
        grid[0]
    } else {
        if n < 10 {
            return Err(LearnError::TooFewRecords { need: 10, got: n });
        }
        let folds = fold_partition(n, seed, 0);
        let scores: Vec<f64> = grid
            .par_iter()
            .map(|&lam| {
                let cfg = LassoConfig { lambda: lam, ..*base };
                let mut s = Vec::with_capacity(5);
                for test in &folds {
                    let train: Vec<usize> = (0..n).filter(|i| !test.contains(i)).collect();
                    let xt = x.select_rows(&train);
                    let yt = DVector::from_iterator(train.len(), train.iter().map(|&i| y[i]));
                    let xv = x.select_rows(test);
                    let yv = DVector::from_iterator(test.len(), test.iter().map(|&i| y[i]));
                    match fit_lasso(&xt, &yt, names, &cfg).and_then(|m| r2(&m.predict(&xv), &yv)) {
                        Ok(v) => s.push(v),
                        Err(_) => return f64::NEG_INFINITY,
                    }
                }
                median(&s)
            })
            .collect();
        let mut best = 0;
        for i in 1..grid.len() {
            let better = scores[i] > scores[best] || (scores[i] == scores[best] && grid[i] > grid[best]);
            if better {
                best = i;
            }
        }
        if scores[best] == f64::NEG_INFINITY {
            return Err(LearnError::Selection("LASSO failed at every grid point".into()));
        }
        grid[best]
    };
    let m = fit_lasso(x, y, names, &LassoConfig { lambda, ..*base })?;
    let chosen = names
        .iter()
        .zip(&m.weights)
        .filter(|(_, w)| **w != 0.0)
        .map(|(n, _)| n.clone())
        .collect();
    Ok((chosen, lambda))
}
