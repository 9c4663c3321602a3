use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{linear::press_residuals, r2, LearnError, Predictor};

/// Fits a predictor on raw descriptor rows.
pub type Trainer<'a> = dyn Fn(&DMatrix<f64>, &DVector<f64>) -> Result<Predictor, LearnError> + Sync + 'a;

/// Test-index blocks of a random 5-fold partition. Repeat `r` draws from
/// stream `r` of the seeded generator.
pub fn fold_partition(n: usize, seed: u64, repeat: usize) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(repeat as u64);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    (0..5).map(|k| perm[k * n / 5..(k + 1) * n / 5].to_vec()).collect()
}

fn split(x: &DMatrix<f64>, y: &DVector<f64>, rows: &[usize]) -> (DMatrix<f64>, DVector<f64>) {
    (x.select_rows(rows), DVector::from_iterator(rows.len(), rows.iter().map(|&i| y[i])))
}

/// Test R² of every fold of `repeats` random 5-fold partitions, ordered by
/// repeat then fold.
pub fn cross_validate(x: &DMatrix<f64>, y: &DVector<f64>, trainer: &Trainer, repeats: usize, seed: u64) -> Result<Vec<f64>, LearnError> {
    let n = x.nrows();
    if n < 10 {
        return Err(LearnError::TooFewRecords { need: 10, got: n });
    }
    let jobs: Vec<(usize, Vec<usize>)> = (0..repeats)
        .flat_map(|r| fold_partition(n, seed, r).into_iter().enumerate().map(move |(k, t)| (r * 5 + k, t)))
        .collect();
    jobs.par_iter()
        .map(|(index, test)| {
            let mut is_test = vec![false; n];
            for &i in test {
                is_test[i] = true;
            }
            let train: Vec<usize> = (0..n).filter(|&i| !is_test[i]).collect();
            let (xt, yt) = split(x, y, &train);
            let (xv, yv) = split(x, y, test);
            trainer(&xt, &yt)
                .and_then(|m| r2(&m.predict(&xv), &yv))
                .map_err(|e| LearnError::Fold {
                    index: *index,
                    source: Box::new(e),
                })
        })
        .collect()
}

/// Pooled leave-one-out score 1 − Σ(a_i − η^i(x_i))² / Σ(a_i − ā)² by refitting
/// without each record in turn.
pub fn loov_r2(x: &DMatrix<f64>, y: &DVector<f64>, trainer: &Trainer) -> Result<f64, LearnError> {
    let n = x.nrows();
    if n < 3 {
        return Err(LearnError::TooFewRecords { need: 3, got: n });
    }
    let preds: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let rest: Vec<usize> = (0..n).filter(|&k| k != i).collect();
            let (xt, yt) = split(x, y, &rest);
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            trainer(&xt, &yt)
                .map(|m| m.predict_row(&row))
                .map_err(|e| LearnError::Fold {
                    index: i,
                    source: Box::new(e),
                })
        })
        .collect::<Result<_, _>>()?;
    r2(&DVector::from_vec(preds), y)
}

/// Pooled leave-one-out score of MLR through PRESS residuals.
pub fn press_r2(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<f64, LearnError> {
    let e = press_residuals(x, y)?;
    let pred = y - e;
    r2(&pred, y)
}
