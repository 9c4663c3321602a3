//! Regression models (MLR, LASSO, ReLU networks), scoring and evaluation
//! protocols.

mod ann;
mod cv;
mod linear;
mod model_io;
mod strategy;

pub use ann::{fit_ann, relu, AnnConfig, Network, NeuralModel};
pub use cv::{cross_validate, fold_partition, loov_r2, press_r2, Trainer};
pub use linear::{
    fit_lasso, fit_mlr, lasso_kkt_residual, lasso_objective, press_residuals, InterceptMode, LassoConfig, LinearModel,
};
pub use model_io::{read_model, write_model, ModelFile};
pub use strategy::{lambda_grid, run_strategy, write_report_csv, EvalReport, Evaluation, Strategy, StrategyConfig, StrategyOutcome};

use nalgebra::{DMatrix, DVector};

use crate::descriptors::Bounds;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LearnError {
    #[error("no training rows")]
    Empty,
    #[error("need at least {need} records, got {got}")]
    TooFewRecords { need: usize, got: usize },
    #[error("R² is undefined for a constant target")]
    ConstantTarget,
    #[error("coordinate descent did not converge (objective {objective})")]
    NoConvergence { objective: f64 },
    #[error("training diverged to a non-finite loss")]
    Diverged,
    #[error("{0}")]
    Config(String),
    #[error("fold {index}: {source}")]
    Fold { index: usize, source: Box<LearnError> },
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error("model file line {line}: {msg}")]
    ModelFormat { line: usize, msg: String },
    #[error("selection: {0}")]
    Selection(String),
}

/// A trained prediction function over raw descriptor values.
#[derive(Clone, Debug, PartialEq)]
pub enum Predictor {
    Linear(LinearModel),
    Neural(NeuralModel),
}

impl Predictor {
    pub fn names(&self) -> &[String] {
        match self {
            Predictor::Linear(m) => &m.names,
            Predictor::Neural(m) => &m.names,
        }
    }

    pub fn bounds(&self) -> &Bounds {
        match self {
            Predictor::Linear(m) => &m.bounds,
            Predictor::Neural(m) => &m.bounds,
        }
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        match self {
            Predictor::Linear(m) => m.predict_row(x),
            Predictor::Neural(m) => m.predict_row(x),
        }
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> DVector<f64> {
        match self {
            Predictor::Linear(m) => m.predict(x),
            Predictor::Neural(m) => m.predict(x),
        }
    }

    /// Prediction for a named feature vector.
    pub fn predict_features(&self, f: &crate::descriptors::FeatureVector) -> f64 {
        let row: Vec<f64> = self.names().iter().map(|n| f.get(n)).collect();
        self.predict_row(&row)
    }
}

/// 1 − Σ(a − â)² / Σ(a − ā)².
pub fn r2(pred: &DVector<f64>, y: &DVector<f64>) -> Result<f64, LearnError> {
    if y.len() < 2 {
        return Err(LearnError::TooFewRecords { need: 2, got: y.len() });
    }
    let mean = y.mean();
    let tot = y.iter().map(|a| (a - mean).powi(2)).sum::<f64>();
    if tot == 0.0 {
        return Err(LearnError::ConstantTarget);
    }
    let res = y.iter().zip(pred.iter()).map(|(a, p)| (a - p).powi(2)).sum::<f64>();
    Ok(1.0 - res / tot)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
