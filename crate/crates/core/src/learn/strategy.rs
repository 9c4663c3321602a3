use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use super::{
    cross_validate, fit_ann, fit_lasso, fit_mlr, loov_r2, median, press_r2, AnnConfig, LassoConfig, LearnError,
    Predictor, Trainer,
};
use crate::descriptors::FeatureMatrix;
use crate::select::{default_lambda_grid, fsp_select, lasso_select, Evaluator};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Mlr,
    MlrLoo,
    FspMlr,
    FspMlrLoo,
    FspLooMlr,
    LlrAnn,
    LlrAnnLoo,
    LlrLlr,
}

impl Strategy {
    pub const ALL: [Strategy; 8] = [
        Strategy::Mlr,
        Strategy::MlrLoo,
        Strategy::FspMlr,
        Strategy::FspMlrLoo,
        Strategy::FspLooMlr,
        Strategy::LlrAnn,
        Strategy::LlrAnnLoo,
        Strategy::LlrLlr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Mlr => "MLR",
            Strategy::MlrLoo => "MLR-LOO",
            Strategy::FspMlr => "FSP-MLR",
            Strategy::FspMlrLoo => "FSP-MLR-LOO",
            Strategy::FspLooMlr => "FSP-LOO-MLR",
            Strategy::LlrAnn => "LLR-ANN",
            Strategy::LlrAnnLoo => "LLR-ANN-LOO",
            Strategy::LlrLlr => "LLR-LLR",
        }
    }

    fn uses_loov(self) -> bool {
        matches!(self, Strategy::MlrLoo | Strategy::FspMlrLoo | Strategy::FspLooMlr | Strategy::LlrAnnLoo)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = LearnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| LearnError::UnknownStrategy(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StrategyConfig {
    /// Number of descriptors for FSP; scanned over 5, 10, … when `None`.
    pub k: Option<usize>,
    /// Repetitions of 5-fold CV in the final evaluation.
    pub repeats: usize,
    /// Repetitions of 5-fold CV inside FSP scoring.
    pub select_repeats: usize,
    pub seed: u64,
    pub lambdas: Vec<f64>,
    pub lasso: LassoConfig,
    pub ann: AnnConfig,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            k: None,
            repeats: 10,
            select_repeats: 1,
            seed: 0,
            lambdas: default_lambda_grid(),
            lasso: LassoConfig {
                tol: 1e-6,
                max_sweeps: 5000,
                ..LassoConfig::new(0.0)
            },
            ann: AnnConfig::default(),
        }
    }
}

pub fn lambda_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum Evaluation {
    /// Test R² per fold, repeat-major.
    Cv(Vec<f64>),
    Loov(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub strategy: Strategy,
    pub seed: u64,
    pub evaluation: Evaluation,
    pub selected: Vec<String>,
    /// `(K, score)` pairs tried when K was scanned.
    pub k_scan: Vec<(usize, f64)>,
    pub lambda: Option<f64>,
}

impl EvalReport {
    /// Median CV score, or the LOOV score.
    pub fn score(&self) -> f64 {
        match &self.evaluation {
            Evaluation::Cv(s) => median(s),
            Evaluation::Loov(v) => *v,
        }
    }
}

pub struct StrategyOutcome {
    pub report: EvalReport,
    pub model: Predictor,
}

fn evaluate(x: &DMatrix<f64>, y: &DVector<f64>, trainer: &Trainer, loov: bool, mlr: bool, cfg: &StrategyConfig) -> Result<Evaluation, LearnError> {
    if loov {
        let v = if mlr { press_r2(x, y)? } else { loov_r2(x, y, trainer)? };
        Ok(Evaluation::Loov(v))
    } else {
        Ok(Evaluation::Cv(cross_validate(x, y, trainer, cfg.repeats, cfg.seed)?))
    }
}

fn score(e: &Evaluation) -> f64 {
    match e {
        Evaluation::Cv(s) => median(s),
        Evaluation::Loov(v) => *v,
    }
}

/// Runs a named strategy: descriptor selection, evaluation of the selected
/// set, and a final fit on every record.
pub fn run_strategy(fm: &FeatureMatrix, y: &DVector<f64>, strategy: Strategy, cfg: &StrategyConfig) -> Result<StrategyOutcome, LearnError> {
    if fm.rows() != y.len() {
        return Err(LearnError::Config("one target value per feature row is required".into()));
    }
    let loov = strategy.uses_loov();
    let mut k_scan = Vec::new();
    let mut lambda = None;
    let (names, evaluation, model) = match strategy {
        Strategy::Mlr | Strategy::MlrLoo => {
            let names = fm.names.clone();
            let trainer = |a: &DMatrix<f64>, b: &DVector<f64>| fit_mlr(a, b, &names).map(Predictor::Linear);
            let ev = evaluate(&fm.data, y, &trainer, loov, true, cfg)?;
            let model = trainer(&fm.data, y)?;
            (names, ev, model)
        }
        Strategy::FspMlr | Strategy::FspMlrLoo | Strategy::FspLooMlr => {
            let inner = if strategy == Strategy::FspLooMlr {
                Evaluator::Loov
            } else {
                Evaluator::Cv {
                    repeats: cfg.select_repeats,
                    seed: cfg.seed,
                }
            };
            let p = fm.names.len();
            let ks: Vec<usize> = match cfg.k {
                Some(k) => vec![k],
                None => {
                    let cap = p.min(fm.rows() / 3);
                    let grid: Vec<usize> = (1..).map(|i| 5 * i).take_while(|&k| k <= cap).collect();
                    if grid.is_empty() {
                        vec![cap.max(1)]
                    } else {
                        grid
                    }
                }
            };
            let kmax = *ks.last().unwrap();
            let trace = fsp_select(&fm.data, y, &fm.names, kmax, inner)?;
            let all = trace.names();
            let mut best: Option<(f64, Vec<String>, Evaluation)> = None;
            for &k in &ks {
                let names = all[..k].to_vec();
                let x = fm.select(&names);
                let trainer = |a: &DMatrix<f64>, b: &DVector<f64>| fit_mlr(a, b, &names).map(Predictor::Linear);
                let ev = evaluate(&x, y, &trainer, loov, true, cfg)?;
                let s = score(&ev);
                k_scan.push((k, s));
                if best.as_ref().is_none_or(|(b, _, _)| s > *b) {
                    best = Some((s, names, ev));
                }
            }
            let (_, names, ev) = best.unwrap();
            let model = Predictor::Linear(fit_mlr(&fm.select(&names), y, &names)?);
            (names, ev, model)
        }
        Strategy::LlrAnn | Strategy::LlrAnnLoo | Strategy::LlrLlr => {
            let (names, lam) = lasso_select(&fm.data, y, &fm.names, &cfg.lambdas, &cfg.lasso, cfg.seed)?;
            if names.is_empty() {
                return Err(LearnError::Selection("LASSO kept no descriptors".into()));
            }
            lambda = Some(lam);
            let x = fm.select(&names);
            let lasso_cfg = LassoConfig { lambda: lam, ..cfg.lasso };
            let ann_cfg = AnnConfig { seed: cfg.seed, ..cfg.ann.clone() };
            let trainer = |a: &DMatrix<f64>, b: &DVector<f64>| {
                if strategy == Strategy::LlrLlr {
                    fit_lasso(a, b, &names, &lasso_cfg).map(Predictor::Linear)
                } else {
                    fit_ann(a, b, &names, &ann_cfg).map(Predictor::Neural)
                }
            };
            let ev = evaluate(&x, y, &trainer, loov, false, cfg)?;
            let model = trainer(&x, y)?;
            (names, ev, model)
        }
    };
    Ok(StrategyOutcome {
        report: EvalReport {
            strategy,
            seed: cfg.seed,
            evaluation,
            selected: names,
            k_scan,
            lambda,
        },
        model,
    })
}

/// `strategy,seed,selected,metric,index,r2` rows: one per fold score, then the
/// median (CV) or the pooled score (LOOV), then any K-scan entries.
pub fn write_report_csv(r: &EvalReport) -> String {
    let mut out = String::from("strategy,seed,selected,metric,index,r2\n");
    let head = format!("{},{},{}", r.strategy, r.seed, r.selected.len());
    match &r.evaluation {
        Evaluation::Cv(scores) => {
            for (i, s) in scores.iter().enumerate() {
                out.push_str(&format!("{head},fold,{},{s:.10}\n", i + 1));
            }
            out.push_str(&format!("{head},median,,{:.10}\n", median(scores)));
        }
        Evaluation::Loov(v) => out.push_str(&format!("{head},loov,,{v:.10}\n")),
    }
    for (k, s) in &r.k_scan {
        out.push_str(&format!("{head},k_scan,{k},{s:.10}\n"));
    }
    if let Some(l) = r.lambda {
        out.push_str(&format!("{head},lambda,,{l:.10e}\n"));
    }
    out
}
