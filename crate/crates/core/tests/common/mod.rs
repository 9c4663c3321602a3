#![allow(dead_code)]

use std::time::Duration;

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use solvforge::descriptors::Bounds;
use solvforge::inverse::{MilpModel, ObjectiveSense, Sense, VarKind};
use solvforge::learn::{LinearModel, Predictor};

pub const FIG_SMILES: &str = "CCC1CCC(CCC(=O)O)C1";

pub fn fig_spec_text() -> String {
    std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/fig_spec.txt")).unwrap()
}

pub fn data_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

/// Replaces the `[TARGET]` range line of a spec.
pub fn with_range(spec: &str, lo: f64, hi: f64) -> String {
    let mut out: Vec<String> = spec.lines().filter(|l| !l.trim_start().starts_with("range")).map(str::to_string).collect();
    let at = out.iter().position(|l| l.trim() == "[TARGET]").unwrap();
    out.insert(at + 1, format!("range {lo:e} {hi:e}"));
    out.join("\n") + "\n"
}

pub fn linear(names: &[String], weights: &[f64], bias: f64, min: &[f64], max: &[f64]) -> Predictor {
    Predictor::Linear(LinearModel {
        names: names.to_vec(),
        weights: weights.to_vec(),
        bias,
        bounds: Bounds {
            min: min.to_vec(),
            max: max.to_vec(),
        },
        regularized: false,
    })
}

/// Translates the model for microlp. Returns `None` when it reports
/// infeasibility, otherwise the values in model variable order.
pub fn solve(m: &MilpModel) -> Option<Vec<f64>> {
    solve_outcome(m).unwrap()
}

pub fn solve_outcome(m: &MilpModel) -> Result<Option<Vec<f64>>, microlp::Error> {
    let dir = match m.sense {
        ObjectiveSense::Maximize => OptimizationDirection::Maximize,
        _ => OptimizationDirection::Minimize,
    };
    let mut obj = vec![0.0; m.vars.len()];
    if m.sense != ObjectiveSense::Feasibility {
        for &(v, c) in &m.objective {
            obj[v.0] += c;
        }
    }
    let mut p = Problem::new(dir);
    p.set_time_limit(Duration::from_secs(120));
    let vars: Vec<_> = m
        .vars
        .iter()
        .zip(&obj)
        .map(|(v, &c)| match v.kind {
            VarKind::Binary => p.add_binary_var(c),
            VarKind::Integer => p.add_integer_var(c, (v.lower as i32, v.upper as i32)),
            VarKind::Continuous => p.add_var(c, (v.lower, v.upper)),
        })
        .collect();
    for c in &m.constraints {
        let op = match c.sense {
            Sense::Le => ComparisonOp::Le,
            Sense::Ge => ComparisonOp::Ge,
            Sense::Eq => ComparisonOp::Eq,
        };
        let terms: Vec<_> = c.terms.iter().map(|&(v, k)| (vars[v.0], k)).collect();
        p.add_constraint(terms, op, c.rhs);
    }
    match p.solve() {
        Ok(out) => {
            let s = out.solution().expect("solve finished within the time limit");
            Ok(Some(vars.iter().map(|&v| s.var_value(v)).collect()))
        }
        Err(microlp::Error::Infeasible) => Ok(None),
        Err(e) => Err(e),
    }
}

/// `name value` lines for a solver result, as a solver output file would hold.
pub fn solution_text(m: &MilpModel, values: &[f64]) -> String {
    m.vars.iter().zip(values).map(|(v, x)| format!("{} {}\n", v.name, x)).collect()
}
