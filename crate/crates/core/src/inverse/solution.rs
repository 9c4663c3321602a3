use std::collections::HashMap;

use super::milp::{InverseModel, ReluEncoding, VarId, VarKind};
use super::{Choice, InverseError};

const TOL: f64 = 1e-6;

/// One value per model variable, indexed by [`VarId`].
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub values: Vec<f64>,
}

impl Assignment {
    pub fn get(&self, v: VarId) -> f64 {
        self.values[v.0]
    }
}

/// Fills product, hidden-unit and switch variables from the structural ones.
/// Values already present (`Some`) are kept.
fn complete(model: &InverseModel, vals: &mut [Option<f64>]) -> Vec<f64> {
    vals[model.milp.one().0] = Some(1.0);
    let mut out: Vec<f64> = vals.iter().map(|v| v.unwrap_or(0.0)).collect();
    for (y, factors) in &model.products {
        if vals[y.0].is_none() {
            out[y.0] = factors.iter().map(|f| f.eval(&out).round().clamp(0.0, 1.0)).product();
        }
    }
    for unit in &model.hidden {
        if let ReluEncoding::BigM { h, switch } = unit.encoding {
            let z = unit.pre.eval(&out);
            if vals[h.0].is_none() {
                out[h.0] = z.max(0.0);
            }
            if vals[switch.0].is_none() {
                out[switch.0] = if out[h.0] > 0.0 { 1.0 } else { 0.0 };
            }
        }
    }
    out
}

/// Reads `name value` lines. Every structural variable must be present;
/// others are derived when absent. Values must lie within their bounds and,
/// for integer variables, within 1e-6 of an integer (then rounded).
pub fn ingest_solution(model: &InverseModel, text: &str) -> Result<Assignment, InverseError> {
    let index: HashMap<&str, usize> = model.milp.vars.iter().enumerate().map(|(i, v)| (v.name.as_str(), i)).collect();
    let mut vals: Vec<Option<f64>> = vec![None; model.milp.vars.len()];
    for (i, line) in text.lines().enumerate() {
        let s = line.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let bad = |msg: String| InverseError::Solution { line: i + 1, msg };
        let toks: Vec<&str> = s.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(bad("expected `name value`".into()));
        }
        let &k = index.get(toks[0]).ok_or_else(|| bad(format!("unknown variable `{}`", toks[0])))?;
        let x: f64 = toks[1].parse().map_err(|_| bad(format!("bad value `{}`", toks[1])))?;
        if vals[k].is_some() {
            return Err(bad(format!("`{}` given twice", toks[0])));
        }
        let var = &model.milp.vars[k];
        let off = |x: f64| InverseError::BadValue {
            name: var.name.clone(),
            value: x,
        };
        if !x.is_finite() || x < var.lower - TOL || x > var.upper + TOL {
            return Err(off(x));
        }
        let x = if var.kind == VarKind::Continuous {
            x.clamp(var.lower, var.upper)
        } else {
            let r = x.round();
            if (x - r).abs() > TOL {
                return Err(off(x));
            }
            r
        };
        vals[k] = Some(x);
    }
    if let Some(v) = model.milp.vars.iter().zip(&vals).find(|(v, x)| v.role.is_structural() && x.is_none()) {
        return Err(InverseError::MissingVariable(v.0.name.clone()));
    }
    Ok(Assignment {
        values: complete(model, &mut vals),
    })
}

/// The assignment that realizes `choice` in `model`.
pub fn encode_assignment(model: &InverseModel, choice: &Choice) -> Result<Assignment, InverseError> {
    let n = model.milp.vars.len();
    let mut vals: Vec<Option<f64>> = vec![None; n];
    for (k, vars) in model.slots.iter().enumerate() {
        for (i, v) in vars.iter().enumerate() {
            vals[v.0] = Some(if choice.path_len[k] > i + 1 { 1.0 } else { 0.0 });
        }
    }
    for (v, vars) in model.fringe.iter().enumerate() {
        for &(_, x) in vars {
            vals[x.0] = Some(0.0);
        }
        if let Some(entry) = choice.fringe[v] {
            let &(_, x) = vars.iter().find(|(i, _)| *i == entry).ok_or_else(|| {
                InverseError::Decode(format!("tree `{}` has no variable at slot {}", model.spec.catalog[entry].id, model.layout.vertices[v].label))
            })?;
            vals[x.0] = Some(1.0);
        }
    }
    for (s, ids) in model.mult.iter().enumerate() {
        for (k, x) in ids.iter().enumerate() {
            vals[x.0] = Some(if choice.mult[s] == Some(k as u8 + 1) { 1.0 } else { 0.0 });
        }
    }
    Ok(Assignment {
        values: complete(model, &mut vals),
    })
}

pub fn write_assignment(model: &InverseModel, a: &Assignment) -> String {
    let mut out = String::new();
    for (v, x) in model.milp.vars.iter().zip(&a.values) {
        out.push_str(&format!("{} {}\n", v.name, x));
    }
    out
}
