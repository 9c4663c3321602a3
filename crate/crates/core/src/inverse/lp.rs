use std::collections::BTreeMap;
use std::fmt::Write;

use super::milp::{MilpModel, ObjectiveSense, Sense, VarId, VarKind};
use super::InverseError;

const WIDTH: usize = 100;

/// A program read back from LP text, with variables referred to by name.
#[derive(Clone, Debug, PartialEq)]
pub struct LpProblem {
    pub maximize: bool,
    pub objective: Vec<(String, f64)>,
    pub constraints: Vec<LpConstraint>,
    /// `(kind, lower, upper)` per variable.
    pub vars: BTreeMap<String, (VarKind, f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpConstraint {
    pub name: String,
    pub terms: Vec<(String, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LpProblem {
    /// The view of `m` that [`parse_lp`] should return for [`emit_lp`]'s output.
    pub fn from_model(m: &MilpModel) -> LpProblem {
        let named = |t: &[(VarId, f64)]| -> Vec<(String, f64)> {
            t.iter().filter(|(_, c)| *c != 0.0).map(|&(v, c)| (m.vars[v.0].name.clone(), c)).collect()
        };
        LpProblem {
            maximize: m.sense == ObjectiveSense::Maximize,
            objective: named(&m.objective),
            constraints: m
                .constraints
                .iter()
                .map(|c| LpConstraint {
                    name: c.name.clone(),
                    terms: named(&c.terms),
                    sense: c.sense,
                    rhs: c.rhs,
                })
                .collect(),
            vars: m.vars.iter().map(|v| (v.name.clone(), (v.kind, v.lower, v.upper))).collect(),
        }
    }
}

fn num(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

/// Writes ` name: + 2 x - 1 y` wrapped onto indented continuation lines.
fn write_terms(out: &mut String, head: &str, terms: &[(String, f64)], tail: &str) {
    let mut line = format!(" {head}");
    let mut pieces: Vec<String> = terms
        .iter()
        .map(|(n, c)| format!("{} {} {}", if *c < 0.0 { "-" } else { "+" }, num(c.abs()), n))
        .collect();
    if pieces.is_empty() {
        pieces.push("0 k_one".into());
    }
    pieces.push(tail.to_string());
    for p in pieces {
        if p.is_empty() {
            continue;
        }
        if line.len() + p.len() + 1 > WIDTH && line.len() > head.len() + 1 {
            out.push_str(&line);
            out.push('\n');
            line = "   ".into();
        }
        line.push(' ');
        line.push_str(&p);
    }
    out.push_str(&line);
    out.push('\n');
}

/// CPLEX LP text for `m`. A feasibility model is written with a zero
/// objective. Every non-binary variable gets an explicit bound line.
pub fn emit_lp(m: &MilpModel) -> String {
    let p = LpProblem::from_model(m);
    let mut out = String::from("\\ solvforge inverse model\n");
    out.push_str(if p.maximize { "Maximize\n" } else { "Minimize\n" });
    write_terms(&mut out, "obj:", &p.objective, "");
    out.push_str("Subject To\n");
    for c in &p.constraints {
        let op = match c.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        write_terms(&mut out, &format!("{}:", c.name), &c.terms, &format!("{op} {}", num(c.rhs)));
    }
    out.push_str("Bounds\n");
    for v in &m.vars {
        if v.kind == VarKind::Binary {
            continue;
        }
        let (lo, hi) = (v.lower, v.upper);
        let _ = if lo == hi {
            writeln!(out, " {} = {}", v.name, num(lo))
        } else if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            writeln!(out, " {} free", v.name)
        } else if hi == f64::INFINITY {
            writeln!(out, " {} >= {}", v.name, num(lo))
        } else {
            writeln!(out, " {} <= {} <= {}", num(lo), v.name, num(hi))
        };
    }
    for (title, kind) in [("General", VarKind::Integer), ("Binary", VarKind::Binary)] {
        let names: Vec<&str> = m.vars.iter().filter(|v| v.kind == kind).map(|v| v.name.as_str()).collect();
        if names.is_empty() {
            continue;
        }
        out.push_str(title);
        out.push('\n');
        for chunk in names.chunks(8) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Part {
    Objective,
    Constraints,
    Bounds,
    General,
    Binary,
    Done,
}

fn section(line: &str) -> Option<(Part, bool)> {
    match line.to_ascii_lowercase().as_str() {
        "minimize" | "minimise" | "min" => Some((Part::Objective, false)),
        "maximize" | "maximise" | "max" => Some((Part::Objective, true)),
        "subject to" | "such that" | "st" | "s.t." => Some((Part::Constraints, false)),
        "bounds" | "bound" => Some((Part::Bounds, false)),
        "general" | "generals" | "gen" => Some((Part::General, false)),
        "binary" | "binaries" | "bin" => Some((Part::Binary, false)),
        "end" => Some((Part::Done, false)),
        _ => None,
    }
}

fn parse_num(tok: &str) -> Option<f64> {
    match tok.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        _ => tok.parse().ok(),
    }
}

fn parse_sense(tok: &str) -> Option<Sense> {
    match tok {
        "<=" | "=<" | "<" => Some(Sense::Le),
        ">=" | "=>" | ">" => Some(Sense::Ge),
        "=" => Some(Sense::Eq),
        _ => None,
    }
}

/// `(name, terms, sense and rhs)` of one statement; terms are whitespace
/// separated `[+|-] [coef] name` groups.
type Statement = (String, Vec<(String, f64)>, Option<(Sense, f64)>);

fn parse_statement(line: usize, text: &str) -> Result<Statement, InverseError> {
    let bad = |msg: String| InverseError::Lp { line, msg };
    let (name, body) = text.split_once(':').ok_or_else(|| bad("statement without a name".into()))?;
    let toks: Vec<&str> = body.split_whitespace().collect();
    let mut terms: Vec<(String, f64)> = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    let mut i = 0;
    let mut tail = None;
    while i < toks.len() {
        let t = toks[i];
        if let Some(s) = parse_sense(t) {
            let rhs = toks.get(i + 1).and_then(|r| parse_num(r)).ok_or_else(|| bad("missing right-hand side".into()))?;
            if i + 2 != toks.len() {
                return Err(bad("text after the right-hand side".into()));
            }
            tail = Some((s, rhs));
            break;
        }
        match t {
            "+" => sign = 1.0,
            "-" => sign = -1.0,
            _ => {
                if let Some(c) = parse_num(t) {
                    if coef.is_some() {
                        return Err(bad(format!("two coefficients in a row at `{t}`")));
                    }
                    coef = Some(c);
                } else {
                    let c = sign * coef.take().unwrap_or(1.0);
                    if c != 0.0 {
                        terms.push((t.to_string(), c));
                    }
                    sign = 1.0;
                }
            }
        }
        i += 1;
    }
    if coef.is_some() {
        return Err(bad("coefficient without a variable".into()));
    }
    Ok((name.trim().to_string(), terms, tail))
}

/// Reads the LP dialect written by [`emit_lp`] (one named statement per
/// objective or constraint, continuation lines indented).
pub fn parse_lp(text: &str) -> Result<LpProblem, InverseError> {
    let mut part = None;
    let mut maximize = false;
    let mut statements: Vec<(usize, Part, String)> = Vec::new();
    let mut bound_lines = Vec::new();
    let mut kinds: Vec<(String, VarKind)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('\\').next().unwrap_or("");
        let s = line.trim();
        if s.is_empty() {
            continue;
        }
        if let Some((p, max)) = section(s) {
            if p == Part::Objective {
                maximize = max;
            }
            part = Some(p);
            continue;
        }
        match part {
            None => return Err(InverseError::Lp { line: i + 1, msg: "text before the objective".into() }),
            Some(p @ (Part::Objective | Part::Constraints)) => {
                let continues = line.starts_with("   ") && !statements.is_empty();
                if continues {
                    let last = statements.last_mut().unwrap();
                    last.2.push(' ');
                    last.2.push_str(s);
                } else {
                    statements.push((i + 1, p, s.to_string()));
                }
            }
            Some(Part::Bounds) => bound_lines.push((i + 1, s.to_string())),
            Some(Part::General) => kinds.extend(s.split_whitespace().map(|n| (n.to_string(), VarKind::Integer))),
            Some(Part::Binary) => kinds.extend(s.split_whitespace().map(|n| (n.to_string(), VarKind::Binary))),
            Some(Part::Done) => return Err(InverseError::Lp { line: i + 1, msg: "text after End".into() }),
        }
    }

    let mut vars: BTreeMap<String, (VarKind, f64, f64)> = BTreeMap::new();
    let mut objective = Vec::new();
    let mut constraints = Vec::new();
    for (line, p, text) in statements {
        let (name, terms, tail) = parse_statement(line, &text)?;
        for (n, _) in &terms {
            vars.entry(n.clone()).or_insert((VarKind::Continuous, 0.0, f64::INFINITY));
        }
        match (p, tail) {
            (Part::Objective, None) => objective = terms,
            (Part::Constraints, Some((sense, rhs))) => constraints.push(LpConstraint { name, terms, sense, rhs }),
            _ => return Err(InverseError::Lp { line, msg: "malformed statement".into() }),
        }
    }
    for (line, s) in bound_lines {
        let toks: Vec<&str> = s.split_whitespace().collect();
        let bad = || InverseError::Lp { line, msg: format!("bad bound `{s}`") };
        let (name, lo, hi) = match toks.as_slice() {
            [n, "free"] => (n.to_string(), f64::NEG_INFINITY, f64::INFINITY),
            [n, "=", v] => {
                let v = parse_num(v).ok_or_else(bad)?;
                (n.to_string(), v, v)
            }
            [n, ">=", v] => (n.to_string(), parse_num(v).ok_or_else(bad)?, f64::INFINITY),
            [n, "<=", v] => (n.to_string(), 0.0, parse_num(v).ok_or_else(bad)?),
            [lo, "<=", n, "<=", hi] => (n.to_string(), parse_num(lo).ok_or_else(bad)?, parse_num(hi).ok_or_else(bad)?),
            _ => return Err(bad()),
        };
        let e = vars.entry(name).or_insert((VarKind::Continuous, 0.0, f64::INFINITY));
        e.1 = lo;
        e.2 = hi;
    }
    for (name, kind) in kinds {
        let e = vars.entry(name).or_insert((VarKind::Continuous, 0.0, f64::INFINITY));
        e.0 = kind;
        if kind == VarKind::Binary {
            e.1 = 0.0;
            e.2 = 1.0;
        }
    }
    if part != Some(Part::Done) {
        return Err(InverseError::Lp { line: text.lines().count(), msg: "missing End".into() });
    }
    Ok(LpProblem {
        maximize,
        objective,
        constraints,
        vars,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inverse::milp::{LinExpr, Role};

    #[test]
    fn empty_model_is_objective_only() {
        let m = MilpModel::new();
        let text = emit_lp(&m);
        assert!(text.contains("obj: 0 k_one"));
        assert!(text.contains("Subject To\nBounds\n k_one = 1\nEnd"));
        assert_eq!(parse_lp(&text).unwrap(), LpProblem::from_model(&m));
    }

    #[test]
    fn binary_section_and_round_trip() {
        let mut m = MilpModel::new();
        let x = m.add_var("a_0_1", VarKind::Binary, 0.0, 1.0, Role::Slot { typical: 0, t: 1 });
        let y = m.add_var("y_0", VarKind::Continuous, -0.5, 2.25, Role::One);
        let z = m.add_var("z_int", VarKind::Integer, 0.0, 7.0, Role::One);
        let mut e = LinExpr::var(x);
        e.add_term(y, -0.1);
        e.add_term(z, 1e-7);
        e.constant = 0.3;
        m.add_constraint("c", &e, Sense::Le, 1.0);
        m.add_range("r", &LinExpr::var(y), 0.1, 2.0);
        m.set_objective(ObjectiveSense::Maximize, &e);
        let text = emit_lp(&m);
        assert!(text.contains("Binary\n a_0_1\n"), "{text}");
        assert!(text.contains("General\n z_int\n"));
        let back = parse_lp(&text).unwrap();
        assert_eq!(back, LpProblem::from_model(&m));
        assert_eq!(back.constraints[0].rhs, 1.0 - 0.3);
    }

    #[test]
    fn long_rows_wrap() {
        let mut m = MilpModel::new();
        let mut e = LinExpr::default();
        for i in 0..60 {
            let v = m.add_var(&format!("f_{i}_0"), VarKind::Binary, 0.0, 1.0, Role::Fringe { vertex: i, entry: 0 });
            e.add_term(v, 1.0 / (i as f64 + 1.0));
        }
        m.add_constraint("one", &e, Sense::Eq, 1.0);
        let text = emit_lp(&m);
        assert!(text.lines().all(|l| l.len() <= WIDTH + 30));
        assert_eq!(parse_lp(&text).unwrap(), LpProblem::from_model(&m));
    }

    #[test]
    fn malformed_input() {
        assert!(parse_lp("Minimize\n obj: 0 x\nSubject To\n c: x <=\nEnd\n").is_err());
        assert!(parse_lp("Minimize\n obj: 0 x\n").is_err());
        assert!(parse_lp("obj: x\n").is_err());
    }
}
