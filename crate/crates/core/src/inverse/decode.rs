use std::fmt;

use super::milp::InverseModel;
use super::solution::Assignment;
use super::spec::{Layout, TopologicalSpec};
use super::{Choice, InferredGraph, InverseError};
use crate::chemgraph::{decompose_two_layered, ChemicalGraph, Edge, FringeNode, FringeTreeCode};
use crate::descriptors::{bd_key, featurize};
use crate::learn::Predictor;

/// Builds the graph described by `choice`: used slots become interior
/// vertices, present edge slots interior edges, and each catalog tree is
/// hung below its root.
pub fn realize(spec: &TopologicalSpec, layout: &Layout, choice: &Choice) -> Result<ChemicalGraph, InverseError> {
    let mut index = vec![None; layout.vertices.len()];
    let mut elements = Vec::new();
    let mut hydrogens = Vec::new();
    let mut edges = Vec::new();
    for v in 0..layout.vertices.len() {
        if !layout.vertex_active(v, &choice.path_len) {
            continue;
        }
        let entry = choice.fringe[v].ok_or_else(|| InverseError::Decode(format!("slot {} has no tree", layout.vertices[v].label)))?;
        let tree = &spec.catalog[entry].tree;
        index[v] = Some(elements.len());
        elements.push(tree.element);
        hydrogens.push(tree.hydrogens);
    }
    for (s, slot) in layout.edges.iter().enumerate() {
        if !layout.edge_present(s, &choice.path_len) {
            continue;
        }
        let order = choice.mult[s].ok_or_else(|| InverseError::Decode(format!("edge slot {s} has no multiplicity")))?;
        match (index[slot.a], index[slot.b]) {
            (Some(a), Some(b)) => edges.push(Edge { a, b, order }),
            _ => return Err(InverseError::Decode(format!("edge slot {s} touches an unused vertex"))),
        }
    }
    fn attach(node: &FringeNode, at: usize, elements: &mut Vec<crate::element::Element>, hydrogens: &mut Vec<u8>, edges: &mut Vec<Edge>) {
        for c in &node.children {
            let id = elements.len();
            elements.push(c.element);
            hydrogens.push(c.hydrogens);
            edges.push(Edge { a: at, b: id, order: c.bond });
            attach(c, id, elements, hydrogens, edges);
        }
    }
    for v in 0..layout.vertices.len() {
        if let (Some(root), Some(entry)) = (index[v], choice.fringe[v]) {
            attach(&spec.catalog[entry].tree, root, &mut elements, &mut hydrogens, &mut edges);
        }
    }
    Ok(ChemicalGraph::new(elements, hydrogens, edges)?)
}

fn read_choice(model: &InverseModel, a: &Assignment) -> Result<Choice, InverseError> {
    let on = |v| a.get(v) > 0.5;
    let mut path_len = Vec::new();
    for (k, vars) in model.slots.iter().enumerate() {
        let used = vars.iter().filter(|&&v| on(v)).count();
        if vars.iter().take(used).any(|&v| !on(v)) {
            return Err(InverseError::Decode(format!("path slots of typical edge {k} are not contiguous")));
        }
        path_len.push(used + 1);
    }
    let mut fringe = Vec::new();
    for (v, vars) in model.fringe.iter().enumerate() {
        let picked: Vec<usize> = vars.iter().filter(|&&(_, x)| on(x)).map(|&(i, _)| i).collect();
        let active = model.layout.vertex_active(v, &path_len);
        match (active, picked.as_slice()) {
            (true, [i]) => fringe.push(Some(*i)),
            (false, []) => fringe.push(None),
            _ => return Err(InverseError::Decode(format!("slot {} has {} trees", model.layout.vertices[v].label, picked.len()))),
        }
    }
    let mut mult = Vec::new();
    for (s, ids) in model.mult.iter().enumerate() {
        let picked: Vec<u8> = (0..3).filter(|&k| on(ids[k])).map(|k| k as u8 + 1).collect();
        match (model.layout.edge_present(s, &path_len), picked.as_slice()) {
            (true, [k]) => mult.push(Some(*k)),
            (false, []) => mult.push(None),
            _ => return Err(InverseError::Decode(format!("edge slot {s} has {} multiplicities", picked.len()))),
        }
    }
    Ok(Choice { path_len, fringe, mult })
}

/// Builds the graph for `choice` and checks that it is the graph the choice
/// means: connected, valence-correct with roots at their standard valence,
/// and decomposing into exactly the chosen fringe trees.
pub(crate) fn infer(spec: &TopologicalSpec, layout: &Layout, predictor: &Predictor, rho: usize, choice: Choice) -> Result<InferredGraph, InverseError> {
    let graph = realize(spec, layout, &choice)?;
    if !graph.is_connected() {
        return Err(InverseError::Decode("graph is disconnected".into()));
    }
    if let Some(&v) = graph.valence_violations().first() {
        return Err(InverseError::Decode(format!("vertex {v} violates valence")));
    }
    // Roots are numbered first.
    let roots = choice.fringe.iter().flatten().count();
    if let Some(v) = (0..roots).find(|&v| graph.bond_order_sum(v) + u32::from(graph.hydrogens(v)) != u32::from(graph.element(v).standard_valence())) {
        return Err(InverseError::Decode(format!("root {v} is not at its standard valence")));
    }
    let d = decompose_two_layered(&graph, rho)?;
    let mut got: Vec<FringeTreeCode> = d.fringe_codes();
    let mut want: Vec<FringeTreeCode> = choice.fringe.iter().flatten().map(|&i| spec.catalog[i].code.clone()).collect();
    got.sort();
    want.sort();
    if got != want {
        return Err(InverseError::Decode("decomposition does not reproduce the chosen fringe trees".into()));
    }
    let features = featurize(&graph, rho)?;
    let predicted = predictor.predict_features(&features);
    Ok(InferredGraph {
        graph,
        features,
        predicted,
        choice,
    })
}

/// Turns a solver assignment into a graph with recomputed descriptors and
/// prediction.
pub fn decode_graph(model: &InverseModel, a: &Assignment) -> Result<InferredGraph, InverseError> {
    let choice = read_choice(model, a)?;
    infer(&model.spec, &model.layout, &model.predictor, model.rho, choice)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    /// Prediction recomputed from the graph (NaN when it could not be featurized).
    pub predicted: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        writeln!(f, "predicted {}", self.predicted)
    }
}

/// Checks an inferred graph; only the graph itself is consulted.
pub fn validate_inferred(g: &InferredGraph, spec: &TopologicalSpec, predictor: &Predictor, rho: usize) -> ValidationReport {
    validate_graph(&g.graph, spec, predictor, rho)
}

/// Re-derives everything from the graph alone and checks it against the
/// specification and the target range (with 1e-6 slack).
pub fn validate_graph(graph: &ChemicalGraph, spec: &TopologicalSpec, predictor: &Predictor, rho: usize) -> ValidationReport {
    let mut checks = Vec::new();
    let mut push = |name: &str, passed: bool, detail: String| {
        checks.push(Check {
            name: name.to_string(),
            passed,
            detail,
        })
    };
    let connected = graph.is_connected();
    push("connected", connected, String::new());
    let bad = graph.valence_violations();
    push("valence", bad.is_empty(), if bad.is_empty() { String::new() } else { format!("vertices {bad:?}") });
    if !connected {
        return ValidationReport { checks, predicted: f64::NAN };
    }
    let rank = graph.rank().unwrap_or(usize::MAX);
    push("rank", rank == spec.rank(), format!("{rank} vs seed {}", spec.rank()));
    let features = match featurize(graph, rho) {
        Ok(f) => f,
        Err(e) => {
            push("featurize", false, e.to_string());
            return ValidationReport { checks, predicted: f64::NAN };
        }
    };
    let d = decompose_two_layered(graph, rho).expect("featurize succeeded");
    let foreign: Vec<String> = d
        .fringe_codes()
        .into_iter()
        .filter(|c| !spec.catalog.iter().any(|e| &e.code == c))
        .map(|c| c.0)
        .collect();
    push("fringe", foreign.is_empty(), foreign.join("; "));

    let mut range = |name: String, value: usize, r: (usize, usize)| {
        push(&name, (r.0..=r.1).contains(&value), format!("{value} in [{}, {}]", r.0, r.1));
    };
    let b = &spec.bounds;
    if let Some(r) = b.n {
        range("n".into(), graph.vertex_count(), r);
    }
    if let Some(r) = b.nh {
        range("nH".into(), graph.hydrogen_total(), r);
    }
    for (&el, &r) in &b.elem {
        range(format!("elem {el}"), graph.elements().iter().filter(|&&e| e == el).count(), r);
    }
    for (key, &r) in b.ec.iter().chain(&b.ac) {
        range(key.clone(), features.get(key) as usize, r);
    }
    for (&m, &r) in &b.bd {
        range(bd_key(m), features.get(&bd_key(m)) as usize, r);
    }
    let predicted = predictor.predict_features(&features);
    let (lo, hi) = spec.target;
    push("target", predicted >= lo - 1e-6 && predicted <= hi + 1e-6, format!("{predicted} in [{lo}, {hi}]"));
    ValidationReport { checks, predicted }
}
