//! Descriptor vectors for the two-layered model and dataset feature matrices.

mod matrix;

pub use matrix::{
    build_feature_matrix, format_sig6, read_feature_csv, write_feature_csv, Bounds, FeatureMatrix, MatrixError,
};

use std::collections::BTreeMap;

use crate::chemgraph::{decompose_two_layered, suppress_hydrogens, ChemicalGraph, FringeTreeCode, GraphError, TwoLayered};
use crate::chemio::Molecule;
use crate::element::Element;

/// Descriptor names present for every molecule, even when zero.
pub const CORE_NAMES: [&str; 14] = [
    "n", "rank", "n_in", "ms_avg", "dg_1", "dg_2", "dg_3", "dg_4", "dg_in_1", "dg_in_2", "dg_in_3", "dg_in_4",
    "bd_in_2", "bd_in_3",
];

pub fn is_core(name: &str) -> bool {
    CORE_NAMES.contains(&name)
}

pub fn dg_key(d: usize) -> String {
    format!("dg_{d}")
}

pub fn dg_in_key(d: usize) -> String {
    format!("dg_in_{d}")
}

pub fn bd_key(m: u8) -> String {
    format!("bd_in_{m}")
}

pub fn na_in_key(e: Element) -> String {
    format!("na_in_{e}")
}

pub fn na_ex_key(e: Element) -> String {
    format!("na_ex_{e}")
}

/// Interior edge configuration; the endpoint with the smaller
/// (symbol, degree) pair comes first.
pub fn ec_key(a: Element, da: usize, b: Element, db: usize, m: u8) -> String {
    let (x, y) = if (a.symbol(), da) <= (b.symbol(), db) {
        ((a, da), (b, db))
    } else {
        ((b, db), (a, da))
    };
    format!("ec_in_{}{}_{}{}_{}", x.0, x.1, y.0, y.1, m)
}

/// Leaf-edge adjacency configuration with the leaf element first. When both
/// ends are leaves the symbols are sorted.
pub fn ac_key(leaf: Element, other: Element, m: u8, both_leaves: bool) -> String {
    let (x, y) = if both_leaves && other.symbol() < leaf.symbol() {
        (other, leaf)
    } else {
        (leaf, other)
    };
    format!("ac_lf_{x}_{y}_{m}")
}

fn split_symbol_degree(s: &str) -> Option<(Element, usize)> {
    let i = s.find(|c: char| c.is_ascii_digit())?;
    Some((s[..i].parse().ok()?, s[i..].parse().ok()?))
}

/// Inverse of [`ec_key`]: `(a, deg a, b, deg b, multiplicity)`.
pub fn parse_ec_key(key: &str) -> Option<(Element, usize, Element, usize, u8)> {
    let parts: Vec<&str> = key.strip_prefix("ec_in_")?.split('_').collect();
    if parts.len() != 3 {
        return None;
    }
    let (a, da) = split_symbol_degree(parts[0])?;
    let (b, db) = split_symbol_degree(parts[1])?;
    let m: u8 = parts[2].parse().ok().filter(|m| (1..=3).contains(m))?;
    Some((a, da, b, db, m))
}

/// Inverse of [`ac_key`]: `(first, second, multiplicity)`.
pub fn parse_ac_key(key: &str) -> Option<(Element, Element, u8)> {
    let parts: Vec<&str> = key.strip_prefix("ac_lf_")?.split('_').collect();
    if parts.len() != 3 {
        return None;
    }
    let m: u8 = parts[2].parse().ok().filter(|m| (1..=3).contains(m))?;
    Some((parts[0].parse().ok()?, parts[1].parse().ok()?, m))
}

pub fn fc_key(code: &FringeTreeCode) -> String {
    format!("fc_{}", code.0.replace(' ', "_"))
}

/// Inverse of [`fc_key`].
pub fn fc_code(key: &str) -> Option<FringeTreeCode> {
    key.strip_prefix("fc_").map(|c| FringeTreeCode(c.replace('_', " ")))
}

/// Named descriptor values of one molecule. Configuration descriptors are
/// stored only when they occur.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeatureVector {
    values: BTreeMap<String, f64>,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> f64 {
        self.values.get(name).copied().unwrap_or(0.0)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn add(&mut self, name: String, by: f64) {
        *self.values.entry(name).or_insert(0.0) += by;
    }

    fn set(&mut self, name: &str, v: f64) {
        self.values.insert(name.to_string(), v);
    }

    /// Sum of every value whose name starts with `prefix`.
    pub fn sum_prefix(&self, prefix: &str) -> f64 {
        self.values.iter().filter(|(k, _)| k.starts_with(prefix)).map(|(_, v)| v).sum()
    }
}

/// Sum of ⌊10·mass⌋ over heavy atoms and hydrogens of `g`.
pub fn mass_x10_total(g: &ChemicalGraph) -> u32 {
    g.elements().iter().map(|e| e.mass_x10()).sum::<u32>() + g.hydrogen_total() as u32 * Element::H.mass_x10()
}

pub fn featurize(g: &ChemicalGraph, rho: usize) -> Result<FeatureVector, GraphError> {
    let d = decompose_two_layered(g, rho)?;
    Ok(featurize_decomposed(g, &d))
}

pub fn featurize_molecule(mol: &Molecule, rho: usize) -> Result<FeatureVector, GraphError> {
    featurize(&suppress_hydrogens(mol)?, rho)
}

pub fn featurize_decomposed(g: &ChemicalGraph, d: &TwoLayered) -> FeatureVector {
    let mut f = FeatureVector::default();
    let n = g.vertex_count();
    let total_atoms = n + g.hydrogen_total();
    f.set("n", n as f64);
    f.set("rank", g.rank().expect("decomposition checked connectivity") as f64);
    f.set("n_in", d.interior_count() as f64);
    f.set("ms_avg", f64::from(mass_x10_total(g)) / total_atoms as f64);
    for name in &CORE_NAMES[4..] {
        f.set(name, 0.0);
    }

    let interior_edges = d.interior_edges(g);
    let mut in_deg = vec![0usize; n];
    for &e in &interior_edges {
        let ed = g.edges()[e];
        in_deg[ed.a] += 1;
        in_deg[ed.b] += 1;
        f.add(ec_key(g.element(ed.a), g.degree(ed.a), g.element(ed.b), g.degree(ed.b), ed.order), 1.0);
        if ed.order >= 2 {
            f.add(bd_key(ed.order), 1.0);
        }
    }
    for v in d.interior_vertices() {
        if (1..=4).contains(&g.degree(v)) {
            f.add(dg_key(g.degree(v)), 1.0);
        }
        if (1..=4).contains(&in_deg[v]) {
            f.add(dg_in_key(in_deg[v]), 1.0);
        }
        f.add(na_in_key(g.element(v)), 1.0);
    }
    for v in d.exterior_vertices() {
        f.add(na_ex_key(g.element(v)), 1.0);
    }
    for code in d.fringe_codes() {
        f.add(fc_key(&code), 1.0);
    }
    for e in g.edges() {
        let (la, lb) = (g.degree(e.a) == 1, g.degree(e.b) == 1);
        if la {
            f.add(ac_key(g.element(e.a), g.element(e.b), e.order, lb), 1.0);
        } else if lb {
            f.add(ac_key(g.element(e.b), g.element(e.a), e.order, false), 1.0);
        }
    }
    f
}
