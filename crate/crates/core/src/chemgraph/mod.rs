//! Hydrogen-suppressed chemical graphs, the two-layered interior/exterior
//! decomposition and canonical codes for ρ-fringe trees.

mod decompose;
mod fringe;
mod iso;

pub use decompose::{decompose_two_layered, TwoLayered};
pub use fringe::{canonical_fringe_code, parse_catalog, CodeError, FringeNode, FringeTreeCode};

use crate::chemio::{Atom, Bond, Molecule};
use crate::element::Element;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("graph has no non-hydrogen atoms")]
    Empty,
    #[error("graph is disconnected")]
    Disconnected,
    #[error("hydrogen cannot be a vertex of a hydrogen-suppressed graph")]
    HydrogenVertex,
    #[error("edge {0} is invalid: {1}")]
    BadEdge(usize, &'static str),
    #[error("rho must be at least 1")]
    BadRho,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub order: u8,
}

impl Edge {
    pub fn other(&self, v: usize) -> usize {
        if self.a == v {
            self.b
        } else {
            self.a
        }
    }
}

/// Hydrogen-suppressed chemical graph: heavy atoms as vertices, per-vertex
/// hydrogen counts, and bond multiplicities on the edges.
#[derive(Clone, Debug, PartialEq)]
pub struct ChemicalGraph {
    elements: Vec<Element>,
    hydrogens: Vec<u8>,
    edges: Vec<Edge>,
    adj: Vec<Vec<(usize, usize)>>,
}

impl ChemicalGraph {
    pub fn new(elements: Vec<Element>, hydrogens: Vec<u8>, edges: Vec<Edge>) -> Result<Self, GraphError> {
        if elements.is_empty() {
            return Err(GraphError::Empty);
        }
        if elements.contains(&Element::H) {
            return Err(GraphError::HydrogenVertex);
        }
        assert_eq!(elements.len(), hydrogens.len(), "one hydrogen count per vertex");
        let n = elements.len();
        let mut adj = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            if e.a >= n || e.b >= n {
                return Err(GraphError::BadEdge(i, "endpoint out of range"));
            }
            if e.a == e.b {
                return Err(GraphError::BadEdge(i, "self loop"));
            }
            if !(1..=3).contains(&e.order) {
                return Err(GraphError::BadEdge(i, "multiplicity outside 1..=3"));
            }
            if adj[e.a].iter().any(|&(w, _)| w == e.b) {
                return Err(GraphError::BadEdge(i, "duplicate edge"));
            }
            adj[e.a].push((e.b, i));
            adj[e.b].push((e.a, i));
        }
        Ok(ChemicalGraph {
            elements,
            hydrogens,
            edges,
            adj,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn element(&self, v: usize) -> Element {
        self.elements[v]
    }

    pub fn hydrogens(&self, v: usize) -> u8 {
        self.hydrogens[v]
    }

    pub fn hydrogen_total(&self) -> usize {
        self.hydrogens.iter().map(|&h| usize::from(h)).sum()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbours of `v` as `(vertex, edge index)` pairs.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn bond_order_sum(&self, v: usize) -> u32 {
        self.adj[v]
            .iter()
            .map(|&(_, e)| u32::from(self.edges[e].order))
            .sum()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.vertex_count();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(w, _) in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == n
    }

    /// Cyclomatic number |E| − |V| + 1 of a connected graph.
    pub fn rank(&self) -> Result<usize, GraphError> {
        if !self.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(self.edges.len() + 1 - self.vertex_count())
    }

    /// Vertices whose bond orders plus hydrogens do not equal an allowed valence.
    pub fn valence_violations(&self) -> Vec<usize> {
        (0..self.vertex_count())
            .filter(|&v| {
                let total = self.bond_order_sum(v) + u32::from(self.hydrogens[v]);
                !self.elements[v].valences().iter().any(|&val| u32::from(val) == total)
            })
            .collect()
    }

    /// Sets the multiplicity of edge `e` (used for fault injection and decoding).
    pub fn set_order(&mut self, e: usize, order: u8) {
        self.edges[e].order = order;
    }

    pub fn to_molecule(&self, id: impl Into<String>) -> Molecule {
        let atoms = self
            .elements
            .iter()
            .zip(&self.hydrogens)
            .map(|(&element, &hydrogens)| Atom { element, hydrogens })
            .collect();
        let bonds = self
            .edges
            .iter()
            .map(|e| Bond {
                a: e.a,
                b: e.b,
                order: e.order,
            })
            .collect();
        Molecule {
            id: id.into(),
            atoms,
            bonds,
        }
    }

    /// Label-preserving isomorphism test (element, hydrogen count, multiplicity).
    pub fn is_isomorphic(&self, other: &ChemicalGraph) -> bool {
        iso::isomorphic(self, other)
    }
}

/// Removes hydrogen atoms, folding each into the hydrogen count of its neighbour.
pub fn suppress_hydrogens(mol: &Molecule) -> Result<ChemicalGraph, GraphError> {
    let mut index = vec![usize::MAX; mol.atoms.len()];
    let mut elements = Vec::new();
    let mut hydrogens = Vec::new();
    for (i, a) in mol.atoms.iter().enumerate() {
        if a.element != Element::H {
            index[i] = elements.len();
            elements.push(a.element);
            hydrogens.push(a.hydrogens);
        }
    }
    if elements.is_empty() {
        return Err(GraphError::Empty);
    }
    let mut edges = Vec::new();
    for b in &mol.bonds {
        match (index[b.a], index[b.b]) {
            (usize::MAX, usize::MAX) => {}
            (usize::MAX, v) | (v, usize::MAX) => hydrogens[v] += 1,
            (u, v) => edges.push(Edge { a: u, b: v, order: b.order }),
        }
    }
    ChemicalGraph::new(elements, hydrogens, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chemio::{parse_sdf, parse_smiles};

    fn graph(s: &str) -> ChemicalGraph {
        suppress_hydrogens(&parse_smiles(s).unwrap()).unwrap()
    }

    #[test]
    fn methane_single_vertex() {
        let sdf = "m\n  t\n\n  5  4  0  0  0  0  0  0  0  0999 V2000\n    0.0 0.0 0.0 C   0  0\n    0.0 0.0 0.0 H   0  0\n    0.0 0.0 0.0 H   0  0\n    0.0 0.0 0.0 H   0  0\n    0.0 0.0 0.0 H   0  0\n  1  2  1  0\n  1  3  1  0\n  1  4  1  0\n  1  5  1  0\nM  END\n$$$$\n";
        let m = &parse_sdf(sdf).unwrap()[0].molecule;
        let g = suppress_hydrogens(m).unwrap();
        assert_eq!(g.vertex_count(), 1);
        assert_eq!(g.hydrogens(0), 4);
        assert!(g.edges().is_empty());
    }

    #[test]
    fn hydrogen_molecule_is_empty() {
        let m = parse_smiles("[H][H]").unwrap();
        assert_eq!(suppress_hydrogens(&m), Err(GraphError::Empty));
    }

    #[test]
    fn figure_graph_size_and_rank() {
        let g = graph("CCC1CCC(CCC(=O)O)C1");
        assert_eq!(g.vertex_count(), 12);
        assert_eq!(g.rank().unwrap(), 1);
        assert_eq!(g.hydrogen_total(), 18);
    }

    #[test]
    fn ranks() {
        assert_eq!(graph("CCCC(C)C").rank().unwrap(), 0);
        assert_eq!(graph("C1CCC2CCCCC2C1").rank().unwrap(), 2);
        let g = graph("CC.CC");
        assert_eq!(g.rank(), Err(GraphError::Disconnected));
    }

    #[test]
    fn isomorphism_ignores_atom_order() {
        assert!(graph("OCC1CCCC1").is_isomorphic(&graph("C1CC(CO)CC1")));
        assert!(!graph("OCC1CCCC1").is_isomorphic(&graph("CC1CCCC1O")));
        assert!(!graph("C=CC").is_isomorphic(&graph("CCC")));
    }
}
