use super::{canonical_fringe_code, ChemicalGraph, FringeNode, FringeTreeCode, GraphError};

/// Interior/exterior partition of a hydrogen-suppressed graph with the
/// fringe tree rooted at every interior vertex.
#[derive(Clone, Debug)]
pub struct TwoLayered {
    pub rho: usize,
    interior: Vec<bool>,
    parent: Vec<Option<usize>>,
    fringe: Vec<(usize, FringeNode)>,
}

impl TwoLayered {
    pub fn is_interior(&self, v: usize) -> bool {
        self.interior[v]
    }

    pub fn interior_vertices(&self) -> Vec<usize> {
        (0..self.interior.len()).filter(|&v| self.interior[v]).collect()
    }

    pub fn exterior_vertices(&self) -> Vec<usize> {
        (0..self.interior.len()).filter(|&v| !self.interior[v]).collect()
    }

    pub fn interior_count(&self) -> usize {
        self.interior.iter().filter(|&&b| b).count()
    }

    /// Edge indices with both endpoints interior.
    pub fn interior_edges(&self, g: &ChemicalGraph) -> Vec<usize> {
        (0..g.edges().len())
            .filter(|&i| {
                let e = g.edges()[i];
                self.interior[e.a] && self.interior[e.b]
            })
            .collect()
    }

    pub fn exterior_edges(&self, g: &ChemicalGraph) -> Vec<usize> {
        (0..g.edges().len())
            .filter(|&i| {
                let e = g.edges()[i];
                !(self.interior[e.a] && self.interior[e.b])
            })
            .collect()
    }

    /// Neighbour toward the interior for an exterior vertex.
    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    /// `(root, tree)` for every interior vertex, in vertex order.
    pub fn fringe_trees(&self) -> &[(usize, FringeNode)] {
        &self.fringe
    }

    pub fn fringe_codes(&self) -> Vec<FringeTreeCode> {
        self.fringe.iter().map(|(_, t)| canonical_fringe_code(t)).collect()
    }
}

/// Removes leaves `rho` times. A round is skipped once the remainder is a
/// single edge, so the two ends of a chain stay interior together.
pub fn decompose_two_layered(g: &ChemicalGraph, rho: usize) -> Result<TwoLayered, GraphError> {
    if rho < 1 {
        return Err(GraphError::BadRho);
    }
    if !g.is_connected() {
        return Err(GraphError::Disconnected);
    }
    let n = g.vertex_count();
    let mut alive = vec![true; n];
    let mut deg: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let mut parent = vec![None; n];
    let mut remaining = n;
    for _ in 0..rho {
        if remaining == 2 {
            break;
        }
        let leaves: Vec<usize> = (0..n).filter(|&v| alive[v] && deg[v] == 1).collect();
        if leaves.is_empty() {
            break;
        }
        for &v in &leaves {
            alive[v] = false;
        }
        for &v in &leaves {
            let &(w, _) = g
                .neighbors(v)
                .iter()
                .find(|&&(w, _)| alive[w])
                .expect("a leaf keeps one live neighbour outside K2");
            parent[v] = Some(w);
            deg[w] -= 1;
        }
        remaining -= leaves.len();
    }

    let mut children = vec![Vec::new(); n];
    for v in 0..n {
        if let Some(p) = parent[v] {
            children[p].push(v);
        }
    }
    fn build(g: &ChemicalGraph, children: &[Vec<usize>], v: usize, bond: u8) -> FringeNode {
        let kids = children[v]
            .iter()
            .map(|&c| {
                let order = g
                    .neighbors(v)
                    .iter()
                    .find(|&&(w, _)| w == c)
                    .map(|&(_, e)| g.edges()[e].order)
                    .unwrap();
                build(g, children, c, order)
            })
            .collect();
        FringeNode {
            element: g.element(v),
            hydrogens: g.hydrogens(v),
            bond,
            children: kids,
        }
    }
    let fringe = (0..n)
        .filter(|&v| alive[v])
        .map(|v| (v, build(g, &children, v, 0)))
        .collect();
    Ok(TwoLayered {
        rho,
        interior: alive,
        parent,
        fringe,
    })
}
