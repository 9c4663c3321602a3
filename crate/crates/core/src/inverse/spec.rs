use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::InverseError;
use crate::chemgraph::{canonical_fringe_code, FringeNode, FringeTreeCode};
use crate::descriptors::{ac_key, ec_key, parse_ac_key, parse_ec_key};
use crate::element::Element;

#[derive(Clone, Debug, PartialEq)]
pub struct SeedVertex {
    pub id: String,
    /// Optional restriction of the element placed at this vertex.
    pub element: Option<Element>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeedEdgeKind {
    Fixed,
    /// Replaced by a path with `lb..=ub` edges.
    Typical { lb: usize, ub: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeedEdge {
    pub u: usize,
    pub v: usize,
    pub kind: SeedEdgeKind,
}

/// A fringe tree that may be attached at an interior vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct CatalogEntry {
    pub id: String,
    pub code: FringeTreeCode,
    pub tree: FringeNode,
    /// Bond order the root leaves for interior edges under its standard valence.
    pub residual: u32,
}

impl CatalogEntry {
    pub fn element(&self) -> Element {
        self.tree.element
    }

    pub fn root_hydrogens(&self) -> u8 {
        self.tree.hydrogens
    }

    pub fn height(&self) -> usize {
        self.tree.height()
    }

    pub fn child_count(&self) -> usize {
        self.tree.children.len()
    }

    /// Non-root heavy atoms of element `e`.
    pub fn nonroot_count(&self, e: Element) -> usize {
        let mut k = 0;
        self.tree.for_each_descendant(&mut |node, _| {
            if node.element == e {
                k += 1;
            }
        });
        k
    }

    /// Leaf edges inside the tree keyed like the `ac_lf_` descriptors.
    pub fn ac_counts(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        self.tree.for_each_descendant(&mut |node, parent| {
            if node.children.is_empty() {
                *out.entry(ac_key(node.element, parent, node.bond, false)).or_insert(0) += 1;
            }
        });
        out
    }
}

/// Optional count ranges on the inferred graph.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpecBounds {
    pub n: Option<(usize, usize)>,
    pub nh: Option<(usize, usize)>,
    pub elem: BTreeMap<Element, (usize, usize)>,
    /// Keyed by full descriptor name (`ec_in_…`).
    pub ec: BTreeMap<String, (usize, usize)>,
    /// Keyed by full descriptor name (`ac_lf_…`).
    pub ac: BTreeMap<String, (usize, usize)>,
    /// Interior bonds of multiplicity 2 or 3.
    pub bd: BTreeMap<u8, (usize, usize)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TopologicalSpec {
    pub vertices: Vec<SeedVertex>,
    pub edges: Vec<SeedEdge>,
    pub catalog: Vec<CatalogEntry>,
    pub bounds: SpecBounds,
    /// Model file named in the target section, as written.
    pub model: Option<String>,
    pub target: (f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlotKind {
    Seed(usize),
    /// Internal vertex `t` (1-based) of the path replacing typical edge `typical`.
    Path { typical: usize, t: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct VertexSlot {
    pub label: String,
    pub kind: SlotKind,
    /// Degree within the interior, the same whenever the slot is used.
    pub in_degree: usize,
    pub element: Option<Element>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeSlotKind {
    Fixed,
    /// Path edge into internal vertex `t`; present when the path has more than `t` edges.
    Forward { typical: usize, t: usize },
    /// Last path edge, from internal vertex `t` (the start vertex when `t = 0`)
    /// to the end vertex; present when the path has exactly `t + 1` edges.
    Closing { typical: usize, t: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeSlot {
    pub a: usize,
    pub b: usize,
    pub kind: EdgeSlotKind,
}

/// Every vertex and edge position a realization may use. Seed vertices come
/// first, in spec order.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    pub vertices: Vec<VertexSlot>,
    pub edges: Vec<EdgeSlot>,
    /// Seed-edge index of each typical edge.
    pub typical: Vec<usize>,
    /// Path-length range of each typical edge.
    pub lengths: Vec<(usize, usize)>,
}

impl Layout {
    pub fn vertex_active(&self, v: usize, path_len: &[usize]) -> bool {
        match self.vertices[v].kind {
            SlotKind::Seed(_) => true,
            SlotKind::Path { typical, t } => path_len[typical] > t,
        }
    }

    pub fn edge_present(&self, s: usize, path_len: &[usize]) -> bool {
        match self.edges[s].kind {
            EdgeSlotKind::Fixed => true,
            EdgeSlotKind::Forward { typical, t } => path_len[typical] > t,
            EdgeSlotKind::Closing { typical, t } => path_len[typical] == t + 1,
        }
    }

    /// Catalog entries allowed at slot `v`: the element restriction holds and,
    /// at a vertex of interior degree 1, the tree has height exactly `rho` so
    /// that leaf pruning stops at that vertex.
    pub fn allowed_entries(&self, spec: &TopologicalSpec, v: usize, rho: usize) -> Vec<usize> {
        let slot = &self.vertices[v];
        spec.catalog
            .iter()
            .enumerate()
            .filter(|(_, c)| slot.element.is_none_or(|e| e == c.element()))
            .filter(|(_, c)| slot.in_degree != 1 || c.height() == rho)
            .map(|(i, _)| i)
            .collect()
    }
}

impl TopologicalSpec {
    pub fn typical_count(&self) -> usize {
        self.edges.iter().filter(|e| matches!(e.kind, SeedEdgeKind::Typical { .. })).count()
    }

    pub fn seed_degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.u == v || e.v == v).count()
    }

    pub fn rank(&self) -> usize {
        self.edges.len() + 1 - self.vertices.len()
    }

    pub fn layout(&self) -> Layout {
        let mut vertices: Vec<VertexSlot> = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, sv)| VertexSlot {
                label: sv.id.clone(),
                kind: SlotKind::Seed(i),
                in_degree: self.seed_degree(i),
                element: sv.element,
            })
            .collect();
        let mut edges = Vec::new();
        let mut typical = Vec::new();
        let mut lengths = Vec::new();
        for (ei, e) in self.edges.iter().enumerate() {
            match e.kind {
                SeedEdgeKind::Fixed => edges.push(EdgeSlot {
                    a: e.u,
                    b: e.v,
                    kind: EdgeSlotKind::Fixed,
                }),
                SeedEdgeKind::Typical { lb, ub } => {
                    let k = typical.len();
                    typical.push(ei);
                    lengths.push((lb, ub));
                    let mut chain = vec![e.u];
                    for t in 1..ub {
                        chain.push(vertices.len());
                        vertices.push(VertexSlot {
                            label: format!("{}~{}#{}", self.vertices[e.u].id, self.vertices[e.v].id, t),
                            kind: SlotKind::Path { typical: k, t },
                            in_degree: 2,
                            element: None,
                        });
                        edges.push(EdgeSlot {
                            a: chain[t - 1],
                            b: chain[t],
                            kind: EdgeSlotKind::Forward { typical: k, t },
                        });
                    }
                    for (t, &from) in chain.iter().enumerate() {
                        edges.push(EdgeSlot {
                            a: from,
                            b: e.v,
                            kind: EdgeSlotKind::Closing { typical: k, t },
                        });
                    }
                }
            }
        }
        Layout {
            vertices,
            edges,
            typical,
            lengths,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Section {
    Seed,
    Fringe,
    Bounds,
    Target,
}

fn err(line: usize, msg: impl Into<String>) -> InverseError {
    InverseError::Spec { line, msg: msg.into() }
}

fn num<T: std::str::FromStr>(line: usize, tok: Option<&&str>, what: &str) -> Result<T, InverseError> {
    let tok = tok.ok_or_else(|| err(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| err(line, format!("bad {what} `{tok}`")))
}

fn range(line: usize, toks: &[&str], from: usize) -> Result<(usize, usize), InverseError> {
    if toks.len() != from + 2 {
        return Err(err(line, "expected `<lo> <hi>`"));
    }
    let lo: usize = num(line, toks.get(from), "lower bound")?;
    let hi: usize = num(line, toks.get(from + 1), "upper bound")?;
    if lo > hi {
        return Err(err(line, format!("empty range {lo} > {hi}")));
    }
    Ok((lo, hi))
}

/// Parses the sectioned text format:
///
/// ```text
/// [SEED]
/// v <id> [element]
/// e <u> <v> fixed | e <u> <v> typical <lLB> <lUB>
/// [FRINGE]
/// <id> <root element> <root H> <code…>
/// [BOUNDS]
/// n|nH <lo> <hi>; elem <E> <lo> <hi>; ec|ac <key> <lo> <hi>; bd <2|3> <lo> <hi>
/// [TARGET]
/// model <path>
/// range <lo> <hi>
/// ```
///
/// Lines starting with `#` are comments.
pub fn parse_spec(text: &str) -> Result<TopologicalSpec, InverseError> {
    let mut section = None;
    let mut seen = BTreeSet::new();
    let mut vertices: Vec<SeedVertex> = Vec::new();
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut edges: Vec<SeedEdge> = Vec::new();
    let mut catalog: Vec<CatalogEntry> = Vec::new();
    let mut bounds = SpecBounds::default();
    let mut model = None;
    let mut target = None;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        if let Some(name) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            let sec = match name.trim().to_ascii_uppercase().as_str() {
                "SEED" => Section::Seed,
                "FRINGE" => Section::Fringe,
                "BOUNDS" => Section::Bounds,
                "TARGET" => Section::Target,
                other => return Err(err(line, format!("unknown section [{other}]"))),
            };
            if !seen.insert(sec as u8) {
                return Err(err(line, format!("section [{name}] appears twice")));
            }
            section = Some(sec);
            continue;
        }
        let toks: Vec<&str> = s.split_whitespace().collect();
        match section {
            None => return Err(err(line, "content before the first section")),
            Some(Section::Seed) => match toks[0] {
                "v" => {
                    if toks.len() < 2 || toks.len() > 3 {
                        return Err(err(line, "expected `v <id> [element]`"));
                    }
                    let id = toks[1].to_string();
                    if ids.contains_key(&id) {
                        return Err(err(line, format!("duplicate vertex `{id}`")));
                    }
                    let element = match toks.get(2) {
                        Some(t) => Some(t.parse::<Element>().map_err(|e| err(line, e.to_string()))?),
                        None => None,
                    };
                    if element == Some(Element::H) {
                        return Err(err(line, "hydrogen cannot be a seed vertex"));
                    }
                    ids.insert(id.clone(), vertices.len());
                    vertices.push(SeedVertex { id, element });
                }
                "e" => {
                    if toks.len() < 4 {
                        return Err(err(line, "expected `e <u> <v> fixed|typical …`"));
                    }
                    let lookup = |t: &str| ids.get(t).copied().ok_or_else(|| err(line, format!("unknown vertex `{t}`")));
                    let (u, v) = (lookup(toks[1])?, lookup(toks[2])?);
                    if u == v {
                        return Err(err(line, "self loop"));
                    }
                    if edges.iter().any(|e| (e.u, e.v) == (u, v) || (e.u, e.v) == (v, u)) {
                        return Err(err(line, "duplicate edge"));
                    }
                    let kind = match toks[3] {
                        "fixed" if toks.len() == 4 => SeedEdgeKind::Fixed,
                        "typical" => {
                            let (lb, ub) = range(line, &toks, 4)?;
                            if lb == 0 {
                                return Err(err(line, "a typical edge needs a path length of at least 1"));
                            }
                            SeedEdgeKind::Typical { lb, ub }
                        }
                        _ => return Err(err(line, "expected `fixed` or `typical <lLB> <lUB>`")),
                    };
                    edges.push(SeedEdge { u, v, kind });
                }
                other => return Err(err(line, format!("unknown seed entry `{other}`"))),
            },
            Some(Section::Fringe) => {
                if toks.len() < 5 {
                    return Err(err(line, "expected `<id> <element> <rootH> <code>`"));
                }
                let id = toks[0].to_string();
                let element: Element = toks[1].parse().map_err(|e: crate::element::UnknownElement| err(line, e.to_string()))?;
                let root_h: u8 = num(line, toks.get(2), "root hydrogen count")?;
                let tree = FringeTreeCode(toks[3..].join(" ")).decode().map_err(|e| err(line, e.to_string()))?;
                if tree.element != element || tree.hydrogens != root_h {
                    return Err(err(line, "root element or hydrogen count disagrees with the code"));
                }
                check_nonroot_valence(&tree).map_err(|m| err(line, m))?;
                let used = tree.child_bond_sum() + u32::from(root_h);
                let standard = u32::from(element.standard_valence());
                if used >= standard {
                    return Err(err(line, format!("tree `{id}` leaves no valence for interior bonds")));
                }
                let code = canonical_fringe_code(&tree);
                if catalog.iter().any(|c| c.id == id) {
                    return Err(err(line, format!("duplicate fringe id `{id}`")));
                }
                if let Some(c) = catalog.iter().find(|c| c.code == code) {
                    return Err(err(line, format!("tree `{id}` repeats the code of `{}`", c.id)));
                }
                catalog.push(CatalogEntry {
                    id,
                    code,
                    tree,
                    residual: standard - used,
                });
            }
            Some(Section::Bounds) => match toks[0] {
                "n" => bounds.n = Some(range(line, &toks, 1)?),
                "nH" | "nh" => bounds.nh = Some(range(line, &toks, 1)?),
                "elem" => {
                    let e: Element = num(line, toks.get(1), "element")?;
                    if e == Element::H {
                        return Err(err(line, "bound hydrogens with `nH`"));
                    }
                    bounds.elem.insert(e, range(line, &toks, 2)?);
                }
                "ec" => {
                    let key = toks.get(1).ok_or_else(|| err(line, "missing key"))?;
                    let full = if key.starts_with("ec_in_") { key.to_string() } else { format!("ec_in_{key}") };
                    let (a, da, b, db, m) = parse_ec_key(&full).ok_or_else(|| err(line, format!("bad edge-configuration key `{key}`")))?;
                    bounds.ec.insert(ec_key(a, da, b, db, m), range(line, &toks, 2)?);
                }
                "ac" => {
                    let key = toks.get(1).ok_or_else(|| err(line, "missing key"))?;
                    let full = if key.starts_with("ac_lf_") { key.to_string() } else { format!("ac_lf_{key}") };
                    parse_ac_key(&full).ok_or_else(|| err(line, format!("bad adjacency-configuration key `{key}`")))?;
                    bounds.ac.insert(full, range(line, &toks, 2)?);
                }
                "bd" => {
                    let m: u8 = num(line, toks.get(1), "multiplicity")?;
                    if !(2..=3).contains(&m) {
                        return Err(err(line, "bd bounds apply to multiplicity 2 or 3"));
                    }
                    bounds.bd.insert(m, range(line, &toks, 2)?);
                }
                other => return Err(err(line, format!("unknown bound `{other}`"))),
            },
            Some(Section::Target) => match toks[0] {
                "model" if toks.len() == 2 => model = Some(toks[1].to_string()),
                "range" if toks.len() == 3 => {
                    let lo: f64 = num(line, toks.get(1), "lower target")?;
                    let hi: f64 = num(line, toks.get(2), "upper target")?;
                    if lo.is_nan() || hi.is_nan() || lo > hi {
                        return Err(err(line, "target range must satisfy lo <= hi"));
                    }
                    target = Some((lo, hi));
                }
                _ => return Err(err(line, "expected `model <path>` or `range <lo> <hi>`")),
            },
        }
    }

    let bad = |m: &str| Err(InverseError::InvalidSpec(m.to_string()));
    if !seen.contains(&(Section::Seed as u8)) || vertices.is_empty() {
        return bad("missing [SEED] section");
    }
    if !seen.contains(&(Section::Fringe as u8)) || catalog.is_empty() {
        return bad("the [FRINGE] catalog is empty");
    }
    if !seen.contains(&(Section::Target as u8)) {
        return bad("missing [TARGET] section");
    }
    let Some(target) = target else {
        return bad("[TARGET] needs a `range` line");
    };
    let spec = TopologicalSpec {
        vertices,
        edges,
        catalog,
        bounds,
        model,
        target,
    };
    if spec.vertices.len() < 2 {
        return bad("the seed graph needs at least two vertices");
    }
    if !seed_connected(&spec) {
        return bad("the seed graph is disconnected");
    }
    if (0..spec.vertices.len()).any(|v| spec.seed_degree(v) > 4) {
        return bad("seed vertex degree exceeds 4");
    }
    if let Some((lo, _)) = spec.bounds.n {
        if lo < spec.vertices.len() {
            return bad("lower bound on n is below the seed size");
        }
    }
    Ok(spec)
}

fn check_nonroot_valence(tree: &FringeNode) -> Result<(), String> {
    let mut bad = None;
    tree.for_each_descendant(&mut |node, _| {
        let total = u32::from(node.bond) + node.child_bond_sum() + u32::from(node.hydrogens);
        if !node.element.valences().iter().any(|&v| u32::from(v) == total) && bad.is_none() {
            bad = Some(format!("{} with {} bonds and {} H has no valid valence", node.element, total - u32::from(node.hydrogens), node.hydrogens));
        }
    });
    bad.map_or(Ok(()), Err)
}

fn seed_connected(spec: &TopologicalSpec) -> bool {
    let n = spec.vertices.len();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for e in &spec.edges {
            let w = if e.u == v {
                e.v
            } else if e.v == v {
                e.u
            } else {
                continue;
            };
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.into_iter().all(|b| b)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG: &str = "\
# five-ring seed with one typical edge
[SEED]
v r1
v r2
v r3
v r4
v r5
v g
e r1 r2 fixed
e r2 r3 fixed
e r3 r4 fixed
e r4 r5 fixed
e r5 r1 fixed
e r1 g typical 1 3
[FRINGE]
t1 C 1 C 0 H 1
t2 C 2 C 0 H 1 H 1
t3 C 1 C 0 C 1 C 2 H 3 H 3 H 3 H 2 H 2 H 1
t4 C 2 C 0 C 1 =O 2 O 2 H 3 H 1 H 1
[TARGET]
range -1 1
";

    #[test]
    fn parses_and_lays_out() {
        let s = parse_spec(FIG).unwrap();
        assert_eq!(s.typical_count(), 1);
        assert_eq!(s.rank(), 1);
        assert_eq!(s.catalog[3].residual, 1);
        assert_eq!(s.catalog[3].ac_counts().len(), 2);
        let l = s.layout();
        assert_eq!(l.vertices.len(), 8);
        // 5 ring edges, 2 forward, 3 closing
        assert_eq!(l.edges.len(), 10);
        assert!(!l.edge_present(5, &[1]) && l.edge_present(7, &[1]));
        assert!(l.edge_present(5, &[3]) && !l.edge_present(7, &[3]) && l.edge_present(9, &[3]));
        assert!(!l.vertex_active(6, &[1]));
        assert!(l.vertex_active(7, &[3]));
        assert_eq!(l.allowed_entries(&s, 5, 2), vec![2, 3]);
    }

    fn with(replace: &str, by: &str) -> Result<TopologicalSpec, InverseError> {
        parse_spec(&FIG.replace(replace, by))
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(with("typical 1 3", "typical 0 3"), Err(InverseError::Spec { line: 14, .. })));
        assert!(matches!(with("typical 1 3", "typical 3 1"), Err(InverseError::Spec { .. })));
        let e = with("[TARGET]\nrange -1 1\n", "").unwrap_err();
        assert!(e.to_string().contains("[TARGET]"), "{e}");
        assert!(matches!(parse_spec(&format!("{FIG}[BOUNDZ]\n")), Err(InverseError::Spec { .. })));
        assert!(matches!(with("[TARGET]", "[TARGETS]"), Err(InverseError::Spec { .. })));
        assert!(matches!(with("e r1 g typical", "e r1 q typical"), Err(InverseError::Spec { .. })));
        assert!(with("t1 C 1 C 0 H 1\n", "").is_ok());
        let empty = FIG.lines().filter(|l| !l.starts_with('t')).collect::<Vec<_>>().join("\n");
        assert!(matches!(parse_spec(&empty), Err(InverseError::InvalidSpec(_))));
        assert!(with("t2 C 2 C 0 H 1 H 1", "t2 C 3 C 0 H 1 H 1").is_err());
        assert!(with("t2 C 2 C 0 H 1 H 1", "t2 C 2 C 0 H 1 H 1 H 1 H 1").is_err());
        assert!(with("e r5 r1 fixed\n", "").is_ok());
        assert!(with("e r1 g typical 1 3", "e r2 r1 fixed").is_err());
    }

    #[test]
    fn bounds_keys_are_normalized() {
        let s = with("[TARGET]", "[BOUNDS]\nn 6 12\nec C3_C2_1 0 5\nac O_C_2 1 1\nbd 2 0 1\n[TARGET]").unwrap();
        assert_eq!(s.bounds.n, Some((6, 12)));
        assert!(s.bounds.ec.contains_key("ec_in_C2_C3_1"));
        assert!(s.bounds.ac.contains_key("ac_lf_O_C_2"));
        assert!(with("[TARGET]", "[BOUNDS]\nn 2 12\n[TARGET]").is_err());
    }
}
