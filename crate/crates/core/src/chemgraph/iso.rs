use super::ChemicalGraph;

fn signature(g: &ChemicalGraph, v: usize) -> (u8, u8, Vec<u8>) {
    let mut orders: Vec<u8> = g.neighbors(v).iter().map(|&(_, e)| g.edges()[e].order).collect();
    orders.sort_unstable();
    (g.element(v) as u8, g.hydrogens(v), orders)
}

fn order_between(g: &ChemicalGraph, u: usize, v: usize) -> Option<u8> {
    g.neighbors(u).iter().find(|&&(w, _)| w == v).map(|&(_, e)| g.edges()[e].order)
}

/// Backtracking search for a bijection preserving elements, hydrogen counts
/// and bond multiplicities.
pub(super) fn isomorphic(a: &ChemicalGraph, b: &ChemicalGraph) -> bool {
    let n = a.vertex_count();
    if n != b.vertex_count() || a.edges().len() != b.edges().len() {
        return false;
    }
    let sa: Vec<_> = (0..n).map(|v| signature(a, v)).collect();
    let sb: Vec<_> = (0..n).map(|v| signature(b, v)).collect();
    let mut ka = sa.clone();
    let mut kb = sb.clone();
    ka.sort();
    kb.sort();
    if ka != kb {
        return false;
    }
    // Visit `a` in BFS order from each component so every step after the
    // first is constrained by an already mapped neighbour.
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut q = std::collections::VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            order.push(v);
            for &(w, _) in a.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    q.push_back(w);
                }
            }
        }
    }
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    fn go(
        i: usize,
        order: &[usize],
        a: &ChemicalGraph,
        b: &ChemicalGraph,
        sa: &[(u8, u8, Vec<u8>)],
        sb: &[(u8, u8, Vec<u8>)],
        map: &mut [usize],
        used: &mut [bool],
    ) -> bool {
        if i == order.len() {
            return true;
        }
        let v = order[i];
        for w in 0..b.vertex_count() {
            if used[w] || sa[v] != sb[w] {
                continue;
            }
            let consistent = a.neighbors(v).iter().all(|&(x, e)| {
                map[x] == usize::MAX || order_between(b, w, map[x]) == Some(a.edges()[e].order)
            });
            if !consistent {
                continue;
            }
            map[v] = w;
            used[w] = true;
            if go(i + 1, order, a, b, sa, sb, map, used) {
                return true;
            }
            map[v] = usize::MAX;
            used[w] = false;
        }
        false
    }
    go(0, &order, a, b, &sa, &sb, &mut map, &mut used)
}
