use rayon::prelude::*;

use super::decode::{infer, validate_inferred};
use super::spec::{Layout, TopologicalSpec};
use super::{Choice, InferredGraph, InverseError};
use crate::learn::Predictor;

#[derive(Clone, Debug, PartialEq)]
pub struct EnumerateOptions {
    /// Largest number of (path length, tree placement) combinations searched.
    /// Bond multiplicities are then backtracked under the valence sums.
    pub limit: f64,
    /// Keep only graphs with this many heavy atoms.
    pub n: Option<usize>,
    /// Keep only graphs with this many hydrogens.
    pub nh: Option<usize>,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        EnumerateOptions {
            limit: 1e7,
            n: None,
            nh: None,
        }
    }
}

fn length_combos(layout: &Layout) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &(lb, ub) in &layout.lengths {
        out = out
            .into_iter()
            .flat_map(|c| {
                (lb..=ub).map(move |l| {
                    let mut c = c.clone();
                    c.push(l);
                    c
                })
            })
            .collect();
    }
    out
}

/// All multiplicity vectors over `edges` whose bond orders at every vertex
/// sum to `need`.
fn multiplicities(layout: &Layout, edges: &[usize], need: &[u32]) -> Vec<Vec<u8>> {
    fn go(layout: &Layout, edges: &[usize], last: &[usize], i: usize, left: &mut [u32], cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if i == edges.len() {
            if left.iter().all(|&r| r == 0) {
                out.push(cur.clone());
            }
            return;
        }
        let slot = layout.edges[edges[i]];
        for k in 1..=3u32 {
            if left[slot.a] < k || left[slot.b] < k {
                break;
            }
            left[slot.a] -= k;
            left[slot.b] -= k;
            let closed = (last[slot.a] != i || left[slot.a] == 0) && (last[slot.b] != i || left[slot.b] == 0);
            if closed {
                cur.push(k as u8);
                go(layout, edges, last, i + 1, left, cur, out);
                cur.pop();
            }
            left[slot.a] += k;
            left[slot.b] += k;
        }
    }
    let mut last = vec![usize::MAX; layout.vertices.len()];
    for (i, &s) in edges.iter().enumerate() {
        last[layout.edges[s].a] = i;
        last[layout.edges[s].b] = i;
    }
    let mut out = Vec::new();
    go(layout, edges, &last, 0, &mut need.to_vec(), &mut Vec::new(), &mut out);
    out
}

fn admissible(g: &InferredGraph, spec: &TopologicalSpec, predictor: &Predictor, rho: usize, opts: &EnumerateOptions) -> bool {
    if opts.n.is_some_and(|n| g.graph.vertex_count() != n) || opts.nh.is_some_and(|h| g.graph.hydrogen_total() != h) {
        return false;
    }
    let report = validate_inferred(g, spec, predictor, rho);
    if !report.checks.iter().all(|c| c.passed || c.name == "target") {
        return false;
    }
    let (lo, hi) = spec.target;
    if !(lo <= g.predicted && g.predicted <= hi) {
        return false;
    }
    // Network inputs are confined to the normalized training box.
    if let Predictor::Neural(nm) = predictor {
        let b = &nm.bounds;
        return nm.names.iter().enumerate().all(|(j, name)| {
            let z = b.normalize_value(j, g.features.get(name));
            (-1e-9..=1.0 + 1e-9).contains(&z)
        });
    }
    true
}

/// Every graph the specification can realize that meets its bounds and
/// target range, found by trying all path lengths, tree placements and bond
/// multiplicities. Each candidate is built, decomposed and featurized from
/// scratch. Realizations are listed in a fixed order; isomorphic graphs
/// reached through different placements are all kept.
pub fn brute_force_enumerate(
    spec: &TopologicalSpec,
    predictor: &Predictor,
    rho: usize,
    opts: &EnumerateOptions,
) -> Result<Vec<InferredGraph>, InverseError> {
    if let Some(c) = spec.catalog.iter().find(|c| c.height() > rho) {
        return Err(InverseError::TallTree {
            id: c.id.clone(),
            height: c.height(),
            rho,
        });
    }
    let layout = spec.layout();
    let combos = length_combos(&layout);
    let mut plans = Vec::new();
    let mut size = 0.0;
    for lens in combos {
        let active: Vec<usize> = (0..layout.vertices.len()).filter(|&v| layout.vertex_active(v, &lens)).collect();
        let edges: Vec<usize> = (0..layout.edges.len()).filter(|&s| layout.edge_present(s, &lens)).collect();
        let options: Vec<Vec<usize>> = active.iter().map(|&v| layout.allowed_entries(spec, v, rho)).collect();
        size += options.iter().map(|o| o.len() as f64).product::<f64>();
        plans.push((lens, active, edges, options));
    }
    if size > opts.limit {
        return Err(InverseError::SearchSpace { size, limit: opts.limit });
    }

    let mut out = Vec::new();
    for (lens, active, edges, options) in plans {
        let total: usize = options.iter().map(Vec::len).product();
        let found: Result<Vec<Vec<InferredGraph>>, InverseError> = (0..total)
            .into_par_iter()
            .map(|mut idx| {
                let mut fringe = vec![None; layout.vertices.len()];
                let mut need = vec![0u32; layout.vertices.len()];
                for (&v, opt) in active.iter().zip(&options) {
                    let e = opt[idx % opt.len()];
                    idx /= opt.len();
                    fringe[v] = Some(e);
                    need[v] = spec.catalog[e].residual;
                }
                let mut hits = Vec::new();
                for ms in multiplicities(&layout, &edges, &need) {
                    let mut mult = vec![None; layout.edges.len()];
                    for (&s, &k) in edges.iter().zip(&ms) {
                        mult[s] = Some(k);
                    }
                    let choice = Choice {
                        path_len: lens.clone(),
                        fringe: fringe.clone(),
                        mult,
                    };
                    let g = infer(spec, &layout, predictor, rho, choice)?;
                    if admissible(&g, spec, predictor, rho, opts) {
                        hits.push(g);
                    }
                }
                Ok(hits)
            })
            .collect();
        out.extend(found?.into_iter().flatten());
    }
    Ok(out)
}
