use super::triangles::{common_neighbors, edge_triangle_counts};
use crate::graph::DataGraph;

/// Truss number of every edge, indexed like [`DataGraph::edges`].
///
/// Edges are peeled in increasing order of current support; an edge peeled
/// at support `s` has truss number `s + 2`. Supports live in a bucket array
/// so each decrement is O(1).
pub fn truss_numbers(g: &DataGraph) -> Vec<u32> {
    let m = g.n_edges();
    let mut sup: Vec<usize> = edge_triangle_counts(g)
        .into_iter()
        .map(|c| c as usize)
        .collect();
    let max_sup = sup.iter().copied().max().unwrap_or(0);

    let mut bin = vec![0usize; max_sup + 2];
    for &s in &sup {
        bin[s + 1] += 1;
    }
    for s in 1..bin.len() {
        bin[s] += bin[s - 1];
    }
    let mut pos = vec![0usize; m];
    let mut order = vec![0usize; m];
    let mut fill = bin.clone();
    for e in 0..m {
        pos[e] = fill[sup[e]];
        order[pos[e]] = e;
        fill[sup[e]] += 1;
    }

    let mut removed = vec![false; m];
    let mut truss = vec![0u32; m];
    for i in 0..m {
        let e = order[i];
        let k = sup[e];
        let (u, v) = g.edges()[e];
        for w in common_neighbors(g, u, v) {
            let euw = g.edge_index(u, w).expect("neighbor edge exists");
            let evw = g.edge_index(v, w).expect("neighbor edge exists");
            if removed[euw] || removed[evw] {
                continue;
            }
            for f in [euw, evw] {
                if sup[f] > k {
                    let sf = sup[f];
                    let pf = pos[f];
                    let pg = bin[sf];
                    let h = order[pg];
                    if h != f {
                        order.swap(pf, pg);
                        pos[f] = pg;
                        pos[h] = pf;
                    }
                    bin[sf] += 1;
                    sup[f] -= 1;
                }
            }
        }
        removed[e] = true;
        truss[e] = k as u32 + 2;
    }
    truss
}
