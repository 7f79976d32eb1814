use std::sync::atomic::{AtomicU32, Ordering};

use rayon::prelude::*;

use crate::graph::DataGraph;

/// Number of triangles through each edge, indexed like [`DataGraph::edges`].
///
/// Edges are oriented from lower to higher `(degree, id)` rank; every
/// triangle is then found exactly once as `u → v → w` by intersecting the
/// forward lists of `u` and `v`. Work is split over source nodes; the counts
/// are integer sums and therefore independent of scheduling.
pub fn edge_triangle_counts(g: &DataGraph) -> Vec<u32> {
    let n = g.n_nodes();
    let rank = |u: usize| (g.degree(u), u);
    let mut forward: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (e, &(a, b)) in g.edges().iter().enumerate() {
        if rank(a) < rank(b) {
            forward[a].push((b, e));
        } else {
            forward[b].push((a, e));
        }
    }
    for list in &mut forward {
        list.sort_unstable();
    }

    let counts: Vec<AtomicU32> = (0..g.n_edges()).map(|_| AtomicU32::new(0)).collect();
    (0..n).into_par_iter().for_each(|u| {
        let fu = &forward[u];
        for &(v, e_uv) in fu {
            let fv = &forward[v];
            let (mut i, mut j) = (0, 0);
            while i < fu.len() && j < fv.len() {
                match fu[i].0.cmp(&fv[j].0) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        for e in [e_uv, fu[i].1, fv[j].1] {
                            counts[e].fetch_add(1, Ordering::Relaxed);
                        }
                        i += 1;
                        j += 1;
                    }
                }
            }
        }
    });
    counts.into_iter().map(AtomicU32::into_inner).collect()
}

/// Common neighbors of `u` and `v`, ascending.
pub(crate) fn common_neighbors<'a>(
    g: &'a DataGraph,
    u: usize,
    v: usize,
) -> impl Iterator<Item = usize> + 'a {
    let (a, b) = (g.neighbors(u), g.neighbors(v));
    let (mut i, mut j) = (0, 0);
    std::iter::from_fn(move || {
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    let w = a[i];
                    i += 1;
                    j += 1;
                    return Some(w);
                }
            }
        }
        None
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::complete_graph;

    #[test]
    fn small_cases() {
        assert_eq!(edge_triangle_counts(&complete_graph(3)), vec![1; 3]);
        assert_eq!(edge_triangle_counts(&complete_graph(4)), vec![2; 6]);
        let (path, _) = DataGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(edge_triangle_counts(&path), vec![0, 0]);
        let (empty, _) = DataGraph::from_edges(0, []).unwrap();
        assert!(edge_triangle_counts(&empty).is_empty());
    }
}
