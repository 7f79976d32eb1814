use crate::graph::DataGraph;

/// Core number of every node by bucket peeling (Batagelj–Zaversnik), O(|E|).
pub fn core_numbers(g: &DataGraph) -> Vec<u32> {
    let n = g.n_nodes();
    let mut deg: Vec<usize> = g.degrees();
    let max_deg = deg.iter().copied().max().unwrap_or(0);

    // bin[d] = first position of degree-d nodes in `order`
    let mut bin = vec![0usize; max_deg + 2];
    for &d in &deg {
        bin[d + 1] += 1;
    }
    for d in 1..bin.len() {
        bin[d] += bin[d - 1];
    }
    let mut pos = vec![0usize; n];
    let mut order = vec![0usize; n];
    let mut fill = bin.clone();
    for v in 0..n {
        pos[v] = fill[deg[v]];
        order[pos[v]] = v;
        fill[deg[v]] += 1;
    }

    for i in 0..n {
        let v = order[i];
        for &u in g.neighbors(v) {
            if deg[u] > deg[v] {
                let du = deg[u];
                let pu = pos[u];
                let pw = bin[du];
                let w = order[pw];
                if u != w {
                    order.swap(pu, pw);
                    pos[u] = pw;
                    pos[w] = pu;
                }
                bin[du] += 1;
                deg[u] -= 1;
            }
        }
    }
    deg.into_iter().map(|d| d as u32).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::complete_graph;

    #[test]
    fn k4_and_star() {
        assert_eq!(core_numbers(&complete_graph(4)), vec![3; 4]);
        let (star, _) = DataGraph::from_edges(6, (1..6).map(|i| (0, i))).unwrap();
        assert_eq!(core_numbers(&star), vec![1; 6]);
    }

    #[test]
    fn isolated_nodes_are_zero() {
        let (g, _) = DataGraph::from_edges(4, [(0, 1)]).unwrap();
        assert_eq!(core_numbers(&g), vec![1, 1, 0, 0]);
    }

    #[test]
    fn k4_with_pendant() {
        let (g, _) =
            DataGraph::from_edges(5, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (3, 4)])
                .unwrap();
        assert_eq!(core_numbers(&g), vec![3, 3, 3, 3, 1]);
    }
}
