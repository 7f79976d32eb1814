//! Fixtures and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use gcls::tensor::{Matrix, Tape, Var};
use gcls::DataGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Two 6-node communities, each a dense triangle-rich block, joined by two
/// bridges. Attributes are 4-wide and community-flavoured.
pub fn fixture12() -> DataGraph {
    let block = [
        (0, 1),
        (0, 2),
        (1, 2),
        (1, 3),
        (2, 3),
        (3, 4),
        (2, 4),
        (4, 5),
        (3, 5),
        (0, 5),
    ];
    let mut edges: Vec<(usize, usize)> = block.to_vec();
    edges.extend(block.iter().map(|&(u, v)| (u + 6, v + 6)));
    edges.extend([(5, 6), (0, 11)]);
    let mut r = rng(12);
    let attrs = Matrix::from_vec(
        12,
        4,
        (0..48)
            .map(|k| {
                let (i, j) = (k / 4, k % 4);
                let base = if (i < 6) == (j < 2) { 1.0 } else { 0.0 };
                base + r.gen_range(-0.2..0.2)
            })
            .collect(),
    )
    .unwrap();
    DataGraph::from_edges(12, edges)
        .unwrap()
        .0
        .with_attrs(attrs)
        .unwrap()
        .with_labels((0..12).map(|i| i / 6).collect())
        .unwrap()
}

/// Erdős–Rényi graph with a random density, N in `1..=max_n`.
pub fn random_graph(r: &mut ChaCha8Rng, max_n: usize) -> DataGraph {
    let n = r.gen_range(1..=max_n);
    let p: f64 = r.gen_range(0.0..0.6);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if r.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    DataGraph::from_edges(n, edges).unwrap().0
}

pub fn random_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_vec(
        rows,
        cols,
        (0..rows * cols).map(|_| r.gen_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

fn adjacency_sets(g: &DataGraph) -> Vec<BTreeSet<usize>> {
    let mut adj = vec![BTreeSet::new(); g.n_nodes()];
    for &(u, v) in g.edges() {
        adj[u].insert(v);
        adj[v].insert(u);
    }
    adj
}

/// Triangles through each edge, by testing every third node.
pub fn oracle_triangles(g: &DataGraph) -> Vec<u32> {
    let adj = adjacency_sets(g);
    g.edges()
        .iter()
        .map(|&(u, v)| {
            (0..g.n_nodes())
                .filter(|&w| adj[u].contains(&w) && adj[v].contains(&w))
                .count() as u32
        })
        .collect()
}

/// Core number of each node: the largest k whose k-core still holds it.
pub fn oracle_cores(g: &DataGraph) -> Vec<u32> {
    let n = g.n_nodes();
    let mut core = vec![0u32; n];
    for k in 1..=n as u32 {
        let mut alive = vec![true; n];
        loop {
            let adj = adjacency_sets(g);
            let drop: Vec<usize> = (0..n)
                .filter(|&u| alive[u] && (adj[u].iter().filter(|&&v| alive[v]).count() as u32) < k)
                .collect();
            if drop.is_empty() {
                break;
            }
            for u in drop {
                alive[u] = false;
            }
        }
        for u in 0..n {
            if alive[u] {
                core[u] = k;
            }
        }
    }
    core
}

/// Truss number of each edge: the largest k whose k-truss (every edge in
/// at least k-2 triangles) still holds it. Edges in no triangle get 2.
pub fn oracle_truss(g: &DataGraph) -> Vec<u32> {
    let edges = g.edges();
    let mut truss = vec![2u32; edges.len()];
    for k in 3..=g.n_nodes() as u32 + 1 {
        let mut alive = vec![true; edges.len()];
        loop {
            let live: BTreeSet<(usize, usize)> = edges
                .iter()
                .zip(&alive)
                .filter(|(_, &a)| a)
                .map(|(&e, _)| e)
                .collect();
            let has = |a: usize, b: usize| live.contains(&(a.min(b), a.max(b)));
            let drop: Vec<usize> = (0..edges.len())
                .filter(|&i| {
                    let (u, v) = edges[i];
                    alive[i]
                        && ((0..g.n_nodes()).filter(|&w| has(u, w) && has(v, w)).count() as u32)
                            < k - 2
                })
                .collect();
            if drop.is_empty() {
                break;
            }
            for i in drop {
                alive[i] = false;
            }
        }
        for i in 0..edges.len() {
            if alive[i] {
                truss[i] = k;
            }
        }
    }
    truss
}

fn unit_rows(z: &Matrix) -> Vec<Vec<f64>> {
    (0..z.rows())
        .map(|i| {
            let row = z.row(i);
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            row.iter().map(|x| x / norm).collect()
        })
        .collect()
}

/// Structure contrastive loss written out term by term. `high[i]` is the
/// high-level neighbourhood of node `i`.
pub fn oracle_loss(z1: &Matrix, z2: &Matrix, high: &[Vec<usize>], tau: f64) -> f64 {
    let n = z1.rows();
    let (a, b) = (unit_rows(z1), unit_rows(z2));
    let sim = |x: &[f64], y: &[f64]| (x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>() / tau).exp();
    let mut total = 0.0;
    for (me, other) in [(&a, &b), (&b, &a)] {
        for i in 0..n {
            let mut pos = sim(&me[i], &other[i]);
            for &j in &high[i] {
                pos += sim(&me[i], &me[j]) + sim(&me[i], &other[j]);
            }
            let mut neg = 0.0;
            for j in 0..n {
                if j != i && !high[i].contains(&j) {
                    neg += sim(&me[i], &me[j]) + sim(&me[i], &other[j]);
                }
            }
            let count = (2 * high[i].len() + 1) as f64;
            total += -((pos / count) / (pos + neg)).ln();
        }
    }
    total / (2 * n) as f64
}

/// Largest element-wise relative error between the tape gradient and
/// central differences for every input of `f`, which must return a 1x1 var.
pub fn gradient_error(inputs: &[Matrix], f: impl Fn(&mut Tape, &[Var]) -> Var) -> f64 {
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|m| tape.param(m.clone())).collect();
    let loss = f(&mut tape, &vars);
    tape.backward(loss).unwrap();
    let analytic: Vec<Matrix> = vars
        .iter()
        .zip(inputs)
        .map(|(&v, m)| {
            tape.grad(v)
                .cloned()
                .unwrap_or_else(|| Matrix::zeros(m.rows(), m.cols()))
        })
        .collect();
    let eval = |ms: &[Matrix]| {
        let mut t = Tape::new();
        let vs: Vec<Var> = ms.iter().map(|m| t.param(m.clone())).collect();
        let l = f(&mut t, &vs);
        t.value(l).get(0, 0)
    };
    let h = 1e-5;
    let mut worst = 0.0f64;
    for (k, m) in inputs.iter().enumerate() {
        for e in 0..m.len() {
            let mut plus = inputs.to_vec();
            plus[k].data_mut()[e] += h;
            let mut minus = inputs.to_vec();
            minus[k].data_mut()[e] -= h;
            let numeric = (eval(&plus) - eval(&minus)) / (2.0 * h);
            worst = worst.max(relative_error(analytic[k].data()[e], numeric));
        }
    }
    worst
}

/// `|a - b| / max(|a|, |b|, 1e-4)`. The floor keeps near-zero gradients
/// from turning finite-difference noise into large ratios.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-4)
}

/// Gradient check of the full contrastive loss with respect to every
/// encoder parameter on `g`, using small layer widths.
pub fn encoder_gradient_error(g: &DataGraph, use_sss: bool) -> f64 {
    use gcls::encoders::Encoder;
    use gcls::loss::total_loss;
    use gcls::mining::build_structure_view;
    use gcls::pipeline::{Ablations, EncoderInputs, TrainConfig};

    let cfg = TrainConfig {
        d: 3,
        sss_hidden: 5,
        gcn_hidden: 5,
        out_dim: 4,
        tau: 0.5,
        ablations: Ablations {
            use_sss,
            ..Ablations::full()
        },
        ..TrainConfig::default()
    };
    let view = build_structure_view(g, &cfg.patterns).unwrap();
    let inputs = EncoderInputs::new(g, &view, &cfg).unwrap();
    let mut r = rng(3);
    let mut p = rng(4);
    let enc = if use_sss {
        Encoder::init(inputs.dims(&cfg), &mut r)
    } else {
        Encoder::init_projected(inputs.dims(&cfg), &mut r, &mut p)
    };
    // Non-zero biases so their gradients are exercised away from init.
    let mut enc = enc;
    for m in enc.params_mut() {
        if m.rows() == 1 {
            for x in m.data_mut() {
                *x = r.gen_range(-0.3..0.3);
            }
        }
    }
    let loss_of = |e: &Encoder| -> (f64, Vec<Matrix>) {
        let mut t = Tape::new();
        let vars = e.bind(&mut t);
        let (z, zh) = vars
            .encode_views(&mut t, &inputs.s, &inputs.x, &inputs.adj, &inputs.adj_high)
            .unwrap();
        let l = total_loss(&mut t, z, zh, &inputs.pairs).unwrap();
        let v = t.value(l).get(0, 0);
        t.backward(l).unwrap();
        let grads = vars
            .params
            .iter()
            .map(|&p| t.grad(p).unwrap().clone())
            .collect();
        (v, grads)
    };
    let (_, analytic) = loss_of(&enc);
    let h = 1e-5;
    let mut worst = 0.0f64;
    let shapes: Vec<usize> = enc.params_mut().iter().map(|m| m.len()).collect();
    for (k, &len) in shapes.iter().enumerate() {
        for e in 0..len {
            let mut plus = enc.clone();
            plus.params_mut()[k].data_mut()[e] += h;
            let mut minus = enc.clone();
            minus.params_mut()[k].data_mut()[e] -= h;
            let numeric = (loss_of(&plus).0 - loss_of(&minus).0) / (2.0 * h);
            worst = worst.max(relative_error(analytic[k].data()[e], numeric));
        }
    }
    worst
}
