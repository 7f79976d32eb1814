//! Random graph generators used as fixtures and benchmarks.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::DataGraph;
use crate::rng;
use crate::tensor::Matrix;

pub fn complete_graph(n: usize) -> DataGraph {
    let pairs = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
    DataGraph::from_edges(n, pairs).expect("ids in range").0
}

/// G(n, p).
pub fn erdos_renyi<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> DataGraph {
    let mut pairs = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                pairs.push((u, v));
            }
        }
    }
    DataGraph::from_edges(n, pairs).expect("ids in range").0
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlantedPartition {
    pub blocks: usize,
    pub block_size: usize,
    pub p_in: f64,
    pub p_out: f64,
}

impl PlantedPartition {
    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..=1.0).contains(&self.p_in)
            && (0.0..=1.0).contains(&self.p_out)
            && self.p_out < self.p_in;
        if !ok {
            return Err(Error::Config(format!(
                "planted partition needs 0 <= p_out < p_in <= 1, got p_in={} p_out={}",
                self.p_in, self.p_out
            )));
        }
        if self.blocks == 0 || self.block_size == 0 {
            return Err(Error::Config(
                "planted partition needs blocks and block size > 0".into(),
            ));
        }
        Ok(())
    }

    /// Expected edge count and its binomial standard deviation.
    pub fn edge_moments(&self) -> (f64, f64) {
        let s = self.block_size as f64;
        let within = self.blocks as f64 * s * (s - 1.0) / 2.0;
        let across = (self.blocks * (self.blocks - 1)) as f64 / 2.0 * s * s;
        let mean = within * self.p_in + across * self.p_out;
        let var = within * self.p_in * (1.0 - self.p_in) + across * self.p_out * (1.0 - self.p_out);
        (mean, var.sqrt())
    }

    /// Node `i` belongs to block `i / block_size`. The graph carries the
    /// block labels and one-hot block attributes.
    pub fn generate(&self, seed: u64) -> Result<DataGraph> {
        self.validate()?;
        let n = self.blocks * self.block_size;
        let block = |i: usize| i / self.block_size;
        let mut rng = rng::stream(seed, rng::SYNTH);
        let mut pairs = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                let p = if block(u) == block(v) {
                    self.p_in
                } else {
                    self.p_out
                };
                if rng.gen_bool(p) {
                    pairs.push((u, v));
                }
            }
        }
        let labels: Vec<usize> = (0..n).map(block).collect();
        let mut attrs = Matrix::zeros(n, self.blocks);
        for (i, &b) in labels.iter().enumerate() {
            attrs.set(i, b, 1.0);
        }
        DataGraph::from_edges(n, pairs)?
            .0
            .with_attrs(attrs)?
            .with_labels(labels)
    }
}
