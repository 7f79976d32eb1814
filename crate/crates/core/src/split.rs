//! Seeded 8:1:1 train/validation/test split over nodes.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::graph::DataGraph;
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeRole {
    Train,
    Val,
    Test,
}

impl NodeRole {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeRole::Train => "train",
            NodeRole::Val => "val",
            NodeRole::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(NodeRole::Train),
            "val" => Some(NodeRole::Val),
            "test" => Some(NodeRole::Test),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitAssignment {
    pub roles: Vec<NodeRole>,
    pub seed: u64,
}

impl SplitAssignment {
    pub fn nodes(&self, role: NodeRole) -> Vec<usize> {
        (0..self.roles.len())
            .filter(|&i| self.roles[i] == role)
            .collect()
    }

    pub fn count(&self, role: NodeRole) -> usize {
        self.roles.iter().filter(|&&r| r == role).count()
    }

    /// One `node role` line per node.
    pub fn to_text(&self) -> String {
        self.roles
            .iter()
            .enumerate()
            .map(|(i, r)| format!("{i} {}\n", r.as_str()))
            .collect()
    }

    pub fn from_text(text: &str, seed: u64) -> Result<Self> {
        let mut roles = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut toks = line.split_whitespace();
            let bad = || Error::parse("split", i + 1, "expected `node role`");
            let (Some(node), Some(role), None) = (toks.next(), toks.next(), toks.next()) else {
                return Err(bad());
            };
            if node.parse::<usize>().ok() != Some(roles.len()) {
                return Err(Error::parse(
                    "split",
                    i + 1,
                    "nodes must be listed as 0, 1, 2, ...",
                ));
            }
            roles.push(NodeRole::parse(role).ok_or_else(bad)?);
        }
        Ok(SplitAssignment { roles, seed })
    }
}

/// Sizes for `n` nodes: train and validation are rounded to nearest
/// (`round(0.8n)`, `round(0.1n)`), test takes the remainder, so each part
/// is within one node of its exact share.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let train = (8 * n + 5) / 10;
    let val = (n + 5) / 10;
    (train, val, n - train - val)
}

/// Pure function of `(node count, seed)`.
pub fn split_nodes(n: usize, seed: u64) -> SplitAssignment {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, rng::SPLIT));
    let (train, val, _) = split_sizes(n);
    let mut roles = vec![NodeRole::Test; n];
    for (rank, &node) in order.iter().enumerate() {
        roles[node] = if rank < train {
            NodeRole::Train
        } else if rank < train + val {
            NodeRole::Val
        } else {
            NodeRole::Test
        };
    }
    SplitAssignment { roles, seed }
}

pub fn make_split(g: &DataGraph, seed: u64) -> Result<SplitAssignment> {
    if g.labels().is_none() {
        return Err(Error::Config("a split needs ground-truth labels".into()));
    }
    Ok(split_nodes(g.n_nodes(), seed))
}
