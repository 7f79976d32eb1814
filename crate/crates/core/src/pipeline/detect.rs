//! Supervised community-detection head trained on frozen embeddings.

use std::sync::Arc;

use crate::encoders::{Mlp, NormalizedAdjacency};
use crate::error::{Error, Result};
use crate::graph::DataGraph;
use crate::rng;
use crate::split::{NodeRole, SplitAssignment};
use crate::tensor::{Adam, AdamConfig, Matrix, Tape};

use super::TrainConfig;

/// Two-layer GCN classifier over `(A, Z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectHead {
    pub gcn: Mlp,
}

impl DetectHead {
    pub fn init(input: usize, hidden: usize, classes: usize, seed: u64) -> Self {
        let mut r = rng::stream(seed, rng::DETECT);
        DetectHead {
            gcn: Mlp::init(input, hidden, classes, &mut r),
        }
    }

    pub fn logits(&self, adj: &NormalizedAdjacency, z: &Matrix) -> Result<Matrix> {
        let mut tape = Tape::new();
        let vars = self.gcn.bind(&mut tape);
        let h0 = tape.constant(z.clone());
        let out = vars.gcn_forward(&mut tape, adj, h0)?;
        Ok(tape.value(out).clone())
    }

    pub fn named_params(&self) -> Vec<(String, &Matrix)> {
        ["w1", "b1", "w2", "b2"]
            .iter()
            .zip(self.gcn.tensors())
            .map(|(k, t)| (format!("head.{k}"), t))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct DetectOutput {
    /// Predicted class for every node.
    pub predictions: Vec<usize>,
    /// The head restored to its best validation epoch.
    pub head: DetectHead,
    /// 1-based epoch of the restored head.
    pub best_epoch: usize,
    pub best_val_acc: f64,
    pub epochs_run: usize,
}

fn accuracy_on(logits: &Matrix, nodes: &[usize], labels: &[usize]) -> f64 {
    if nodes.is_empty() {
        return 0.0;
    }
    let hits = nodes
        .iter()
        .filter(|&&i| {
            let row = logits.row(i);
            let best = (0..row.len()).fold(0, |b, c| if row[c] > row[b] { c } else { b });
            best == labels[i]
        })
        .count();
    hits as f64 / nodes.len() as f64
}

/// Mean cross-entropy of `logits` over `nodes`.
fn cross_entropy_on(logits: &Matrix, nodes: &[usize], labels: &[usize]) -> f64 {
    if nodes.is_empty() {
        return 0.0;
    }
    let total: f64 = nodes
        .iter()
        .map(|&i| {
            let row = logits.row(i);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
            lse - row[labels[i]]
        })
        .sum();
    total / nodes.len() as f64
}

/// Trains the head with cross-entropy on the training nodes. Stops after
/// `patience` epochs without a better validation accuracy and restores
/// the best head. Equal accuracies are ranked by validation loss.
pub fn detect(
    g: &DataGraph,
    embeddings: &Matrix,
    split: &SplitAssignment,
    cfg: &TrainConfig,
) -> Result<DetectOutput> {
    cfg.validate()?;
    let labels = g
        .labels()
        .ok_or_else(|| Error::Config("detection needs node labels".into()))?;
    let n = g.n_nodes();
    if embeddings.rows() != n || split.roles.len() != n {
        return Err(Error::dim(
            "detect",
            format!(
                "graph has {n} nodes, embeddings {} rows, split {} entries",
                embeddings.rows(),
                split.roles.len()
            ),
        ));
    }
    let classes = g.num_classes().unwrap_or(0);
    let train = split.nodes(NodeRole::Train);
    let val = split.nodes(NodeRole::Val);
    let first = train.first().map(|&i| labels[i]);
    if train.iter().all(|&i| Some(labels[i]) == first) {
        return Err(Error::Degenerate(format!(
            "training split has {} node(s) and a single class",
            train.len()
        )));
    }
    let targets = Arc::new(train.iter().map(|&i| (i, labels[i])).collect::<Vec<_>>());

    let adj = NormalizedAdjacency::new(g);
    let mut head = DetectHead::init(embeddings.cols(), cfg.head_hidden, classes, cfg.seed);
    let mut adam = Adam::new(AdamConfig::with_lr(cfg.lr));
    let mut best = (head.clone(), 0usize, f64::NEG_INFINITY);
    let mut best_val_loss = f64::INFINITY;
    let mut epochs_run = 0;

    for epoch in 1..=cfg.detect_epochs {
        epochs_run = epoch;
        let mut tape = Tape::new();
        let vars = head.gcn.bind(&mut tape);
        let h0 = tape.constant(embeddings.clone());
        let logits = vars.gcn_forward(&mut tape, &adj, h0)?;
        let val_acc = accuracy_on(tape.value(logits), &val, labels);
        let val_loss = cross_entropy_on(tape.value(logits), &val, labels);
        if val_acc > best.2 || (val_acc == best.2 && val_loss < best_val_loss) {
            best = (head.clone(), epoch, val_acc);
            best_val_loss = val_loss;
        } else if !val.is_empty() && epoch - best.1 >= cfg.patience {
            break;
        }
        let loss = tape.softmax_cross_entropy(logits, targets.clone())?;
        let value = tape.value(loss).get(0, 0);
        if !value.is_finite() {
            return Err(Error::Training(format!(
                "detection loss is {value} at epoch {epoch}"
            )));
        }
        tape.backward(loss)?;
        let grads: Vec<Matrix> = [vars.w1, vars.b1, vars.w2, vars.b2]
            .iter()
            .map(|&p| {
                tape.grad(p)
                    .cloned()
                    .expect("head parameters reach the loss")
            })
            .collect();
        let grad_refs: Vec<&Matrix> = grads.iter().collect();
        adam.step(&mut head.gcn.tensors_mut(), &grad_refs)?;
    }
    if val.is_empty() {
        best = (head, epochs_run, 0.0);
    }

    let (head, best_epoch, best_val_acc) = best;
    let predictions = head.logits(&adj, embeddings)?.argmax_rows();
    Ok(DetectOutput {
        predictions,
        head,
        best_epoch,
        best_val_acc,
        epochs_run,
    })
}
