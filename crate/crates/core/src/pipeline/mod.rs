//! End-to-end training: pretrain the encoder, then fit the detection head.

mod artifacts;
mod config;
mod detect;
mod pretrain;

pub use artifacts::{
    format_embeddings, format_loss_csv, format_predictions, load_embeddings, load_predictions,
    parse_embeddings, parse_predictions, save_embeddings, save_predictions, EvalReport,
};
pub use config::{Ablations, RunConfig, TrainConfig, CONFIG_KEYS};
pub use detect::{detect, DetectHead, DetectOutput};
pub use pretrain::{embed, pretrain, pretrain_with_view, EncoderInputs, PretrainOutput};

use crate::error::{Error, Result};
use crate::graph::DataGraph;
use crate::metrics::Scores;
use crate::split::{make_split, NodeRole, SplitAssignment};
use crate::tensor::checkpoint;

/// Scores of `pred` on the nodes with `role`, or on every node when `role`
/// is `None`.
pub fn evaluate(
    labels: &[usize],
    pred: &[usize],
    split: Option<(&SplitAssignment, NodeRole)>,
    cfg: &TrainConfig,
) -> Result<Scores> {
    if labels.len() != pred.len() {
        return Err(Error::dim(
            "evaluate",
            format!("{} labels, {} predictions", labels.len(), pred.len()),
        ));
    }
    let nodes: Vec<usize> = match split {
        Some((s, role)) => {
            if s.roles.len() != labels.len() {
                return Err(Error::dim(
                    "evaluate",
                    format!(
                        "split covers {} nodes, labels {}",
                        s.roles.len(),
                        labels.len()
                    ),
                ));
            }
            s.nodes(role)
        }
        None => (0..labels.len()).collect(),
    };
    let t: Vec<usize> = nodes.iter().map(|&i| labels[i]).collect();
    let p: Vec<usize> = nodes.iter().map(|&i| pred[i]).collect();
    Scores::compute(&t, &p, cfg.nmi_norm)
}

#[derive(Clone, Debug)]
pub struct Experiment {
    pub pretrain: PretrainOutput,
    pub split: SplitAssignment,
    pub detect: DetectOutput,
    /// Scores on the test split.
    pub scores: Scores,
}

impl Experiment {
    pub fn report(&self, run: &RunConfig) -> EvalReport {
        EvalReport {
            scores: self.scores,
            split: NodeRole::Test.as_str().into(),
            nodes: self.split.count(NodeRole::Test),
            seed: run.train.seed,
            config_hash: run.hash(),
            pretrain_epochs: Some(self.pretrain.losses.len()),
            detect_epochs: Some(self.detect.epochs_run),
        }
    }

    /// Encoder and head tensors in the checkpoint format.
    pub fn checkpoint_bytes(&self) -> Vec<u8> {
        let mut tensors = self.pretrain.encoder.checkpoint_tensors();
        tensors.extend(self.detect.head.named_params());
        checkpoint::encode(tensors.iter().map(|(n, m)| (n.as_str(), *m)))
    }
}

/// Pretrain, split, detect and score on the test nodes.
pub fn run_experiment(g: &DataGraph, cfg: &TrainConfig) -> Result<Experiment> {
    let pre = pretrain(g, cfg)?;
    finish_experiment(g, pre, cfg)
}

/// The detection half of [`run_experiment`].
pub fn finish_experiment(
    g: &DataGraph,
    pretrain: PretrainOutput,
    cfg: &TrainConfig,
) -> Result<Experiment> {
    let split = make_split(g, cfg.seed)?;
    let det = detect(g, &pretrain.embeddings, &split, cfg)?;
    let labels = g.labels().expect("make_split checked labels");
    let scores = evaluate(
        labels,
        &det.predictions,
        Some((&split, NodeRole::Test)),
        cfg,
    )?;
    Ok(Experiment {
        pretrain,
        split,
        detect: det,
        scores,
    })
}
