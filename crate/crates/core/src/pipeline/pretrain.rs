//! Self-supervised encoder training with the structure contrastive loss.

use std::sync::Arc;

use crate::encoders::{Encoder, EncoderDims, Features, NormalizedAdjacency};
use crate::error::{Error, Result};
use crate::graph::DataGraph;
use crate::loss::{normalize_rows, total_loss, PairContext};
use crate::mining::{build_structure_view, StructureView};
use crate::rng;
use crate::tensor::{Adam, AdamConfig, CsrMatrix, Matrix, Tape};

use super::TrainConfig;

/// Encoder inputs for one graph under one configuration.
#[derive(Clone, Debug)]
pub struct EncoderInputs {
    pub s: Features,
    pub x: Features,
    pub adj: NormalizedAdjacency,
    pub adj_high: NormalizedAdjacency,
    pub pairs: PairContext,
}

impl EncoderInputs {
    pub fn new(g: &DataGraph, view: &StructureView, cfg: &TrainConfig) -> Result<Self> {
        let n = g.n_nodes();
        if view.n_nodes() != n {
            return Err(Error::dim(
                "structure_view",
                format!("view has {} nodes, graph has {n}", view.n_nodes()),
            ));
        }
        if view.edges != g.edges() {
            return Err(Error::Config(
                "structure view was mined from a different edge set".into(),
            ));
        }
        let s = if cfg.ablations.use_s {
            Features::Sparse(view.sim.clone())
        } else {
            Features::Sparse(Arc::new(CsrMatrix::identity(n)))
        };
        let x = if cfg.no_attributes {
            Features::Sparse(Arc::new(g.adjacency()))
        } else {
            let attrs = g.attrs().ok_or_else(|| {
                Error::Config("graph has no attributes; enable no_attributes mode".into())
            })?;
            Features::auto(attrs)
        };
        Ok(EncoderInputs {
            s,
            x,
            adj: NormalizedAdjacency::new(g),
            adj_high: NormalizedAdjacency::new(&view.high),
            pairs: PairContext::new(&view.high, cfg.tau)?,
        })
    }

    pub fn dims(&self, cfg: &TrainConfig) -> EncoderDims {
        EncoderDims {
            structure_in: self.s.cols(),
            attr_in: self.x.cols(),
            sss_hidden: cfg.sss_hidden,
            semantic: cfg.d,
            gcn_hidden: cfg.gcn_hidden,
            out: cfg.out_dim,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PretrainOutput {
    /// Row-normalised embeddings from the final parameters.
    pub embeddings: Matrix,
    pub encoder: Encoder,
    /// Loss at each epoch, evaluated before that epoch's update.
    pub losses: Vec<f64>,
    pub view: StructureView,
}

/// Mines `cfg.patterns` and trains an encoder on `g`.
pub fn pretrain(g: &DataGraph, cfg: &TrainConfig) -> Result<PretrainOutput> {
    let view = build_structure_view(g, &cfg.patterns)?;
    pretrain_with_view(g, view, cfg)
}

/// Like [`pretrain`] with an already mined structure view.
pub fn pretrain_with_view(
    g: &DataGraph,
    view: StructureView,
    cfg: &TrainConfig,
) -> Result<PretrainOutput> {
    cfg.validate()?;
    let inputs = EncoderInputs::new(g, &view, cfg)?;
    let dims = inputs.dims(cfg);
    let mut init = rng::stream(cfg.seed, rng::INIT);
    let mut encoder = if cfg.ablations.use_sss {
        Encoder::init(dims, &mut init)
    } else {
        let mut proj = rng::stream(cfg.seed, rng::PROJECTION);
        Encoder::init_projected(dims, &mut init, &mut proj)
    };

    let mut losses = Vec::new();
    if cfg.ablations.use_scl {
        let mut adam = Adam::new(AdamConfig::with_lr(cfg.lr));
        losses.reserve(cfg.pretrain_epochs);
        for epoch in 1..=cfg.pretrain_epochs {
            let mut tape = Tape::new();
            let vars = encoder.bind(&mut tape);
            let (z, zh) = vars.encode_views(
                &mut tape,
                &inputs.s,
                &inputs.x,
                &inputs.adj,
                &inputs.adj_high,
            )?;
            let loss = total_loss(&mut tape, z, zh, &inputs.pairs)?;
            let value = tape.value(loss).get(0, 0);
            if !value.is_finite() {
                return Err(Error::Training(format!("loss is {value} at epoch {epoch}")));
            }
            tape.backward(loss)?;
            let grads: Vec<Matrix> = vars
                .params
                .iter()
                .map(|&p| {
                    tape.grad(p).cloned().unwrap_or_else(|| {
                        let (r, c) = tape.value(p).shape();
                        Matrix::zeros(r, c)
                    })
                })
                .collect();
            let grad_refs: Vec<&Matrix> = grads.iter().collect();
            adam.step(&mut encoder.params_mut(), &grad_refs)
                .map_err(|e| match e {
                    Error::Training(msg) => Error::Training(format!("epoch {epoch}: {msg}")),
                    other => other,
                })?;
            losses.push(value);
        }
    }

    let embeddings = embed(&encoder, &inputs)?;
    Ok(PretrainOutput {
        embeddings,
        encoder,
        losses,
        view,
    })
}

/// Row-normalised `Z` for the original adjacency.
pub fn embed(encoder: &Encoder, inputs: &EncoderInputs) -> Result<Matrix> {
    let mut tape = Tape::new();
    let vars = encoder.bind(&mut tape);
    let z = vars.encode(&mut tape, &inputs.s, &inputs.x, &inputs.adj)?;
    Ok(normalize_rows(tape.value(z)))
}
