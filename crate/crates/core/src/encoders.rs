//! Structure-semantic perceptrons and the weight-shared two-layer GCN.
//!
//! One pass of [`Encoder::encode_views`] maps the structure similarity rows
//! `S` and attribute rows `X` through two independent two-layer perceptrons
//! (`S' = relu(S W1 + b1) W2 + b2`, likewise `X'`), concatenates them into
//! `H0 = [S' | X']`, and runs the same GCN over the original and the
//! high-level adjacency:
//!
//! ```text
//! Z   = Â  relu(Â  H0 W1 + b1) W2 + b2
//! Z^H = Âh relu(Âh H0 W1 + b1) W2 + b2
//! ```
//!
//! where `Â = D^-1/2 (A + I) D^-1/2`. The last layer of each stack is linear.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::DataGraph;
use crate::tensor::{init::glorot_uniform, CsrMatrix, Matrix, Tape, Var};

/// Constant input rows for the first perceptron layer.
#[derive(Clone, Debug)]
pub enum Features {
    Dense(Arc<Matrix>),
    Sparse(Arc<CsrMatrix>),
}

impl Features {
    /// Stores `m` sparsely when at most 30% of its entries are non-zero.
    pub fn auto(m: &Matrix) -> Features {
        let nnz = m.data().iter().filter(|&&x| x != 0.0).count();
        if m.is_empty() || nnz * 10 <= m.len() * 3 {
            Features::Sparse(Arc::new(CsrMatrix::from_dense(m)))
        } else {
            Features::Dense(Arc::new(m.clone()))
        }
    }

    pub fn rows(&self) -> usize {
        match self {
            Features::Dense(m) => m.rows(),
            Features::Sparse(s) => s.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Features::Dense(m) => m.cols(),
            Features::Sparse(s) => s.cols(),
        }
    }

    pub fn to_dense(&self) -> Matrix {
        match self {
            Features::Dense(m) => (**m).clone(),
            Features::Sparse(s) => s.to_dense(),
        }
    }

    /// `self · w` on the tape.
    pub fn project(&self, tape: &mut Tape, w: Var) -> Result<Var> {
        match self {
            Features::Dense(m) => {
                let x = tape.constant((**m).clone());
                tape.matmul(x, w)
            }
            Features::Sparse(s) => tape.sparse_matmul(s.clone(), w),
        }
    }
}

/// `D̂^-1/2 (A + I) D̂^-1/2` for a symmetric adjacency without self-loops.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedAdjacency(Arc<CsrMatrix>);

impl NormalizedAdjacency {
    pub fn new(g: &DataGraph) -> Self {
        let n = g.n_nodes();
        let inv_sqrt: Vec<f64> = (0..n)
            .map(|u| 1.0 / ((g.degree(u) + 1) as f64).sqrt())
            .collect();
        let mut trips = Vec::with_capacity(n + 2 * g.n_edges());
        trips.extend((0..n).map(|u| (u, u, inv_sqrt[u] * inv_sqrt[u])));
        for &(u, v) in g.edges() {
            let w = inv_sqrt[u] * inv_sqrt[v];
            trips.push((u, v, w));
            trips.push((v, u, w));
        }
        NormalizedAdjacency(Arc::new(
            CsrMatrix::from_triplets(n, n, trips).expect("edges are in range"),
        ))
    }

    pub fn matrix(&self) -> &Arc<CsrMatrix> {
        &self.0
    }
}

/// Two-layer perceptron `relu(x W1 + b1) W2 + b2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub w1: Matrix,
    pub b1: Matrix,
    pub w2: Matrix,
    pub b2: Matrix,
}

#[derive(Clone, Copy, Debug)]
pub struct MlpVars {
    pub w1: Var,
    pub b1: Var,
    pub w2: Var,
    pub b2: Var,
}

impl Mlp {
    pub fn init<R: Rng + ?Sized>(input: usize, hidden: usize, output: usize, rng: &mut R) -> Self {
        let w1 = glorot_uniform(input, hidden, rng);
        let w2 = glorot_uniform(hidden, output, rng);
        Mlp {
            w1,
            b1: Matrix::zeros(1, hidden),
            w2,
            b2: Matrix::zeros(1, output),
        }
    }

    pub fn input_width(&self) -> usize {
        self.w1.rows()
    }

    pub fn output_width(&self) -> usize {
        self.w2.cols()
    }

    pub(crate) fn tensors(&self) -> [&Matrix; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub(crate) fn tensors_mut(&mut self) -> [&mut Matrix; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    pub(crate) fn bind(&self, tape: &mut Tape) -> MlpVars {
        MlpVars {
            w1: tape.param(self.w1.clone()),
            b1: tape.param(self.b1.clone()),
            w2: tape.param(self.w2.clone()),
            b2: tape.param(self.b2.clone()),
        }
    }

    fn from_tensors(mut take: impl FnMut(&str) -> Result<Matrix>, prefix: &str) -> Result<Self> {
        Ok(Mlp {
            w1: take(&format!("{prefix}.w1"))?,
            b1: take(&format!("{prefix}.b1"))?,
            w2: take(&format!("{prefix}.w2"))?,
            b2: take(&format!("{prefix}.b2"))?,
        })
    }
}

impl MlpVars {
    /// Perceptron over constant input rows.
    pub fn forward(&self, tape: &mut Tape, x: &Features) -> Result<Var> {
        let w = tape.value(self.w1).rows();
        if x.cols() != w {
            return Err(Error::dim(
                "sss_forward",
                format!("input width {} but layer expects {w}", x.cols()),
            ));
        }
        let h = x.project(tape, self.w1)?;
        let h = tape.add_bias(h, self.b1)?;
        let h = tape.relu(h);
        let h = tape.matmul(h, self.w2)?;
        tape.add_bias(h, self.b2)
    }

    /// Graph convolution stack over a dense variable input.
    pub fn gcn_forward(&self, tape: &mut Tape, adj: &NormalizedAdjacency, h0: Var) -> Result<Var> {
        let (hw, w) = (tape.value(h0).cols(), tape.value(self.w1).rows());
        if hw != w {
            return Err(Error::dim(
                "gcn_forward",
                format!("input width {hw} but layer expects {w}"),
            ));
        }
        let h = tape.matmul(h0, self.w1)?;
        let h = tape.sparse_matmul(adj.matrix().clone(), h)?;
        let h = tape.add_bias(h, self.b1)?;
        let h = tape.relu(h);
        let h = tape.matmul(h, self.w2)?;
        let h = tape.sparse_matmul(adj.matrix().clone(), h)?;
        tape.add_bias(h, self.b2)
    }
}

/// Layer widths of an [`Encoder`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EncoderDims {
    /// Width of `S` rows, the node count.
    pub structure_in: usize,
    /// Width of `X` rows.
    pub attr_in: usize,
    pub sss_hidden: usize,
    /// Semantic width `d` of `S'` and `X'`.
    pub semantic: usize,
    pub gcn_hidden: usize,
    pub out: usize,
}

/// How `H0` is formed from `S` and `X`.
#[derive(Clone, Debug, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum SemanticStage {
    /// Trainable perceptrons `f_S` and `f_X`.
    Learned { s: Mlp, x: Mlp },
    /// Fixed random projections to width `d` (the no-SSS ablation).
    Projected { s: Matrix, x: Matrix },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Encoder {
    pub semantic: SemanticStage,
    /// Shared by both views.
    pub gcn: Mlp,
}

/// Tape handles for one bound [`Encoder`].
#[derive(Clone, Debug)]
pub struct EncoderVars {
    semantic: Option<(MlpVars, MlpVars)>,
    projections: Option<(Var, Var)>,
    pub gcn: MlpVars,
    /// Trainable leaves in [`Encoder::params_mut`] order.
    pub params: Vec<Var>,
}

impl Encoder {
    pub fn init<R: Rng + ?Sized>(dims: EncoderDims, rng: &mut R) -> Self {
        let s = Mlp::init(dims.structure_in, dims.sss_hidden, dims.semantic, rng);
        let x = Mlp::init(dims.attr_in, dims.sss_hidden, dims.semantic, rng);
        let gcn = Mlp::init(2 * dims.semantic, dims.gcn_hidden, dims.out, rng);
        Encoder {
            semantic: SemanticStage::Learned { s, x },
            gcn,
        }
    }

    /// Same GCN initialisation as [`Encoder::init`] with the perceptrons
    /// replaced by fixed projections drawn from `proj_rng`.
    pub fn init_projected<R: Rng + ?Sized, P: Rng + ?Sized>(
        dims: EncoderDims,
        rng: &mut R,
        proj_rng: &mut P,
    ) -> Self {
        let mut enc = Encoder::init(dims, rng);
        enc.semantic = SemanticStage::Projected {
            s: glorot_uniform(dims.structure_in, dims.semantic, proj_rng),
            x: glorot_uniform(dims.attr_in, dims.semantic, proj_rng),
        };
        enc
    }

    /// Trainable tensors with stable names, in binding order.
    pub fn named_params(&self) -> Vec<(String, &Matrix)> {
        let mut out = Vec::new();
        if let SemanticStage::Learned { s, x } = &self.semantic {
            for (prefix, m) in [("sss.s", s), ("sss.x", x)] {
                for (k, t) in ["w1", "b1", "w2", "b2"].iter().zip(m.tensors()) {
                    out.push((format!("{prefix}.{k}"), t));
                }
            }
        }
        for (k, t) in ["w1", "b1", "w2", "b2"].iter().zip(self.gcn.tensors()) {
            out.push((format!("gcn.{k}"), t));
        }
        out
    }

    /// Everything needed to restore the encoder, including fixed projections.
    pub fn checkpoint_tensors(&self) -> Vec<(String, &Matrix)> {
        let mut out = self.named_params();
        if let SemanticStage::Projected { s, x } = &self.semantic {
            out.push(("proj.s".into(), s));
            out.push(("proj.x".into(), x));
        }
        out
    }

    pub fn from_checkpoint(tensors: Vec<(String, Matrix)>) -> Result<Self> {
        let mut map: std::collections::BTreeMap<String, Matrix> = tensors.into_iter().collect();
        let mut take = |name: &str| {
            map.remove(name).ok_or_else(|| Error::Format {
                what: "checkpoint",
                msg: format!("missing tensor {name}"),
            })
        };
        let semantic = if let (Ok(s), Ok(x)) = (take("proj.s"), take("proj.x")) {
            SemanticStage::Projected { s, x }
        } else {
            SemanticStage::Learned {
                s: Mlp::from_tensors(&mut take, "sss.s")?,
                x: Mlp::from_tensors(&mut take, "sss.x")?,
            }
        };
        let gcn = Mlp::from_tensors(&mut take, "gcn")?;
        if let Some(extra) = map.keys().next() {
            return Err(Error::Format {
                what: "checkpoint",
                msg: format!("unexpected tensor {extra}"),
            });
        }
        Ok(Encoder { semantic, gcn })
    }

    pub fn params_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out = Vec::new();
        if let SemanticStage::Learned { s, x } = &mut self.semantic {
            out.extend(s.tensors_mut());
            out.extend(x.tensors_mut());
        }
        out.extend(self.gcn.tensors_mut());
        out
    }

    pub fn bind(&self, tape: &mut Tape) -> EncoderVars {
        let (semantic, projections) = match &self.semantic {
            SemanticStage::Learned { s, x } => (Some((s.bind(tape), x.bind(tape))), None),
            SemanticStage::Projected { s, x } => (
                None,
                Some((tape.constant(s.clone()), tape.constant(x.clone()))),
            ),
        };
        let gcn = self.gcn.bind(tape);
        let mut params = Vec::new();
        if let Some((s, x)) = &semantic {
            params.extend([s.w1, s.b1, s.w2, s.b2, x.w1, x.b1, x.w2, x.b2]);
        }
        params.extend([gcn.w1, gcn.b1, gcn.w2, gcn.b2]);
        EncoderVars {
            semantic,
            projections,
            gcn,
            params,
        }
    }
}

impl EncoderVars {
    /// `(S', X')`, each `N × d`.
    pub fn semantic(&self, tape: &mut Tape, s: &Features, x: &Features) -> Result<(Var, Var)> {
        if s.rows() != x.rows() {
            return Err(Error::dim(
                "sss_forward",
                format!("S has {} rows, X has {}", s.rows(), x.rows()),
            ));
        }
        match (&self.semantic, &self.projections) {
            (Some((fs, fx)), _) => Ok((fs.forward(tape, s)?, fx.forward(tape, x)?)),
            (None, Some((ps, px))) => {
                for (f, p, what) in [(s, *ps, "S"), (x, *px, "X")] {
                    let w = tape.value(p).rows();
                    if f.cols() != w {
                        return Err(Error::dim(
                            "projection",
                            format!("{what} width {} but projection expects {w}", f.cols()),
                        ));
                    }
                }
                Ok((s.project(tape, *ps)?, x.project(tape, *px)?))
            }
            (None, None) => unreachable!("bound encoder has a semantic stage"),
        }
    }

    /// `H0 = [S' | X']`.
    pub fn aggregate(tape: &mut Tape, s_sem: Var, x_sem: Var) -> Result<Var> {
        tape.concat_cols(s_sem, x_sem)
    }

    /// `(Z, Z^H)` from one semantic pass and two GCN passes with shared weights.
    pub fn encode_views(
        &self,
        tape: &mut Tape,
        s: &Features,
        x: &Features,
        adj: &NormalizedAdjacency,
        adj_high: &NormalizedAdjacency,
    ) -> Result<(Var, Var)> {
        let (s_sem, x_sem) = self.semantic(tape, s, x)?;
        let h0 = Self::aggregate(tape, s_sem, x_sem)?;
        let z = self.gcn.gcn_forward(tape, adj, h0)?;
        let zh = self.gcn.gcn_forward(tape, adj_high, h0)?;
        Ok((z, zh))
    }

    /// Only the view over `adj`.
    pub fn encode(
        &self,
        tape: &mut Tape,
        s: &Features,
        x: &Features,
        adj: &NormalizedAdjacency,
    ) -> Result<Var> {
        let (s_sem, x_sem) = self.semantic(tape, s, x)?;
        let h0 = Self::aggregate(tape, s_sem, x_sem)?;
        self.gcn.gcn_forward(tape, adj, h0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::synth::complete_graph;

    #[test]
    fn normalized_adjacency_examples() {
        let (one, _) = DataGraph::from_edges(1, []).unwrap();
        assert_eq!(
            NormalizedAdjacency::new(&one).matrix().to_dense(),
            Matrix::identity(1)
        );

        let (e, _) = DataGraph::from_edges(2, [(0, 1)]).unwrap();
        let a = NormalizedAdjacency::new(&e).matrix().to_dense();
        assert!(a.max_abs_diff(&Matrix::filled(2, 2, 0.5)) < 1e-15);

        let a = NormalizedAdjacency::new(&complete_graph(3))
            .matrix()
            .to_dense();
        assert!(a.max_abs_diff(&Matrix::filled(3, 3, 1.0 / 3.0)) < 1e-15);
        assert!(NormalizedAdjacency::new(&complete_graph(5))
            .matrix()
            .is_symmetric());
    }

    #[test]
    fn zero_weights_give_zero_semantics() {
        let mlp = Mlp {
            w1: Matrix::zeros(3, 4),
            b1: Matrix::zeros(1, 4),
            w2: Matrix::zeros(4, 2),
            b2: Matrix::zeros(1, 2),
        };
        let mut t = Tape::new();
        let v = mlp.bind(&mut t);
        let s = Features::Dense(Arc::new(Matrix::filled(3, 3, 0.7)));
        let out = v.forward(&mut t, &s).unwrap();
        assert_eq!(t.value(out), &Matrix::zeros(3, 2));
    }

    #[test]
    fn identity_perceptron_passes_nonnegative_rows() {
        let mlp = Mlp {
            w1: Matrix::identity(2),
            b1: Matrix::zeros(1, 2),
            w2: Matrix::identity(2),
            b2: Matrix::zeros(1, 2),
        };
        let s = Matrix::from_rows(&[[1.0, 0.5], [0.5, 1.0]]).unwrap();
        let mut t = Tape::new();
        let v = mlp.bind(&mut t);
        let out = v.forward(&mut t, &Features::auto(&s)).unwrap();
        assert_eq!(t.value(out), &s);
    }

    #[test]
    fn width_mismatch_is_a_dimension_error() {
        let mut r = rng::stream(0, rng::INIT);
        let mlp = Mlp::init(3, 4, 2, &mut r);
        let mut t = Tape::new();
        let v = mlp.bind(&mut t);
        let x = Features::auto(&Matrix::zeros(2, 5));
        assert!(matches!(
            v.forward(&mut t, &x),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn aggregate_concatenates() {
        let mut t = Tape::new();
        let a = t.constant(Matrix::from_rows(&[[1.0, 2.0]]).unwrap());
        let b = t.constant(Matrix::from_rows(&[[3.0, 4.0]]).unwrap());
        let h = EncoderVars::aggregate(&mut t, a, b).unwrap();
        assert_eq!(t.value(h).row(0), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn features_pick_storage_by_density() {
        assert!(matches!(
            Features::auto(&Matrix::identity(10)),
            Features::Sparse(_)
        ));
        assert!(matches!(
            Features::auto(&Matrix::filled(3, 3, 1.0)),
            Features::Dense(_)
        ));
    }

    #[test]
    fn checkpoint_tensor_names_roundtrip() {
        let dims = EncoderDims {
            structure_in: 5,
            attr_in: 3,
            sss_hidden: 4,
            semantic: 2,
            gcn_hidden: 4,
            out: 3,
        };
        let mut r = rng::stream(1, rng::INIT);
        let mut p = rng::stream(1, rng::PROJECTION);
        for enc in [
            Encoder::init(dims, &mut r),
            Encoder::init_projected(dims, &mut r, &mut p),
        ] {
            let owned: Vec<(String, Matrix)> = enc
                .checkpoint_tensors()
                .into_iter()
                .map(|(n, m)| (n, m.clone()))
                .collect();
            assert_eq!(Encoder::from_checkpoint(owned).unwrap(), enc);
        }
    }
}
