//! Community detection with structure-semantic graph contrastive learning.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: simple undirected graphs in CSR form, with optional node
//!   attributes and ground-truth community labels, plus the text formats
//!   used to load and save them.
//! - [`mining`]: triangle / k-core / k-truss kernels and the structure view
//!   derived from them (per-edge pattern counts, the high-level graph, and
//!   the structure similarity matrix).
//! - [`tensor`]: dense matrices, a reverse-mode tape, Adam, and the binary
//!   checkpoint format.
//! - [`encoders`]: the structure-semantic perceptrons and the weight-shared
//!   two-layer GCN.
//! - [`loss`]: the structure contrastive loss over the two views.
//! - [`pipeline`]: pretraining, the supervised detection head, ablations,
//!   configuration and run artifacts.
//! - [`metrics`]: ACC, NMI and Macro-F1.
//! - [`synth`]: planted-partition and Erdős–Rényi generators.

pub mod datasets;
pub mod encoders;
pub mod error;
pub mod graph;
pub mod loss;
pub mod metrics;
pub mod mining;
pub mod pipeline;
pub mod rng;
pub mod split;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};
pub use graph::DataGraph;
pub use split::{make_split, NodeRole, SplitAssignment};
