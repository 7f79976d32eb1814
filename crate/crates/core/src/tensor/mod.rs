//! Dense matrices, a reverse-mode tape over them, Adam, and checkpoints.
//!
//! Everything is `f64` and row-major. The tape is rebuilt every training
//! step; parameters live outside it as plain [`Matrix`] values and are bound
//! as leaves at the start of each step.

mod adam;
pub mod checkpoint;
pub mod init;
mod matrix;
mod sparse;
mod tape;

pub use adam::{Adam, AdamConfig};
pub use matrix::Matrix;
pub use sparse::CsrMatrix;
pub use tape::{RowMask, Tape, Var};
