//! Structure contrastive loss over the original and high-level views.
//!
//! For an anchor `z_i` in one view, with `N^H(i)` its neighbours in the
//! high-level graph, the positives are the same-view and cross-view
//! embeddings of `N^H(i)` plus the cross-view embedding of `i` itself
//! (`2|N^H(i)| + 1` terms). Every other node, in both views, is a negative;
//! `i` is never its own negative. With `e(a, b) = exp(a·b / τ)` on
//! L2-normalised rows:
//!
//! ```text
//! ℓ(i) = -log( (pos + self) / (2|N^H(i)| + 1) / (neg + pos + self) )
//! L    = (1 / 2N) Σ_i [ ℓ(z_i¹) + ℓ(z_i²) ]
//! ```

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::DataGraph;
use crate::tensor::{Matrix, RowMask, Tape, Var};

/// Guard for normalising all-zero rows.
pub const NORM_EPS: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct PairContext {
    high_neighbors: Arc<Vec<Vec<usize>>>,
    tau: f64,
}

impl PairContext {
    pub fn new(high: &DataGraph, tau: f64) -> Result<Self> {
        let lists = (0..high.n_nodes())
            .map(|u| high.neighbors(u).to_vec())
            .collect();
        Self::from_lists(lists, tau)
    }

    /// Neighbour lists must be symmetric, sorted, and free of self-references.
    pub fn from_lists(mut lists: Vec<Vec<usize>>, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Config(format!("temperature must be > 0, got {tau}")));
        }
        let n = lists.len();
        for l in &mut lists {
            l.sort_unstable();
            l.dedup();
        }
        for (i, l) in lists.iter().enumerate() {
            for &j in l {
                if j >= n || j == i || lists[j].binary_search(&i).is_err() {
                    return Err(Error::Contract(format!(
                        "high-level neighbour lists are not a symmetric simple graph at ({i},{j})"
                    )));
                }
            }
        }
        Ok(PairContext {
            high_neighbors: Arc::new(lists),
            tau,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn n_nodes(&self) -> usize {
        self.high_neighbors.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.high_neighbors[i]
    }

    fn contains(&self, i: usize, j: usize) -> bool {
        self.high_neighbors[i].binary_search(&j).is_ok()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum View {
    First,
    Second,
}

impl View {
    pub fn other(self) -> View {
        match self {
            View::First => View::Second,
            View::Second => View::First,
        }
    }
}

/// The explicit pair sets of one anchor `(view, i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnchorPairs {
    pub positives: Vec<(View, usize)>,
    pub negatives: Vec<(View, usize)>,
}

pub fn anchor_pairs(i: usize, view: View, ctx: &PairContext) -> AnchorPairs {
    let other = view.other();
    let mut positives = Vec::with_capacity(2 * ctx.neighbors(i).len() + 1);
    for &j in ctx.neighbors(i) {
        positives.push((view, j));
        positives.push((other, j));
    }
    positives.push((other, i));
    let mut negatives = Vec::new();
    for j in 0..ctx.n_nodes() {
        if j != i && !ctx.contains(i, j) {
            negatives.push((view, j));
            negatives.push((other, j));
        }
    }
    AnchorPairs {
        positives,
        negatives,
    }
}

/// Copy of `z` with every row scaled to unit length.
pub fn normalize_rows(z: &Matrix) -> Matrix {
    let mut out = z.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let n = row.iter().map(|x| x * x).sum::<f64>().sqrt().max(NORM_EPS);
        row.iter_mut().for_each(|x| *x /= n);
    }
    out
}

/// Per-anchor loss on already-normalised embeddings, summed term by term.
pub fn node_loss(i: usize, view: View, z1: &Matrix, z2: &Matrix, ctx: &PairContext) -> Result<f64> {
    if z1.shape() != z2.shape() || z1.rows() != ctx.n_nodes() {
        return Err(Error::dim(
            "node_loss",
            format!(
                "views {:?}/{:?} for {} nodes",
                z1.shape(),
                z2.shape(),
                ctx.n_nodes()
            ),
        ));
    }
    let pick = |v: View| if v == View::First { z1 } else { z2 };
    let anchor = pick(view).row(i);
    let e = |(v, j): (View, usize)| {
        let dot: f64 = anchor.iter().zip(pick(v).row(j)).map(|(a, b)| a * b).sum();
        (dot / ctx.tau).exp()
    };
    let pairs = anchor_pairs(i, view, ctx);
    let pos: f64 = pairs.positives.iter().map(|&p| e(p)).sum();
    let neg: f64 = pairs.negatives.iter().map(|&p| e(p)).sum();
    let count = pairs.positives.len() as f64;
    Ok(-((pos / count) / (neg + pos)).ln())
}

/// Mean loss over both views, built on the tape from raw (unnormalised)
/// encoder outputs.
pub fn total_loss(tape: &mut Tape, z1: Var, z2: Var, ctx: &PairContext) -> Result<Var> {
    let (s1, s2) = (tape.value(z1).shape(), tape.value(z2).shape());
    if s1 != s2 || s1.0 != ctx.n_nodes() {
        return Err(Error::dim(
            "total_loss",
            format!("views {s1:?}/{s2:?} for {} nodes", ctx.n_nodes()),
        ));
    }
    let n = s1.0;
    let inv_tau = 1.0 / ctx.tau;
    let y1 = tape.row_l2_normalize(z1, NORM_EPS);
    let y2 = tape.row_l2_normalize(z2, NORM_EPS);
    let e11 = tape.exp_similarity(y1, y1, inv_tau)?;
    let e12 = tape.exp_similarity(y1, y2, inv_tau)?;
    let e22 = tape.exp_similarity(y2, y2, inv_tau)?;

    let high = RowMask::Pattern(ctx.high_neighbors.clone());
    let log_counts = Matrix::from_vec(
        n,
        1,
        ctx.high_neighbors
            .iter()
            .map(|l| (2.0 * l.len() as f64 + 1.0).ln())
            .collect(),
    )?;
    let self_pair = tape.masked_row_sum(e12, RowMask::Diagonal)?;

    // view 1 anchors: same-view rows of e11, cross-view rows of e12
    let p_same = tape.masked_row_sum(e11, high.clone())?;
    let p_cross = tape.masked_row_sum(e12, high.clone())?;
    let t_same = tape.masked_row_sum(e11, RowMask::OffDiagonal)?;
    let t_cross = tape.masked_row_sum(e12, RowMask::All)?;
    let l1 = anchor_terms(
        tape,
        p_same,
        p_cross,
        t_same,
        t_cross,
        self_pair,
        &log_counts,
    )?;

    // view 2 anchors: same-view rows of e22, cross-view columns of e12
    let p_same = tape.masked_row_sum(e22, high.clone())?;
    let p_cross = tape.masked_col_sum(e12, high)?;
    let t_same = tape.masked_row_sum(e22, RowMask::OffDiagonal)?;
    let t_cross = tape.masked_col_sum(e12, RowMask::All)?;
    let l2 = anchor_terms(
        tape,
        p_same,
        p_cross,
        t_same,
        t_cross,
        self_pair,
        &log_counts,
    )?;

    let both = tape.add(l1, l2)?;
    let sum = tape.sum(both);
    Ok(tape.scale(sum, 1.0 / (2.0 * n as f64)))
}

/// Column of `ℓ` values: `log(total) - log(pos + self) + log(2|N^H| + 1)`.
fn anchor_terms(
    tape: &mut Tape,
    p_same: Var,
    p_cross: Var,
    t_same: Var,
    t_cross: Var,
    self_pair: Var,
    log_counts: &Matrix,
) -> Result<Var> {
    let pos = tape.add(p_same, p_cross)?;
    let pos = tape.add(pos, self_pair)?;
    let total = tape.add(t_same, t_cross)?;
    let log_total = tape.log(total);
    let log_pos = tape.log(pos);
    let l = tape.sub(log_total, log_pos)?;
    tape.add_const(l, log_counts)
}

/// Loss value without gradients.
pub fn total_loss_value(z1: &Matrix, z2: &Matrix, ctx: &PairContext) -> Result<f64> {
    let mut tape = Tape::new();
    let a = tape.constant(z1.clone());
    let b = tape.constant(z2.clone());
    let l = total_loss(&mut tape, a, b, ctx)?;
    Ok(tape.value(l).get(0, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx4() -> PairContext {
        PairContext::from_lists(vec![vec![1], vec![0, 2], vec![1], vec![]], 1.0).unwrap()
    }

    #[test]
    fn rejects_bad_temperature_and_asymmetry() {
        assert!(matches!(
            PairContext::from_lists(vec![vec![]], 0.0),
            Err(Error::Config(_))
        ));
        assert!(PairContext::from_lists(vec![vec![1], vec![]], 1.0).is_err());
        assert!(PairContext::from_lists(vec![vec![0]], 1.0).is_err());
    }

    #[test]
    fn positive_count_is_two_neighbors_plus_one() {
        let ctx = ctx4();
        let p = anchor_pairs(1, View::First, &ctx);
        assert_eq!(p.positives.len(), 5);
        assert_eq!(p.negatives, vec![(View::First, 3), (View::Second, 3)]);
        let p = anchor_pairs(3, View::Second, &ctx);
        assert_eq!(p.positives, vec![(View::First, 3)]);
        assert_eq!(p.negatives.len(), 6);
    }

    #[test]
    fn normalization_examples() {
        let z = Matrix::from_rows(&[[3.0, 4.0], [0.0, 1.0], [0.0, 0.0]]).unwrap();
        let y = normalize_rows(&z);
        assert!((y.get(0, 0) - 0.6).abs() < 1e-15 && (y.get(0, 1) - 0.8).abs() < 1e-15);
        assert_eq!(y.row(1), &[0.0, 1.0]);
        assert_eq!(y.row(2), &[0.0, 0.0]);
    }

    #[test]
    fn identical_views_give_equal_view_losses() {
        let ctx = ctx4();
        let z = normalize_rows(
            &Matrix::from_rows(&[[1.0, 0.2], [0.3, -1.0], [0.5, 0.5], [-0.7, 0.1]]).unwrap(),
        );
        for i in 0..4 {
            let a = node_loss(i, View::First, &z, &z, &ctx).unwrap();
            let b = node_loss(i, View::Second, &z, &z, &ctx).unwrap();
            assert!((a - b).abs() < 1e-14);
            assert!(a > 0.0);
        }
    }

    #[test]
    fn total_is_mean_of_node_losses() {
        let ctx = ctx4();
        let z1 = Matrix::from_rows(&[[1.0, 0.2], [0.3, -1.0], [0.5, 0.5], [-0.7, 0.1]]).unwrap();
        let z2 = Matrix::from_rows(&[[0.1, 0.9], [-0.3, 1.0], [2.0, 0.5], [0.7, 0.7]]).unwrap();
        let (y1, y2) = (normalize_rows(&z1), normalize_rows(&z2));
        let mut sum = 0.0;
        for i in 0..4 {
            sum += node_loss(i, View::First, &y1, &y2, &ctx).unwrap();
            sum += node_loss(i, View::Second, &y1, &y2, &ctx).unwrap();
        }
        let v = total_loss_value(&z1, &z2, &ctx).unwrap();
        assert!((v - sum / 8.0).abs() < 1e-12, "{v} vs {}", sum / 8.0);
    }
}
