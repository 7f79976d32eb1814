//! Central-difference checks of every differentiable tape operation.

mod common;

use std::sync::Arc;

use common::{gradient_error, random_matrix, rng};
use gcls::tensor::{CsrMatrix, Matrix, RowMask, Tape, Var};

const TOL: f64 = 1e-6;

/// Reduces `v` to a scalar with uneven weights so every entry matters.
fn weigh(t: &mut Tape, v: Var) -> Var {
    let (rows, cols) = t.value(v).shape();
    let left =
        Matrix::from_vec(1, rows, (0..rows).map(|i| 1.0 + 0.37 * i as f64).collect()).unwrap();
    let right =
        Matrix::from_vec(cols, 1, (0..cols).map(|j| 0.5 - 0.29 * j as f64).collect()).unwrap();
    let l = t.constant(left);
    let r = t.constant(right);
    let lv = t.matmul(l, v).unwrap();
    t.matmul(lv, r).unwrap()
}

fn check(name: &str, inputs: &[Matrix], f: impl Fn(&mut Tape, &[Var]) -> Var) {
    let err = gradient_error(inputs, f);
    assert!(err < TOL, "{name}: relative error {err:e}");
}

#[test]
fn matmul_family() {
    let mut r = rng(1);
    let (a, b, c) = (
        random_matrix(&mut r, 3, 4),
        random_matrix(&mut r, 4, 2),
        random_matrix(&mut r, 5, 4),
    );
    check("matmul", &[a.clone(), b], |t, v| {
        let o = t.matmul(v[0], v[1]).unwrap();
        weigh(t, o)
    });
    check("matmul_nt", &[a.clone(), c], |t, v| {
        let o = t.matmul_nt(v[0], v[1]).unwrap();
        weigh(t, o)
    });
    check("transpose", &[a], |t, v| {
        let o = t.transpose(v[0]);
        weigh(t, o)
    });
}

#[test]
fn sparse_matmul() {
    let mut r = rng(2);
    let sp = Arc::new(
        CsrMatrix::from_triplets(
            4,
            3,
            vec![(0, 0, 0.5), (1, 2, -1.5), (3, 1, 2.0), (3, 2, 0.25)],
        )
        .unwrap(),
    );
    check("sparse_matmul", &[random_matrix(&mut r, 3, 2)], |t, v| {
        let o = t.sparse_matmul(sp.clone(), v[0]).unwrap();
        weigh(t, o)
    });
}

#[test]
fn elementwise() {
    let mut r = rng(3);
    let a = random_matrix(&mut r, 3, 4);
    let b = random_matrix(&mut r, 3, 4);
    let bias = random_matrix(&mut r, 1, 4);
    let pos = a.map(|x| x.abs() + 0.5);
    check("add", &[a.clone(), b.clone()], |t, v| {
        let o = t.add(v[0], v[1]).unwrap();
        weigh(t, o)
    });
    check("sub", &[a.clone(), b.clone()], |t, v| {
        let o = t.sub(v[0], v[1]).unwrap();
        weigh(t, o)
    });
    check("div", &[a.clone(), pos.clone()], |t, v| {
        let o = t.div(v[0], v[1]).unwrap();
        weigh(t, o)
    });
    check("add_bias", &[a.clone(), bias], |t, v| {
        let o = t.add_bias(v[0], v[1]).unwrap();
        weigh(t, o)
    });
    check("scale", std::slice::from_ref(&a), |t, v| {
        let o = t.scale(v[0], -2.5);
        weigh(t, o)
    });
    check("add_const", std::slice::from_ref(&a), |t, v| {
        let o = t.add_const(v[0], &b).unwrap();
        weigh(t, o)
    });
    // Keep inputs away from the kink.
    let away = a.map(|x| if x.abs() < 0.05 { 0.3 } else { x });
    check("relu", &[away], |t, v| {
        let o = t.relu(v[0]);
        weigh(t, o)
    });
    check("exp", std::slice::from_ref(&a), |t, v| {
        let o = t.exp(v[0]);
        weigh(t, o)
    });
    check("log", &[pos], |t, v| {
        let o = t.log(v[0]);
        weigh(t, o)
    });
    check("concat_cols", &[a, random_matrix(&mut r, 3, 2)], |t, v| {
        let o = t.concat_cols(v[0], v[1]).unwrap();
        weigh(t, o)
    });
}

#[test]
fn normalisation_and_similarity() {
    let mut r = rng(4);
    let a = random_matrix(&mut r, 4, 3);
    let b = random_matrix(&mut r, 5, 3);
    check("row_l2_normalize", std::slice::from_ref(&a), |t, v| {
        let o = t.row_l2_normalize(v[0], 1e-12);
        weigh(t, o)
    });
    check("exp_similarity", &[a.clone(), b], |t, v| {
        let o = t.exp_similarity(v[0], v[1], 0.7).unwrap();
        weigh(t, o)
    });
    check("exp_similarity_self", &[a], |t, v| {
        let o = t.exp_similarity(v[0], v[0], 2.0).unwrap();
        weigh(t, o)
    });
}

#[test]
fn reductions() {
    let mut r = rng(5);
    let sq = random_matrix(&mut r, 4, 4);
    let pattern = RowMask::Pattern(Arc::new(vec![vec![1, 3], vec![], vec![0], vec![0, 1, 2]]));
    for mask in [
        RowMask::All,
        RowMask::OffDiagonal,
        RowMask::Diagonal,
        pattern,
    ] {
        let m = mask.clone();
        check("masked_row_sum", std::slice::from_ref(&sq), move |t, v| {
            let o = t.masked_row_sum(v[0], m.clone()).unwrap();
            weigh(t, o)
        });
        check("masked_col_sum", std::slice::from_ref(&sq), move |t, v| {
            let o = t.masked_col_sum(v[0], mask.clone()).unwrap();
            weigh(t, o)
        });
    }
    check("sum", std::slice::from_ref(&sq), |t, v| t.sum(v[0]));
    check("mean", std::slice::from_ref(&sq), |t, v| t.mean(v[0]));
    let targets = Arc::new(vec![(0, 1), (2, 3), (3, 0)]);
    check("softmax_cross_entropy", &[sq], move |t, v| {
        t.softmax_cross_entropy(v[0], targets.clone()).unwrap()
    });
}

#[test]
fn composite_contrastive_loss() {
    use gcls::loss::{total_loss, PairContext};
    let mut r = rng(6);
    let ctx =
        PairContext::from_lists(vec![vec![1], vec![0, 2], vec![1], vec![], vec![]], 0.5).unwrap();
    check(
        "total_loss",
        &[random_matrix(&mut r, 5, 3), random_matrix(&mut r, 5, 3)],
        |t, v| total_loss(t, v[0], v[1], &ctx).unwrap(),
    );
}

#[test]
fn encoder_parameters_on_fixture() {
    let g = common::fixture12();
    for use_sss in [true, false] {
        let err = common::encoder_gradient_error(&g, use_sss);
        assert!(err < 1e-4, "use_sss={use_sss}: {err:e}");
    }
}
