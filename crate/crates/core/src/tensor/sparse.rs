use super::Matrix;
use crate::error::{Error, Result};

/// Compressed sparse row matrix with sorted column indices per row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets. Duplicate coordinates are summed.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|t| t.0 >= rows || t.1 >= cols) {
            return Err(Error::dim(
                "csr_from_triplets",
                format!("entry ({r},{c}) outside {rows}x{cols}"),
            ));
        }
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut offsets = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            offsets[r + 1] += 1;
            indices.push(c);
            values.push(v);
        }
        for r in 0..rows {
            offsets[r + 1] += offsets[r];
        }
        Ok(CsrMatrix {
            rows,
            cols,
            offsets,
            indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            rows: n,
            cols: n,
            offsets: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Keeps the non-zero entries of a dense matrix.
    pub fn from_dense(m: &Matrix) -> Self {
        let mut offsets = Vec::with_capacity(m.rows() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        offsets.push(0);
        for r in 0..m.rows() {
            for (c, &v) in m.row(r).iter().enumerate() {
                if v != 0.0 {
                    indices.push(c);
                    values.push(v);
                }
            }
            offsets.push(indices.len());
        }
        CsrMatrix {
            rows: m.rows(),
            cols: m.cols(),
            offsets,
            indices,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.offsets[r]..self.offsets[r + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (idx, vals) = self.row(r);
        idx.binary_search(&c).map_or(0.0, |p| vals[p])
    }

    pub fn to_dense(&self) -> Matrix {
        let mut out = Matrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            let (idx, vals) = self.row(r);
            for (&c, &v) in idx.iter().zip(vals) {
                out.set(r, c, v);
            }
        }
        out
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|r| {
                let (idx, vals) = self.row(r);
                idx.iter().zip(vals).all(|(&c, &v)| self.get(c, r) == v)
            })
    }

    /// `self * dense`.
    pub fn mul_dense(&self, b: &Matrix) -> Result<Matrix> {
        if self.cols != b.rows() {
            return Err(Error::dim(
                "sparse_matmul",
                format!("{}x{} x {:?}", self.rows, self.cols, b.shape()),
            ));
        }
        let mut out = Matrix::zeros(self.rows, b.cols());
        for r in 0..self.rows {
            let (idx, vals) = self.row(r);
            let orow = out.row_mut(r);
            for (&c, &v) in idx.iter().zip(vals) {
                for (o, x) in orow.iter_mut().zip(b.row(c)) {
                    *o += v * x;
                }
            }
        }
        Ok(out)
    }

    /// Accumulates `selfᵀ * g` into `acc` (used by the backward pass).
    pub(crate) fn transpose_mul_dense_into(&self, g: &Matrix, acc: &mut Matrix) {
        debug_assert_eq!(g.rows(), self.rows);
        debug_assert_eq!(acc.shape(), (self.cols, g.cols()));
        for r in 0..self.rows {
            let (idx, vals) = self.row(r);
            let grow = g.row(r);
            for (&c, &v) in idx.iter().zip(vals) {
                for (a, x) in acc.row_mut(c).iter_mut().zip(grow) {
                    *a += v * x;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let m =
            CsrMatrix::from_triplets(2, 3, vec![(1, 2, 1.0), (0, 1, 2.0), (1, 2, 0.5)]).unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(1, 2), 1.5);
        assert_eq!(m.get(0, 1), 2.0);
        assert_eq!(m.get(0, 0), 0.0);
    }

    #[test]
    fn out_of_range_triplet_is_rejected() {
        assert!(CsrMatrix::from_triplets(2, 2, vec![(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn sparse_products_match_dense() {
        let dense = Matrix::from_rows(&[[0.0, 1.0, 0.0], [2.0, 0.0, 3.0]]).unwrap();
        let s = CsrMatrix::from_dense(&dense);
        let b = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        assert_eq!(s.mul_dense(&b).unwrap(), dense.matmul(&b).unwrap());

        let g = Matrix::from_rows(&[[1.0, -1.0], [0.5, 2.0]]).unwrap();
        let mut acc = Matrix::zeros(3, 2);
        s.transpose_mul_dense_into(&g, &mut acc);
        assert_eq!(acc, dense.transpose().matmul(&g).unwrap());
    }
}
