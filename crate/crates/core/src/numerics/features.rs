use super::{DenseMatrix, ShapeError};
use crate::rng::Rng;

/// Node feature matrix in compressed-row form.
///
/// Bag-of-words features are mostly zero, so the first GCN layer multiplies
/// and drops out only the stored entries. Explicit zeros are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseFeatures {
    rows: usize,
    cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseFeatures {
    pub fn from_dense(dense: &DenseMatrix) -> Self {
        let mut row_offsets = Vec::with_capacity(dense.rows() + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for r in 0..dense.rows() {
            for (c, &v) in dense.row(r).iter().enumerate() {
                if v != 0.0 {
                    col_indices.push(c);
                    values.push(v);
                }
            }
            row_offsets.push(values.len());
        }
        Self {
            rows: dense.rows(),
            cols: dense.cols(),
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for idx in self.row_offsets[r]..self.row_offsets[r + 1] {
                out.set(r, self.col_indices[idx], self.values[idx]);
            }
        }
        out
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

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Same sparsity pattern, entries multiplied by `scales` (one per stored entry).
    pub fn scale_entries(&self, scales: &[f64]) -> Self {
        assert_eq!(scales.len(), self.values.len());
        Self {
            values: self.values.iter().zip(scales).map(|(v, s)| v * s).collect(),
            ..self.clone()
        }
    }

    /// Inverted-dropout scale factors for the stored entries: 0 with
    /// probability `p`, otherwise `1/(1-p)`. Zeros stay zero under any mask,
    /// so only stored entries consume draws.
    pub fn dropout_scales(&self, p: f64, rng: &mut Rng) -> Vec<f64> {
        let keep = 1.0 / (1.0 - p);
        (0..self.values.len())
            .map(|_| if rng.uniform() < p { 0.0 } else { keep })
            .collect()
    }

    /// `self · w`.
    pub fn matmul(&self, w: &DenseMatrix) -> Result<DenseMatrix, ShapeError> {
        if self.cols != w.rows() {
            return Err(ShapeError::new("sparse matmul", (self.rows, self.cols), w.shape()));
        }
        let mut out = DenseMatrix::zeros(self.rows, w.cols());
        for r in 0..self.rows {
            let out_row = out.row_mut(r);
            for idx in self.row_offsets[r]..self.row_offsets[r + 1] {
                let v = self.values[idx];
                for (o, &b) in out_row.iter_mut().zip(w.row(self.col_indices[idx])) {
                    *o += v * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · g`.
    pub fn t_matmul(&self, g: &DenseMatrix) -> Result<DenseMatrix, ShapeError> {
        if self.rows != g.rows() {
            return Err(ShapeError::new("sparse t_matmul", (self.rows, self.cols), g.shape()));
        }
        let mut out = DenseMatrix::zeros(self.cols, g.cols());
        for r in 0..self.rows {
            let g_row = g.row(r);
            for idx in self.row_offsets[r]..self.row_offsets[r + 1] {
                let v = self.values[idx];
                for (o, &b) in out.row_mut(self.col_indices[idx]).iter_mut().zip(g_row) {
                    *o += v * b;
                }
            }
        }
        Ok(out)
    }

    /// Divides every row by its L1 norm; all-zero rows are left alone.
    pub fn row_normalized(&self) -> Self {
        let mut values = self.values.clone();
        for r in 0..self.rows {
            let range = self.row_offsets[r]..self.row_offsets[r + 1];
            let norm: f64 = values[range.clone()].iter().map(|v| v.abs()).sum();
            if norm > 0.0 {
                values[range].iter_mut().for_each(|v| *v /= norm);
            }
        }
        Self { values, ..self.clone() }
    }
}
