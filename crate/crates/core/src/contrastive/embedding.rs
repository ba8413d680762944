use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// `k × m` matrix of embeddings, one row per sound.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    values: Matrix<f64>,
}

impl EmbeddingMatrix {
    pub fn new(values: Matrix<f64>) -> Result<Self> {
        if values.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("embeddings contain non-finite values".into()));
        }
        Ok(Self { values })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn dim(&self) -> usize {
        self.values.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    pub fn values(&self) -> &Matrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> Matrix<f64> {
        self.values
    }

    /// Each row scaled to unit length. Zero rows are an error.
    pub fn l2_normalized(&self) -> Result<Self> {
        let (n, _) = l2_normalize_rows(&self.values)?;
        Ok(Self { values: n })
    }
}

/// Row-normalizes `x`, returning the result and the row norms.
pub(crate) fn l2_normalize_rows(x: &Matrix<f64>) -> Result<(Matrix<f64>, Vec<f64>)> {
    let (out, norms) = l2_normalize_rows_or_zero(x);
    match norms.iter().position(|&n| n == 0.0) {
        Some(r) => Err(Error::Numerical(format!("row {r} has zero norm"))),
        None => Ok((out, norms)),
    }
}

/// Like [`l2_normalize_rows`] but leaves zero rows at zero (norm reported
/// as 0) and rejects only non-finite values.
pub(crate) fn l2_normalize_rows_or_zero(x: &Matrix<f64>) -> (Matrix<f64>, Vec<f64>) {
    let mut out = x.clone();
    let mut norms = Vec::with_capacity(x.rows());
    for r in 0..x.rows() {
        let row = out.row_mut(r);
        let n = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 0.0 {
            row.iter_mut().for_each(|v| *v /= n);
            norms.push(n);
        } else {
            norms.push(0.0);
        }
    }
    (out, norms)
}

/// Backpropagates `grad` (w.r.t. the normalized rows `y`) to the inputs.
pub(crate) fn l2_normalize_backward(y: &Matrix<f64>, norms: &[f64], grad: &Matrix<f64>) -> Matrix<f64> {
    let mut out = grad.clone();
    for (r, &norm) in norms.iter().enumerate() {
        let yr = y.row(r);
        if norm == 0.0 {
            out.row_mut(r).fill(0.0);
            continue;
        }
        let dot: f64 = yr.iter().zip(grad.row(r)).map(|(a, b)| a * b).sum();
        for (o, &yv) in out.row_mut(r).iter_mut().zip(yr) {
            *o = (*o - yv * dot) / norm;
        }
    }
    out
}
