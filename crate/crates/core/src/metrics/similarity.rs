use nalgebra::{DMatrix, SymmetricEigen};

use crate::contrastive::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::tensor::Matrix;

fn cosine(a: &[f64], b: &[f64], row: usize) -> Result<f64> {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Numerical(format!("row {row} has a zero embedding")));
    }
    Ok(dot / (na.sqrt() * nb.sqrt()))
}

/// Mean over rows of `cos(e1[j], e2[j])`.
pub fn mean_cosine(e1: &EmbeddingMatrix, e2: &EmbeddingMatrix) -> Result<f64> {
    if e1.values().shape() != e2.values().shape() || e1.rows() == 0 {
        return Err(Error::shape(format!(
            "paired embeddings must share a non-empty shape: {:?} vs {:?}",
            e1.values().shape(),
            e2.values().shape()
        )));
    }
    let mut total = 0.0;
    for j in 0..e1.rows() {
        total += cosine(e1.row(j), e2.row(j), j)?;
    }
    Ok(total / e1.rows() as f64)
}

/// `(δ, mean cosine)` for each `(δ, E1, E2)` entry.
pub fn cosine_similarity_curve(pairs: &[(f64, EmbeddingMatrix, EmbeddingMatrix)]) -> Result<Vec<(f64, f64)>> {
    pairs
        .iter()
        .map(|(d, a, b)| Ok((*d, mean_cosine(a, b)?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pca2d {
    /// `k × 2` coordinates of the centred rows.
    pub projection: Matrix<f64>,
    /// Variance along each component, non-increasing.
    pub explained_variance: [f64; 2],
    pub total_variance: f64,
    /// `2 × m` orthonormal directions (a zero row when rank < 2).
    pub components: Matrix<f64>,
    pub mean: Vec<f64>,
}

/// Eigenpairs sorted by decreasing eigenvalue.
fn sorted_eigen(m: DMatrix<f64>) -> Vec<(f64, Vec<f64>)> {
    let eig = SymmetricEigen::new(m);
    let mut pairs: Vec<(f64, Vec<f64>)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &l)| (l, eig.eigenvectors.column(i).iter().copied().collect()))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs
}

/// Projection onto the top two principal components.
pub fn pca_2d(e: &EmbeddingMatrix) -> Result<Pca2d> {
    let (k, m) = e.values().shape();
    if k <= 2 {
        return Err(Error::invalid(format!("PCA needs more than 2 rows, got {k}")));
    }
    let mut mean = vec![0.0; m];
    for r in 0..k {
        for (a, v) in mean.iter_mut().zip(e.row(r)) {
            *a += v / k as f64;
        }
    }
    let centred = DMatrix::from_fn(k, m, |r, c| e.row(r)[c] - mean[c]);
    let denom = (k - 1) as f64;
    let total_variance = centred.iter().map(|v| v * v).sum::<f64>() / denom;
    // Directions from whichever Gram matrix is smaller.
    let mut dirs: Vec<(f64, Vec<f64>)> = if k < m {
        sorted_eigen(&centred * centred.transpose() / denom)
            .into_iter()
            .take(2)
            .map(|(l, u)| {
                let v = centred.transpose() * DMatrix::from_column_slice(k, 1, &u);
                (l, v.iter().copied().collect())
            })
            .collect()
    } else {
        sorted_eigen(centred.transpose() * &centred / denom).into_iter().take(2).collect()
    };
    dirs.resize(2, (0.0, vec![0.0; m]));
    let tol = 1e-10 * total_variance.max(f64::MIN_POSITIVE);
    let mut components = Matrix::zeros(2, m);
    let mut explained = [0.0; 2];
    for (i, (l, v)) in dirs.into_iter().enumerate() {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if l <= tol || norm == 0.0 {
            continue;
        }
        // Sign convention: largest-magnitude loading is positive.
        let pivot = v.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
        let s = pivot.signum() / norm;
        for (c, x) in components.row_mut(i).iter_mut().zip(&v) {
            *c = x * s;
        }
        explained[i] = l;
    }
    let mut projection = Matrix::zeros(k, 2);
    for r in 0..k {
        for i in 0..2 {
            projection[(r, i)] = (0..m).map(|c| centred[(r, c)] * components[(i, c)]).sum();
        }
    }
    Ok(Pca2d {
        projection,
        explained_variance: explained,
        total_variance,
        components,
        mean,
    })
}
