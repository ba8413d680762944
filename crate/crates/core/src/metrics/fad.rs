use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::contrastive::EmbeddingMatrix;
use crate::error::{Error, Result};

/// Eigenvalues below `-EIG_TOL × max(1, largest |λ|)` mean the matrix is
/// not positive semi-definite; smaller negatives are rounding and clamp to 0.
const EIG_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub n: usize,
}

impl GaussianStats {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Fewer samples than dimensions: the covariance is singular.
    pub fn is_underdetermined(&self) -> bool {
        self.n <= self.dim()
    }
}

/// Mean and unbiased covariance of the rows.
pub fn fit_gaussian(e: &EmbeddingMatrix) -> Result<GaussianStats> {
    let (n, m) = e.values().shape();
    if n < 2 {
        return Err(Error::invalid("fitting a Gaussian needs at least 2 samples"));
    }
    let x = DMatrix::from_row_slice(n, m, e.values().as_slice());
    let mu = DVector::from_iterator(m, x.column_iter().map(|c| c.mean()));
    let mut centred = x;
    for mut row in centred.row_iter_mut() {
        row -= mu.transpose();
    }
    let mut sigma = centred.transpose() * &centred / (n - 1) as f64;
    sigma = (&sigma + sigma.transpose()) * 0.5;
    Ok(GaussianStats { mu, sigma, n })
}

/// Square root of a symmetric PSD matrix; also returns its eigenvalues.
fn sqrt_psd(m: &DMatrix<f64>, what: &str) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let scale = eig.eigenvalues.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut roots = eig.eigenvalues.clone();
    for l in roots.iter_mut() {
        if *l < -EIG_TOL * scale {
            return Err(Error::Numerical(format!("{what} is not positive semi-definite (eigenvalue {l})")));
        }
        *l = l.max(0.0).sqrt();
    }
    let v = &eig.eigenvectors;
    Ok((v * DMatrix::from_diagonal(&roots) * v.transpose(), roots))
}

/// `‖μa − μb‖² + Tr Σa + Tr Σb − 2 Tr (Σa^½ Σb Σa^½)^½`.
pub fn frechet_distance(a: &GaussianStats, b: &GaussianStats) -> Result<f64> {
    if a.dim() != b.dim() || a.sigma.shape() != (a.dim(), a.dim()) || b.sigma.shape() != (b.dim(), b.dim()) {
        return Err(Error::shape(format!("statistics have dimensions {} and {}", a.dim(), b.dim())));
    }
    let (sa, _) = sqrt_psd(&a.sigma, "first covariance")?;
    sqrt_psd(&b.sigma, "second covariance")?;
    let inner = &sa * &b.sigma * &sa;
    let (_, roots) = sqrt_psd(&inner, "covariance product")?;
    let diff = (&a.mu - &b.mu).norm_squared();
    let value = diff + a.sigma.trace() + b.sigma.trace() - 2.0 * roots.sum();
    if !value.is_finite() {
        return Err(Error::Numerical("Fréchet distance is not finite".into()));
    }
    Ok(value.max(0.0))
}
