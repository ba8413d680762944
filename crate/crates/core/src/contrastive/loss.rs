use serde::{Deserialize, Serialize};

use super::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Weights and shape constants of the combined objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub lambda_align: f64,
    pub lambda_unif: f64,
    pub align_alpha: f64,
    pub unif_t: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            lambda_align: 1.0,
            lambda_unif: 1.0,
            align_alpha: 2.0,
            unif_t: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossValue {
    pub align: f64,
    /// Mean of the two sides' uniformity.
    pub unif: f64,
    pub total: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn same_shape(a: &EmbeddingMatrix, b: &EmbeddingMatrix) -> Result<()> {
    if a.values().shape() != b.values().shape() {
        return Err(Error::shape(format!(
            "embedding shapes differ: {:?} vs {:?}",
            a.values().shape(),
            b.values().shape()
        )));
    }
    if a.rows() == 0 {
        return Err(Error::invalid("no embeddings"));
    }
    Ok(())
}

/// Mean over rows of `‖e1 − e2‖^alpha`.
pub fn alignment_loss(e1: &EmbeddingMatrix, e2: &EmbeddingMatrix, alpha: f64) -> Result<f64> {
    alignment_with_grad(e1, e2, alpha).map(|(v, _)| v)
}

/// Loss and its gradient with respect to `e1` (the gradient for `e2` is
/// the negation).
pub fn alignment_with_grad(e1: &EmbeddingMatrix, e2: &EmbeddingMatrix, alpha: f64) -> Result<(f64, Matrix<f64>)> {
    same_shape(e1, e2)?;
    if !(alpha > 0.0) {
        return Err(Error::invalid("alignment exponent must be positive"));
    }
    let (k, m) = e1.values().shape();
    let mut grad = Matrix::zeros(k, m);
    let mut total = 0.0;
    for j in 0..k {
        let d2 = sq_dist(e1.row(j), e2.row(j));
        let dist = d2.sqrt();
        total += dist.powf(alpha);
        if dist > 0.0 {
            let scale = alpha * dist.powf(alpha - 2.0) / k as f64;
            for ((g, a), b) in grad.row_mut(j).iter_mut().zip(e1.row(j)).zip(e2.row(j)) {
                *g = scale * (a - b);
            }
        }
    }
    Ok((total / k as f64, grad))
}

/// `log` of the mean of `exp(−t‖e_j − e_l‖²)` over all ordered pairs,
/// self-pairs included.
pub fn uniformity_loss(e: &EmbeddingMatrix, t: f64) -> Result<f64> {
    uniformity_with_grad(e, t).map(|(v, _)| v)
}

pub fn uniformity_with_grad(e: &EmbeddingMatrix, t: f64) -> Result<(f64, Matrix<f64>)> {
    let (k, m) = e.values().shape();
    if k < 2 {
        return Err(Error::invalid(format!("uniformity needs at least 2 embeddings, got {k}")));
    }
    if !(t > 0.0) {
        return Err(Error::invalid("uniformity temperature must be positive"));
    }
    // Every term is at most 1 and the diagonal contributes k, so the sum
    // is bounded below by k and needs no max-shift.
    let mut kernel = Matrix::<f64>::zeros(k, k);
    let mut sum = k as f64;
    for j in 0..k {
        kernel[(j, j)] = 1.0;
        for l in j + 1..k {
            let v = (-t * sq_dist(e.row(j), e.row(l))).exp();
            kernel[(j, l)] = v;
            kernel[(l, j)] = v;
            sum += 2.0 * v;
        }
    }
    let value = (sum / (k * k) as f64).ln();
    let mut grad = Matrix::zeros(k, m);
    let c = -4.0 * t / sum;
    for j in 0..k {
        let ej = e.row(j);
        let g = grad.row_mut(j);
        for l in 0..k {
            if l == j {
                continue;
            }
            let w = c * kernel[(j, l)];
            for ((gi, a), b) in g.iter_mut().zip(ej).zip(e.row(l)) {
                *gi += w * (a - b);
            }
        }
    }
    Ok((value, grad))
}

/// `λ1·align + λ2·(unif(e1) + unif(e2)) / 2`.
pub fn total_loss(e1: &EmbeddingMatrix, e2: &EmbeddingMatrix, cfg: &LossConfig) -> Result<LossValue> {
    total_with_grad(e1, e2, cfg).map(|(v, _, _)| v)
}

pub fn total_with_grad(
    e1: &EmbeddingMatrix,
    e2: &EmbeddingMatrix,
    cfg: &LossConfig,
) -> Result<(LossValue, Matrix<f64>, Matrix<f64>)> {
    let (align, ga) = alignment_with_grad(e1, e2, cfg.align_alpha)?;
    let (u1, gu1) = uniformity_with_grad(e1, cfg.unif_t)?;
    let (u2, gu2) = uniformity_with_grad(e2, cfg.unif_t)?;
    let unif = 0.5 * (u1 + u2);
    let mut g1 = ga.clone();
    let mut g2 = ga;
    for (((a, b), x), y) in g1
        .as_mut_slice()
        .iter_mut()
        .zip(g2.as_mut_slice())
        .zip(gu1.as_slice())
        .zip(gu2.as_slice())
    {
        *a = cfg.lambda_align * *a + 0.5 * cfg.lambda_unif * x;
        *b = -cfg.lambda_align * *b + 0.5 * cfg.lambda_unif * y;
    }
    let value = LossValue {
        align,
        unif,
        total: cfg.lambda_align * align + cfg.lambda_unif * unif,
    };
    Ok((value, g1, g2))
}
