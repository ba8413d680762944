use serde::Serialize;

use crate::error::{Error, Result};
use crate::tensor::Matrix;

const SIMPLEX_TOL: f64 = 1e-5;

/// Row-stochastic `k × C` matrix of class probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    values: Matrix<f64>,
}

impl ProbabilityMatrix {
    pub fn new(values: Matrix<f64>) -> Result<Self> {
        if values.cols() < 2 {
            return Err(Error::invalid("probability rows need at least 2 classes"));
        }
        for (r, row) in values.iter_rows().enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::invalid(format!(
                    "row {r} is not on the probability simplex (sum {sum})"
                )));
            }
        }
        Ok(Self { values })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn values(&self) -> &Matrix<f64> {
        &self.values
    }
}

/// Per-row ambiguity measures of a classifier's output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CausalUncertainty {
    /// Largest class probability.
    pub max_prob: f64,
    /// Entropy divided by `ln C`, in `[0, 1]`.
    pub entropy: f64,
    /// Top-1 minus top-2 probability.
    pub top2_gap: f64,
}

pub fn causal_uncertainty(p: &ProbabilityMatrix) -> Vec<CausalUncertainty> {
    let c = p.values.cols() as f64;
    p.values
        .iter_rows()
        .map(|row| {
            let (mut first, mut second) = (f64::MIN, f64::MIN);
            let mut h = 0.0;
            for &v in row {
                if v > first {
                    second = first;
                    first = v;
                } else if v > second {
                    second = v;
                }
                if v > 0.0 {
                    h -= v * v.ln();
                }
            }
            CausalUncertainty {
                max_prob: first,
                entropy: (h / c.ln()).clamp(0.0, 1.0),
                top2_gap: first - second,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_rows() {
        let p = ProbabilityMatrix::from_rows(vec![
            vec![0.0, 1.0, 0.0],
            vec![1.0 / 3.0; 3],
            vec![0.5, 0.3, 0.2],
        ])
        .unwrap();
        let cu = causal_uncertainty(&p);
        assert_eq!((cu[0].max_prob, cu[0].entropy, cu[0].top2_gap), (1.0, 0.0, 1.0));
        assert!((cu[1].max_prob - 1.0 / 3.0).abs() < 1e-12);
        assert!((cu[1].entropy - 1.0).abs() < 1e-12);
        assert!(cu[1].top2_gap.abs() < 1e-12);
        let h = -(0.5f64 * 0.5f64.ln() + 0.3 * 0.3f64.ln() + 0.2 * 0.2f64.ln()) / 3f64.ln();
        assert!((cu[2].entropy - h).abs() < 1e-12);
        assert!((h - 0.937_231).abs() < 1e-6);
        assert!((cu[2].top2_gap - 0.2).abs() < 1e-12);
    }

    #[test]
    fn ties_give_zero_gap() {
        let p = ProbabilityMatrix::from_rows(vec![vec![0.4, 0.4, 0.2]]).unwrap();
        assert_eq!(causal_uncertainty(&p)[0].top2_gap, 0.0);
    }

    #[test]
    fn rejects_non_simplex() {
        assert!(ProbabilityMatrix::from_rows(vec![vec![0.5, 0.4]]).is_err());
        assert!(ProbabilityMatrix::from_rows(vec![vec![1.5, -0.5]]).is_err());
        assert!(ProbabilityMatrix::from_rows(vec![vec![1.0]]).is_err());
    }
}
