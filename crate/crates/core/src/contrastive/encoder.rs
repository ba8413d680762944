use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{BatchKey, StreamId};
use crate::tensor::Matrix;

/// Intermediate values kept from a forward pass for backpropagation.
#[derive(Debug, Clone, Default)]
pub struct Activations {
    hidden: Option<Matrix<f64>>,
}

/// A differentiable map from feature rows to embedding rows with a flat
/// parameter vector.
pub trait Encoder: Send + Sync + std::fmt::Debug {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];
    fn forward(&self, x: &Matrix<f64>) -> Result<(Matrix<f64>, Activations)>;
    /// Gradient of the loss with respect to the parameters, given its
    /// gradient with respect to the outputs.
    fn backward(&self, x: &Matrix<f64>, acts: &Activations, grad_out: &Matrix<f64>) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EncoderSpec {
    #[default]
    Linear,
    /// Two layers with a tanh hidden layer.
    Mlp { hidden: usize },
}

impl EncoderSpec {
    pub fn build(&self, input_dim: usize, output_dim: usize, seed: u64) -> Result<Box<dyn Encoder>> {
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::invalid("encoder dimensions must be positive"));
        }
        Ok(match *self {
            EncoderSpec::Linear => Box::new(Linear::new(input_dim, output_dim, seed)),
            EncoderSpec::Mlp { hidden } => {
                if hidden == 0 {
                    return Err(Error::invalid("hidden width must be positive"));
                }
                Box::new(Mlp::new(input_dim, hidden, output_dim, seed))
            }
        })
    }
}

/// Gaussian init with variance `1 / fan_in`, zero biases.
fn init_layer(params: &mut [f64], fan_in: usize, seed: u64, layer: u64) {
    let rng = BatchKey::new(seed).stream(StreamId::Encoder).child(layer);
    let s = (1.0 / fan_in as f64).sqrt();
    for (i, p) in params.iter_mut().enumerate() {
        *p = s * rng.normal_at(0, i as u64);
    }
}

/// `y = x W + b` for row-major `W` of shape `in × out`.
fn affine(x: &Matrix<f64>, w: &[f64], b: &[f64], out_dim: usize) -> Matrix<f64> {
    let mut y = Matrix::zeros(x.rows(), out_dim);
    for r in 0..x.rows() {
        let yr = y.row_mut(r);
        yr.copy_from_slice(b);
        for (i, &a) in x.row(r).iter().enumerate() {
            if a != 0.0 {
                for (o, wv) in yr.iter_mut().zip(&w[i * out_dim..(i + 1) * out_dim]) {
                    *o += a * wv;
                }
            }
        }
    }
    y
}

/// Accumulates `dW = xᵀ g` and `db = Σ g`.
fn affine_backward(x: &Matrix<f64>, g: &Matrix<f64>, dw: &mut [f64], db: &mut [f64]) {
    let out_dim = g.cols();
    for r in 0..x.rows() {
        let gr = g.row(r);
        for (d, v) in db.iter_mut().zip(gr) {
            *d += v;
        }
        for (i, &a) in x.row(r).iter().enumerate() {
            if a != 0.0 {
                for (d, v) in dw[i * out_dim..(i + 1) * out_dim].iter_mut().zip(gr) {
                    *d += a * v;
                }
            }
        }
    }
}

/// `g Wᵀ`: gradient with respect to the layer input.
fn affine_input_grad(g: &Matrix<f64>, w: &[f64], in_dim: usize) -> Matrix<f64> {
    let out_dim = g.cols();
    let mut dx = Matrix::zeros(g.rows(), in_dim);
    for r in 0..g.rows() {
        let gr = g.row(r);
        for (i, d) in dx.row_mut(r).iter_mut().enumerate() {
            *d = w[i * out_dim..(i + 1) * out_dim].iter().zip(gr).map(|(a, b)| a * b).sum();
        }
    }
    dx
}

fn check_input(x: &Matrix<f64>, dim: usize) -> Result<()> {
    if x.cols() != dim {
        return Err(Error::shape(format!("encoder expects {dim} features, got {}", x.cols())));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Linear {
    input_dim: usize,
    output_dim: usize,
    params: Vec<f64>,
}

impl Linear {
    pub fn new(input_dim: usize, output_dim: usize, seed: u64) -> Self {
        let mut params = vec![0.0; input_dim * output_dim + output_dim];
        init_layer(&mut params[..input_dim * output_dim], input_dim, seed, 0);
        Self {
            input_dim,
            output_dim,
            params,
        }
    }

    fn split(&self) -> (&[f64], &[f64]) {
        self.params.split_at(self.input_dim * self.output_dim)
    }
}

impl Encoder for Linear {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn forward(&self, x: &Matrix<f64>) -> Result<(Matrix<f64>, Activations)> {
        check_input(x, self.input_dim)?;
        let (w, b) = self.split();
        Ok((affine(x, w, b, self.output_dim), Activations::default()))
    }

    fn backward(&self, x: &Matrix<f64>, _: &Activations, grad_out: &Matrix<f64>) -> Vec<f64> {
        let mut grad = vec![0.0; self.params.len()];
        let (dw, db) = grad.split_at_mut(self.input_dim * self.output_dim);
        affine_backward(x, grad_out, dw, db);
        grad
    }
}

#[derive(Debug, Clone)]
pub struct Mlp {
    input_dim: usize,
    hidden: usize,
    output_dim: usize,
    params: Vec<f64>,
}

impl Mlp {
    pub fn new(input_dim: usize, hidden: usize, output_dim: usize, seed: u64) -> Self {
        let n1 = input_dim * hidden;
        let n2 = hidden * output_dim;
        let mut params = vec![0.0; n1 + hidden + n2 + output_dim];
        init_layer(&mut params[..n1], input_dim, seed, 0);
        init_layer(&mut params[n1 + hidden..n1 + hidden + n2], hidden, seed, 1);
        Self {
            input_dim,
            hidden,
            output_dim,
            params,
        }
    }

    fn offsets(&self) -> [usize; 4] {
        let n1 = self.input_dim * self.hidden;
        let n2 = self.hidden * self.output_dim;
        [n1, n1 + self.hidden, n1 + self.hidden + n2, self.params.len()]
    }
}

impl Encoder for Mlp {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn forward(&self, x: &Matrix<f64>) -> Result<(Matrix<f64>, Activations)> {
        check_input(x, self.input_dim)?;
        let [a, b, c, d] = self.offsets();
        let p = &self.params;
        let mut h = affine(x, &p[..a], &p[a..b], self.hidden);
        h.as_mut_slice().iter_mut().for_each(|v| *v = v.tanh());
        let y = affine(&h, &p[b..c], &p[c..d], self.output_dim);
        Ok((y, Activations { hidden: Some(h) }))
    }

    fn backward(&self, x: &Matrix<f64>, acts: &Activations, grad_out: &Matrix<f64>) -> Vec<f64> {
        let h = acts.hidden.as_ref().expect("forward pass of this encoder");
        let [a, b, c, _] = self.offsets();
        let mut grad = vec![0.0; self.params.len()];
        {
            let (_, rest) = grad.split_at_mut(b);
            let (dw2, db2) = rest.split_at_mut(c - b);
            affine_backward(h, grad_out, dw2, db2);
        }
        let mut gh = affine_input_grad(grad_out, &self.params[b..c], self.hidden);
        for (g, hv) in gh.as_mut_slice().iter_mut().zip(h.as_slice()) {
            *g *= 1.0 - hv * hv;
        }
        let (dw1, rest) = grad.split_at_mut(a);
        affine_backward(x, &gh, dw1, &mut rest[..b - a]);
        grad
    }
}
