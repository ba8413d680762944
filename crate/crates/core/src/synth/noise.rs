use crate::rng::CounterRng;
use crate::tensor::Matrix;

/// Uniform white noise in [-1, 1); row `r` depends only on `(seed, r)`.
pub fn noise_gen(seed: u64, n_samples: usize, k: usize) -> Matrix<f32> {
    let rng = CounterRng::from_key(seed);
    let mut out = Matrix::zeros(k, n_samples);
    for r in 0..k {
        fill_noise(&rng, r as u64, out.row_mut(r));
    }
    out
}

#[inline]
pub(crate) fn fill_noise(rng: &CounterRng, row: u64, out: &mut [f32]) {
    for (i, v) in out.iter_mut().enumerate() {
        *v = (2.0 * rng.uniform_at(row, i as u64) - 1.0) as f32;
    }
}
