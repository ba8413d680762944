use super::spec::Range;
use super::ControlSignal;
use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Routes `n_src` control sources to `n_dst` destinations.
///
/// Destination `d` is `sum_s gains[s, d] * source_s`, clamped to
/// `ranges[d]`. All sources must share length and rate.
pub fn modulation_mix(
    sources: &[ControlSignal],
    gains: &Matrix<f64>,
    ranges: &[Range],
) -> Result<Vec<ControlSignal>> {
    if gains.rows() != sources.len() {
        return Err(Error::shape(format!(
            "gain matrix has {} rows for {} sources",
            gains.rows(),
            sources.len()
        )));
    }
    if gains.cols() != ranges.len() {
        return Err(Error::shape(format!(
            "gain matrix has {} columns for {} destinations",
            gains.cols(),
            ranges.len()
        )));
    }
    if let Some(g) = gains.as_slice().iter().find(|g| !(0.0..=1.0).contains(*g)) {
        return Err(Error::invalid(format!("modulation gain {g} outside [0, 1]")));
    }
    let Some(first) = sources.first() else {
        return Err(Error::invalid("modulation mix needs at least one source"));
    };
    let (n, rate_hz) = (first.len(), first.rate_hz);
    if sources.iter().any(|s| s.len() != n || s.rate_hz != rate_hz) {
        return Err(Error::shape("modulation sources differ in length or rate"));
    }
    let inputs: Vec<&[f32]> = sources.iter().map(|s| s.values.as_slice()).collect();
    Ok(ranges
        .iter()
        .enumerate()
        .map(|(d, &range)| {
            let mut values = vec![0.0; n];
            mix_column(&inputs, |s| gains[(s, d)], &mut values);
            values.iter_mut().for_each(|v| *v = range.clamp(*v));
            ControlSignal { values, rate_hz }
        })
        .collect())
}

/// Unclamped weighted sum of `inputs` into `out`.
pub(crate) fn mix_column(inputs: &[&[f32]], gain: impl Fn(usize) -> f64, out: &mut [f32]) {
    out.fill(0.0);
    for (s, src) in inputs.iter().enumerate() {
        let g = gain(s) as f32;
        if g == 0.0 {
            continue;
        }
        for (o, &x) in out.iter_mut().zip(src.iter()) {
            *o += g * x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f32) -> ControlSignal {
        ControlSignal::constant(v, 8, 1000.0)
    }

    #[test]
    fn zero_gains() {
        let g = Matrix::zeros(2, 3);
        let out = modulation_mix(&[c(0.3), c(-0.9)], &g, &[Range::Bipolar; 3]).unwrap();
        assert!(out.iter().all(|s| s.values.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn identity_route() {
        let g = Matrix::from_vec(1, 1, vec![1.0]).unwrap();
        let src = ControlSignal {
            values: vec![0.1, 0.5, -0.2, 0.9],
            rate_hz: 1000.0,
        };
        let out = modulation_mix(std::slice::from_ref(&src), &g, &[Range::Bipolar]).unwrap();
        assert_eq!(out[0], src);
    }

    #[test]
    fn weighted_sum() {
        let g = Matrix::from_vec(2, 1, vec![0.5, 0.5]).unwrap();
        let out = modulation_mix(&[c(0.4), c(0.8)], &g, &[Range::Unipolar]).unwrap();
        assert!(out[0].values.iter().all(|v| (v - 0.6).abs() < 1e-6));
    }

    #[test]
    fn clamps_to_destination_range() {
        let g = Matrix::from_vec(2, 2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let out = modulation_mix(&[c(0.8), c(0.8)], &g, &[Range::Unipolar, Range::Unbounded]).unwrap();
        assert_eq!(out[0].values[0], 1.0);
        assert!((out[1].values[0] - 1.6).abs() < 1e-6);
    }

    #[test]
    fn dimension_mismatch() {
        let g = Matrix::zeros(3, 1);
        assert!(matches!(
            modulation_mix(&[c(0.1)], &g, &[Range::Unipolar]),
            Err(Error::ShapeMismatch(_))
        ));
        let g = Matrix::zeros(1, 2);
        assert!(modulation_mix(&[c(0.1)], &g, &[Range::Unipolar]).is_err());
    }
}
