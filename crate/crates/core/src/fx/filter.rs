use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// Normalized biquad coefficients (a0 = 1).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Pass {
    Low,
    High,
}

impl Biquad {
    /// Second-order Butterworth section from the usual bilinear-transform
    /// cookbook formulas.
    pub(crate) fn butterworth(pass: Pass, cutoff_hz: f64, sample_rate_hz: f64) -> Result<Self> {
        if !(cutoff_hz > 0.0 && cutoff_hz < sample_rate_hz / 2.0) {
            return Err(Error::invalid(format!(
                "cutoff {cutoff_hz} Hz must lie strictly between 0 and Nyquist ({} Hz)",
                sample_rate_hz / 2.0
            )));
        }
        let w = 2.0 * PI * cutoff_hz / sample_rate_hz;
        let (sin, cos) = w.sin_cos();
        let alpha = sin / (2.0 * FRAC_1_SQRT_2);
        let a0 = 1.0 + alpha;
        let b = match pass {
            Pass::Low => [(1.0 - cos) / 2.0, 1.0 - cos, (1.0 - cos) / 2.0],
            Pass::High => [(1.0 + cos) / 2.0, -(1.0 + cos), (1.0 + cos) / 2.0],
        };
        Ok(Self {
            b: b.map(|v| v / a0),
            a: [-2.0 * cos / a0, (1.0 - alpha) / a0],
        })
    }

    /// Transposed direct form II, zero initial state.
    pub(crate) fn process(&self, x: &mut [f32]) {
        let (mut s1, mut s2) = (0.0f64, 0.0f64);
        for v in x {
            let input = *v as f64;
            let y = self.b[0] * input + s1;
            s1 = self.b[1] * input - self.a[0] * y + s2;
            s2 = self.b[2] * input - self.a[1] * y;
            *v = y as f32;
        }
    }
}
