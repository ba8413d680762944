use super::ControlSignal;
use crate::error::{Error, Result};

/// Natural-unit ADSR settings. Times in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdsrParams {
    pub attack_s: f64,
    pub decay_s: f64,
    pub sustain: f64,
    pub release_s: f64,
    /// Segment shape exponent; 1 is linear.
    pub alpha: f64,
}

impl AdsrParams {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("attack", self.attack_s),
            ("decay", self.decay_s),
            ("release", self.release_s),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be a non-negative duration, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.sustain) {
            return Err(Error::invalid(format!("sustain must be in [0, 1], got {}", self.sustain)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("curve alpha must be positive, got {}", self.alpha)));
        }
        Ok(())
    }

    /// Envelope level while the note is held, `t` seconds after note-on.
    #[inline]
    fn held(&self, t: f64) -> f64 {
        if t < self.attack_s {
            (t / self.attack_s).powf(self.alpha)
        } else if t < self.attack_s + self.decay_s {
            let x = (t - self.attack_s) / self.decay_s;
            1.0 - (1.0 - self.sustain) * x.powf(self.alpha)
        } else {
            self.sustain
        }
    }

    /// Level at time `t` for a note released at `note_off_s`.
    #[inline]
    pub fn value_at(&self, t: f64, note_off_s: f64) -> f64 {
        if t < note_off_s {
            return self.held(t);
        }
        let dt = t - note_off_s;
        if dt < self.release_s {
            self.held(note_off_s) * (1.0 - (dt / self.release_s).powf(self.alpha))
        } else {
            0.0
        }
    }
}

/// Attack-decay-sustain-release envelope in [0, 1].
///
/// The note is held from t = 0 until `note_on_s`, after which the level
/// falls from wherever it is to zero over the release time.
pub fn adsr_envelope(
    params: &AdsrParams,
    note_on_s: f64,
    n_samples: usize,
    rate_hz: f64,
) -> Result<ControlSignal> {
    params.validate()?;
    if !(rate_hz > 0.0) {
        return Err(Error::invalid("control rate must be positive"));
    }
    if !(note_on_s >= 0.0) {
        return Err(Error::invalid(format!("note duration must be non-negative, got {note_on_s}")));
    }
    if note_on_s > n_samples as f64 / rate_hz + 1e-9 {
        return Err(Error::invalid(format!(
            "note duration {note_on_s}s exceeds the signal length {}s",
            n_samples as f64 / rate_hz
        )));
    }
    let mut values = vec![0.0; n_samples];
    fill_adsr(params, note_on_s, rate_hz, &mut values);
    Ok(ControlSignal { values, rate_hz })
}

pub(crate) fn fill_adsr(params: &AdsrParams, note_off_s: f64, rate_hz: f64, out: &mut [f32]) {
    for (i, v) in out.iter_mut().enumerate() {
        let t = i as f64 / rate_hz;
        *v = params.value_at(t, note_off_s).clamp(0.0, 1.0) as f32;
    }
}
