//! Waveform to log-mel conversion.

mod mel;
mod resample;

pub use mel::{log_mel, mel_band_centers_hz, MelFrontend, MelSpec, LOG_OFFSET, MEL_BANDS, MEL_FRAMES};
pub use resample::{resample, resample_signal, stretch_to_len};

/// Rate the log-mel frontend operates at.
pub const FRONTEND_RATE_HZ: u32 = 16_000;
