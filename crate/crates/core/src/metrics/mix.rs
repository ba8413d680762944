use crate::dsp::peak;
use crate::error::{Error, Result};
use crate::rng::{BatchKey, StreamId};

/// Layers `n_segments` distinct whole-second excerpts drawn from all
/// clips, with gain `1/n`, then peak-normalizes the result to 1.
pub fn mix_segments(clips: &[&[f32]], sample_rate_hz: u32, n_segments: usize, seed: u64) -> Result<Vec<f32>> {
    let sec = sample_rate_hz as usize;
    if sec == 0 || n_segments == 0 || clips.is_empty() {
        return Err(Error::invalid("mixing needs clips, a sample rate and at least one segment"));
    }
    let mut pool = Vec::new();
    for (c, clip) in clips.iter().enumerate() {
        if clip.len() < sec {
            return Err(Error::invalid(format!(
                "clip {c} is shorter than one second ({} samples at {sample_rate_hz} Hz)",
                clip.len()
            )));
        }
        pool.extend((0..clip.len() / sec).map(|s| (c, s)));
    }
    if n_segments > pool.len() {
        return Err(Error::invalid(format!(
            "asked for {n_segments} segments but only {} whole seconds are available",
            pool.len()
        )));
    }
    // Partial Fisher-Yates: the first n entries become the selection.
    let rng = BatchKey::new(seed).stream(StreamId::Mix);
    for i in 0..n_segments {
        let j = i + rng.index_at(0, i as u64, pool.len() - i);
        pool.swap(i, j);
    }
    let gain = 1.0 / n_segments as f32;
    let mut out = vec![0.0f32; sec];
    for &(c, s) in &pool[..n_segments] {
        for (o, v) in out.iter_mut().zip(&clips[c][s * sec..(s + 1) * sec]) {
            *o += gain * v;
        }
    }
    let p = peak(&out);
    if p > 0.0 {
        out.iter_mut().for_each(|v| *v /= p);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::magnitude_spectrum;

    fn tone(hz: f64, n: usize) -> Vec<f32> {
        (0..n)
            .map(|i| (0.3 * (std::f64::consts::TAU * hz * i as f64 / 8000.0).sin()) as f32)
            .collect()
    }

    #[test]
    fn single_segment_is_normalized_excerpt() {
        let x = tone(200.0, 8000);
        let y = mix_segments(&[&x], 8000, 1, 0).unwrap();
        let p = peak(&x);
        assert!(y.iter().zip(&x).all(|(a, b)| (a - b / p).abs() < 1e-6));
    }

    #[test]
    fn clip_with_itself_is_proportional() {
        let x = tone(300.0, 8000);
        let y = mix_segments(&[&x, &x], 8000, 2, 3).unwrap();
        let p = peak(&x);
        assert!(y.iter().zip(&x).all(|(a, b)| (a - b / p).abs() < 1e-6));
    }

    #[test]
    fn two_tones_show_both_peaks() {
        let (a, b) = (tone(440.0, 8000), tone(880.0, 8000));
        let y = mix_segments(&[&a, &b], 8000, 2, 1).unwrap();
        // 1 s at 8 kHz: bins are 1 Hz wide.
        let m = magnitude_spectrum(&y);
        let mut idx: Vec<usize> = (0..m.len()).collect();
        idx.sort_by(|&i, &j| m[j].total_cmp(&m[i]));
        let mut top = idx[..2].to_vec();
        top.sort();
        assert_eq!(top, vec![440, 880]);
    }

    #[test]
    fn selection_is_distinct_and_seeded() {
        // Five seconds, each a distinct constant level.
        let x: Vec<f32> = (0..5 * 100).map(|i| (i / 100 + 1) as f32).collect();
        let y = mix_segments(&[&x], 100, 5, 9).unwrap();
        // All five seconds used once: the sum is constant.
        assert!(y.iter().all(|v| (v - 1.0).abs() < 1e-6));
        let a = mix_segments(&[&x], 100, 2, 1).unwrap();
        assert_eq!(a, mix_segments(&[&x], 100, 2, 1).unwrap());
    }

    #[test]
    fn errors() {
        let short = vec![0.0f32; 50];
        assert!(mix_segments(&[&short], 100, 1, 0).is_err());
        let x = vec![0.1f32; 200];
        assert!(mix_segments(&[&x], 100, 3, 0).is_err());
        assert!(mix_segments(&[&x], 100, 0, 0).is_err());
    }
}
