//! Open-loop pitch from the normalized autocorrelation of one frame.

pub const MIN_LAG: usize = 32;
pub const MAX_LAG: usize = 400;

/// Lags whose overlap with the frame is shorter than this are not searched:
/// a 320-sample frame supports lags up to 240.
pub const MIN_OVERLAP: usize = 80;

pub const VOICING_THRESHOLD: f64 = 0.5;

/// Peaks within this fraction of the global maximum count as ties and the
/// shortest lag wins, so period multiples do not shadow the fundamental.
const TIE_TOLERANCE: f64 = 0.01;

pub fn normalized_correlation(frame: &[f64], lag: usize) -> f64 {
    if lag >= frame.len() {
        return 0.0;
    }
    let head = &frame[..frame.len() - lag];
    let tail = &frame[lag..];
    let cross: f64 = head.iter().zip(tail).map(|(a, b)| a * b).sum();
    let e0: f64 = head.iter().map(|a| a * a).sum();
    let e1: f64 = tail.iter().map(|b| b * b).sum();
    let denom = (e0 * e1).sqrt();
    if denom <= 1e-20 {
        0.0
    } else {
        cross / denom
    }
}

/// Pitch lag in samples, or 0 when the frame is unvoiced.
pub fn estimate_pitch(frame: &[f64]) -> u16 {
    let max_lag = MAX_LAG.min(frame.len().saturating_sub(MIN_OVERLAP));
    if max_lag < MIN_LAG {
        return 0;
    }
    // One extra lag on each side so peak detection works at the edges.
    let lo = MIN_LAG - 1;
    let hi = (max_lag + 1).min(frame.len() - 1);
    let corr: Vec<f64> = (lo..=hi)
        .map(|lag| normalized_correlation(frame, lag))
        .collect();
    let at = |lag: usize| corr[lag - lo];

    let best = (MIN_LAG..=max_lag)
        .map(at)
        .fold(f64::NEG_INFINITY, f64::max);
    if best < VOICING_THRESHOLD {
        return 0;
    }
    let is_peak = |lag: usize| {
        let v = at(lag);
        v >= at(lag - 1) && (lag + 1 > hi || v >= at(lag + 1))
    };
    (MIN_LAG..=max_lag)
        .find(|&lag| at(lag) >= best * (1.0 - TIE_TOLERANCE) && is_peak(lag))
        .unwrap_or(0) as u16
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn sine(freq: f64) -> Vec<f64> {
        (0..320)
            .map(|n| (2.0 * PI * freq * n as f64 / 16000.0).sin())
            .collect()
    }

    #[test]
    fn sine_periods() {
        assert_eq!(estimate_pitch(&sine(200.0)), 80);
        assert_eq!(estimate_pitch(&sine(100.0)), 160);
        assert_eq!(estimate_pitch(&sine(250.0)), 64);
    }

    #[test]
    fn white_noise_is_unvoiced() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..320).map(|_| rng.random_range(-1.0..1.0)).collect();
            let peak = (MIN_LAG..=240)
                .map(|lag| normalized_correlation(&x, lag))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(peak < VOICING_THRESHOLD, "seed {seed}: {peak}");
            assert_eq!(estimate_pitch(&x), 0);
        }
    }

    #[test]
    fn silence_is_unvoiced() {
        assert_eq!(estimate_pitch(&[0.0; 320]), 0);
    }
}
