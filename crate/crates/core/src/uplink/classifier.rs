//! Voice/music coding-mode decision from spectral flux.
//!
//! Sustained tonal content changes little from hop to hop, so a low mean
//! flux over the last 50 hops is taken as evidence of music. The decision
//! only flips after 25 consecutive hops of contrary evidence.

use std::collections::VecDeque;

use crate::framestream::CodingMode;
use crate::spectral::SpectralFrame;

pub const FLUX_HISTORY: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierConfig {
    pub music_flux_threshold: f64,
    pub hysteresis_hops: u32,
    pub min_level_dbfs: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            music_flux_threshold: 0.10,
            hysteresis_hops: 25,
            min_level_dbfs: -60.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierState {
    pub mode: CodingMode,
    /// Hops the current decision has persisted.
    pub run_length: u32,
    /// Consecutive hops of evidence against the current decision.
    pub contrary: u32,
    flux_history: VecDeque<f64>,
    prev_magnitude: Option<Vec<f64>>,
}

impl Default for ClassifierState {
    fn default() -> Self {
        Self {
            mode: CodingMode::Voice,
            run_length: 0,
            contrary: 0,
            flux_history: VecDeque::with_capacity(FLUX_HISTORY),
            prev_magnitude: None,
        }
    }
}

impl ClassifierState {
    pub fn mean_flux(&self) -> Option<f64> {
        if self.flux_history.is_empty() {
            None
        } else {
            Some(self.flux_history.iter().sum::<f64>() / self.flux_history.len() as f64)
        }
    }
}

/// Positive magnitude change between hops, relative to the current hop's
/// total magnitude.
pub fn spectral_flux(magnitude: &[f64], prev: &[f64]) -> f64 {
    let rise: f64 = magnitude
        .iter()
        .zip(prev)
        .map(|(m, p)| (m - p).max(0.0))
        .sum();
    let total: f64 = magnitude.iter().sum();
    if total <= 1e-12 {
        0.0
    } else {
        rise / total
    }
}

pub fn classify_mode(
    frame: &SpectralFrame,
    state: &mut ClassifierState,
    cfg: &ClassifierConfig,
) -> CodingMode {
    let magnitude: Vec<f64> = frame.power.iter().map(|p| p.sqrt()).collect();
    let gated = frame.level_dbfs() <= cfg.min_level_dbfs;

    let evidence = match (&state.prev_magnitude, gated) {
        (Some(prev), false) => {
            let flux = spectral_flux(&magnitude, prev);
            if state.flux_history.len() == FLUX_HISTORY {
                state.flux_history.pop_front();
            }
            state.flux_history.push_back(flux);
            state.mean_flux().map(|mean| {
                if mean < cfg.music_flux_threshold {
                    CodingMode::Music
                } else {
                    CodingMode::Voice
                }
            })
        }
        _ => None,
    };
    state.prev_magnitude = Some(magnitude);

    match evidence {
        Some(mode) if mode != state.mode => {
            state.contrary += 1;
            if state.contrary >= cfg.hysteresis_hops {
                state.mode = mode;
                state.contrary = 0;
                state.run_length = 0;
            }
        }
        _ => state.contrary = 0,
    }
    state.run_length += 1;
    state.mode
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::analyze;

    #[test]
    fn silence_keeps_previous_mode() {
        let mut state = ClassifierState {
            mode: CodingMode::Music,
            ..Default::default()
        };
        let cfg = ClassifierConfig::default();
        for frame in analyze(&vec![0.0; 16000]) {
            assert_eq!(classify_mode(&frame, &mut state, &cfg), CodingMode::Music);
        }
        assert!(state.mean_flux().is_none());
    }

    #[test]
    fn flux_of_identical_spectra_is_zero() {
        let m = vec![1.0; 10];
        assert_eq!(spectral_flux(&m, &m), 0.0);
        let prev = vec![0.5; 10];
        assert!((spectral_flux(&m, &prev) - 0.5).abs() < 1e-12);
    }
}
