//! Energy-threshold voice activity detector with hangover.

use std::collections::VecDeque;

pub const HISTORY_LEN: usize = 100;
pub const HANGOVER_FRAMES: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VadConfig {
    /// Required margin above the tracked noise floor.
    pub margin_db: f64,
    /// Absolute activity gate.
    pub min_level_dbfs: f64,
    pub hangover_frames: u32,
}

impl Default for VadConfig {
    fn default() -> Self {
        Self {
            margin_db: 6.0,
            min_level_dbfs: -60.0,
            hangover_frames: HANGOVER_FRAMES,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VadState {
    pub noise_floor_db: f64,
    pub hangover_remaining: u32,
    history: VecDeque<f64>,
}

impl Default for VadState {
    fn default() -> Self {
        Self {
            noise_floor_db: FLOOR_DB,
            hangover_remaining: 0,
            history: VecDeque::with_capacity(HISTORY_LEN),
        }
    }
}

const FLOOR_DB: f64 = -120.0;

impl VadState {
    pub fn history(&self) -> impl Iterator<Item = f64> + '_ {
        self.history.iter().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VadDecision {
    pub active: bool,
    /// Decision before hangover.
    pub raw_active: bool,
    pub energy_db: f64,
}

pub fn frame_energy_db(frame: &[f64]) -> f64 {
    let ms = frame.iter().map(|x| x * x).sum::<f64>() / frame.len().max(1) as f64;
    10.0 * (ms + 1e-12).log10()
}

/// The current frame's energy enters the history before the floor is taken,
/// so the floor is `min` over the last 100 frames including this one.
pub fn vad_decide(frame: &[f64], state: &mut VadState, cfg: &VadConfig) -> VadDecision {
    let energy_db = frame_energy_db(frame);
    if state.history.len() == HISTORY_LEN {
        state.history.pop_front();
    }
    state.history.push_back(energy_db);
    state.noise_floor_db = state.history.iter().copied().fold(f64::INFINITY, f64::min);

    let raw_active =
        energy_db > state.noise_floor_db + cfg.margin_db && energy_db > cfg.min_level_dbfs;
    let active = if raw_active {
        state.hangover_remaining = cfg.hangover_frames;
        true
    } else if state.hangover_remaining > 0 {
        state.hangover_remaining -= 1;
        true
    } else {
        false
    };
    VadDecision {
        active,
        raw_active,
        energy_db,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine_frame(amp: f64) -> Vec<f64> {
        (0..320)
            .map(|n| amp * (2.0 * PI * 440.0 * n as f64 / 16000.0).sin())
            .collect()
    }

    #[test]
    fn zero_frame_is_inactive() {
        let mut s = VadState::default();
        let d = vad_decide(&[0.0; 320], &mut s, &VadConfig::default());
        assert!(!d.active);
        assert_eq!(s.noise_floor_db, -120.0);
    }

    #[test]
    fn sine_after_silence_is_active() {
        let mut s = VadState::default();
        let cfg = VadConfig::default();
        for _ in 0..10 {
            vad_decide(&[0.0; 320], &mut s, &cfg);
        }
        assert!(vad_decide(&sine_frame(1.0), &mut s, &cfg).active);
    }

    #[test]
    fn hangover_is_five_frames() {
        let mut s = VadState::default();
        let cfg = VadConfig::default();
        let quiet = sine_frame(1e-3);
        let loud = sine_frame(0.5);
        let mut decisions = Vec::new();
        for _ in 0..10 {
            decisions.push(vad_decide(&quiet, &mut s, &cfg).active);
        }
        for _ in 0..10 {
            decisions.push(vad_decide(&loud, &mut s, &cfg).active);
        }
        for _ in 0..10 {
            decisions.push(vad_decide(&quiet, &mut s, &cfg).active);
        }
        assert!(decisions[..10].iter().all(|a| !a));
        assert!(decisions[10..20].iter().all(|&a| a));
        let trailing = decisions[20..].iter().take_while(|&&a| a).count();
        assert_eq!(trailing, 5);
        assert!(decisions[25..].iter().all(|a| !a));
    }

    #[test]
    fn hangover_bounded() {
        let mut s = VadState::default();
        let cfg = VadConfig::default();
        for i in 0..300 {
            let amp = if (i / 7) % 2 == 0 { 0.5 } else { 1e-4 };
            vad_decide(&sine_frame(amp), &mut s, &cfg);
            assert!(s.hangover_remaining <= 5);
            assert!(s.history().count() <= HISTORY_LEN);
        }
    }
}
