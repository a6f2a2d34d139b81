//! Turns per-frame decoder state into enhancement directives.
//!
//! The controller combines a signal-class gate (music gets gentler noise
//! reduction), a frame-type detector (SID/NO_DATA frames switch the noise
//! estimate to the decoder's comfort-noise envelope and the MDRP to its
//! silence curve) and a crossfade request on every change.
//!
//! Its configuration file is plain `key = value` text; `#` starts a
//! comment. Recognised keys:
//!
//! ```text
//! music_policy = soft            # soft | bypass | aggressive
//! freeze_variant = false         # re-seed the internal noise tracker from the decoder
//! crossfade_hops = 4
//! nr.alpha_smooth = 0.85
//! nr.bias = 1.5
//! nr.subwindows = 10
//! nr.subwindow_len = 10
//! nr.alpha_gain = 0.85
//! nr.aggressive_beta = 1.5
//! nr.aggressive_floor_db = -18
//! nr.soft_beta = 0.5
//! nr.soft_floor_db = -6
//! nr.silence_margin_db = 6
//! mdrp.attack_alpha = 0.5
//! mdrp.release_alpha = 0.9
//! mdrp.silence_margin_db = 6
//! mdrp.speech_curve = (-80,9),(-50,9),(-20,0),(0,-10)   # all bands
//! mdrp.speech_curve.2 = (-80,6),(0,-6)                  # band 2 only
//! mdrp.silence_curve = (0,0)
//! ```

use std::fmt;
use std::str::FromStr;

use crate::decoder::DecoderState;
use crate::framestream::{CodingMode, FrameCategory};
use crate::mdrp::{DrcCurve, MdrpConfig, MDRP_BANDS};
use crate::nr::NrConfig;
use crate::spectral::expand_envelope;
use crate::Error;

pub const DEFAULT_CROSSFADE_HOPS: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NrPolicy {
    Aggressive,
    Soft,
    Bypass,
}

impl NrPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            NrPolicy::Aggressive => "aggressive",
            NrPolicy::Soft => "soft",
            NrPolicy::Bypass => "bypass",
        }
    }
}

impl FromStr for NrPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "aggressive" => Ok(NrPolicy::Aggressive),
            "soft" => Ok(NrPolicy::Soft),
            "bypass" => Ok(NrPolicy::Bypass),
            other => Err(Error::Config(format!("unknown policy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseSource {
    Internal,
    DecoderGuided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MdrpCurve {
    SpeechCurve,
    SilenceCurve,
}

impl MdrpCurve {
    pub fn as_str(self) -> &'static str {
        match self {
            MdrpCurve::SpeechCurve => "speech",
            MdrpCurve::SilenceCurve => "silence",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnhancementDirective {
    pub nr_policy: NrPolicy,
    pub noise_source: NoiseSource,
    /// Per-bin noise power in normalized (dBFS-referenced) units; present
    /// exactly when `noise_source` is `DecoderGuided`.
    pub guided_noise_psd: Option<Vec<f64>>,
    pub mdrp_curve: MdrpCurve,
    pub freeze_nr_estimation: bool,
    pub crossfade_hops: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig {
    pub music_policy: NrPolicy,
    pub freeze_variant: bool,
    pub crossfade_hops: u32,
    pub nr: NrConfig,
    pub mdrp: MdrpConfig,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            music_policy: NrPolicy::Soft,
            freeze_variant: false,
            crossfade_hops: DEFAULT_CROSSFADE_HOPS,
            nr: NrConfig::default(),
            mdrp: MdrpConfig::default(),
        }
    }
}

pub fn direct(
    state: &DecoderState,
    prev: Option<&EnhancementDirective>,
    cfg: &ControllerConfig,
) -> EnhancementDirective {
    let mut d = if state.coding_mode == CodingMode::Music {
        EnhancementDirective {
            nr_policy: cfg.music_policy,
            noise_source: NoiseSource::Internal,
            guided_noise_psd: None,
            mdrp_curve: MdrpCurve::SpeechCurve,
            freeze_nr_estimation: false,
            crossfade_hops: 0,
        }
    } else if matches!(state.frame_type, FrameCategory::Sid | FrameCategory::NoData) {
        EnhancementDirective {
            nr_policy: NrPolicy::Aggressive,
            noise_source: NoiseSource::DecoderGuided,
            guided_noise_psd: Some(expand_envelope(&state.cng_envelope)),
            mdrp_curve: MdrpCurve::SilenceCurve,
            freeze_nr_estimation: cfg.freeze_variant,
            crossfade_hops: 0,
        }
    } else {
        EnhancementDirective {
            nr_policy: NrPolicy::Aggressive,
            noise_source: NoiseSource::Internal,
            guided_noise_psd: None,
            mdrp_curve: MdrpCurve::SpeechCurve,
            freeze_nr_estimation: false,
            crossfade_hops: 0,
        }
    };
    if let Some(p) = prev {
        if p.nr_policy != d.nr_policy || p.mdrp_curve != d.mdrp_curve {
            d.crossfade_hops = cfg.crossfade_hops;
        }
    }
    d
}

/// Directives for a whole stream, one per decoder state.
pub fn direct_all(states: &[DecoderState], cfg: &ControllerConfig) -> Vec<EnhancementDirective> {
    let mut out: Vec<EnhancementDirective> = Vec::with_capacity(states.len());
    for s in states {
        let d = direct(s, out.last(), cfg);
        out.push(d);
    }
    out
}

fn parse_bool(v: &str) -> Option<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Some(true),
        "false" | "0" | "no" | "off" => Some(false),
        _ => None,
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T, Error> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
}

impl ControllerConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Error> {
        let v = value.trim();
        match key {
            "music_policy" => self.music_policy = v.parse()?,
            "freeze_variant" => {
                self.freeze_variant = parse_bool(v)
                    .ok_or_else(|| Error::Config(format!("freeze_variant: '{v}' is not a flag")))?
            }
            "crossfade_hops" => self.crossfade_hops = parse_num(key, v)?,
            "nr.alpha_smooth" => self.nr.alpha_smooth = parse_num(key, v)?,
            "nr.bias" => self.nr.bias = parse_num(key, v)?,
            "nr.subwindows" => self.nr.subwindows = parse_num(key, v)?,
            "nr.subwindow_len" => self.nr.subwindow_len = parse_num(key, v)?,
            "nr.alpha_gain" => self.nr.alpha_gain = parse_num(key, v)?,
            "nr.aggressive_beta" => self.nr.aggressive.beta = parse_num(key, v)?,
            "nr.aggressive_floor_db" => self.nr.aggressive.gain_floor_db = parse_num(key, v)?,
            "nr.soft_beta" => self.nr.soft.beta = parse_num(key, v)?,
            "nr.soft_floor_db" => self.nr.soft.gain_floor_db = parse_num(key, v)?,
            "nr.silence_margin_db" => self.nr.silence_margin_db = parse_num(key, v)?,
            "mdrp.attack_alpha" => self.mdrp.attack_alpha = parse_num(key, v)?,
            "mdrp.release_alpha" => self.mdrp.release_alpha = parse_num(key, v)?,
            "mdrp.silence_margin_db" => self.mdrp.silence_margin_db = parse_num(key, v)?,
            _ => return self.set_curve(key, v),
        }
        Ok(())
    }

    fn set_curve(&mut self, key: &str, v: &str) -> Result<(), Error> {
        let unknown = || Error::Config(format!("unknown key '{key}'"));
        let rest = key.strip_prefix("mdrp.").ok_or_else(unknown)?;
        let (name, band) = match rest.split_once('.') {
            Some((name, band)) => {
                let b: usize = parse_num(key, band)?;
                if b >= MDRP_BANDS {
                    return Err(Error::Config(format!("{key}: band index out of range")));
                }
                (name, Some(b))
            }
            None => (rest, None),
        };
        let curves = match name {
            "speech_curve" => &mut self.mdrp.speech_curve,
            "silence_curve" => &mut self.mdrp.silence_curve,
            _ => return Err(unknown()),
        };
        let curve: DrcCurve = v.parse()?;
        match band {
            Some(b) => curves[b] = curve,
            None => curves.iter_mut().for_each(|c| *c = curve.clone()),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.nr.validate()?;
        self.mdrp.validate()
    }
}

impl FromStr for ControllerConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self, Error> {
        let mut cfg = ControllerConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            cfg.set(key.trim(), value).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("line {}: {msg}", n + 1)),
                other => other,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for ControllerConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "music_policy = {}", self.music_policy.as_str())?;
        writeln!(f, "freeze_variant = {}", self.freeze_variant)?;
        writeln!(f, "crossfade_hops = {}", self.crossfade_hops)?;
        let nr = &self.nr;
        writeln!(f, "nr.alpha_smooth = {}", nr.alpha_smooth)?;
        writeln!(f, "nr.bias = {}", nr.bias)?;
        writeln!(f, "nr.subwindows = {}", nr.subwindows)?;
        writeln!(f, "nr.subwindow_len = {}", nr.subwindow_len)?;
        writeln!(f, "nr.alpha_gain = {}", nr.alpha_gain)?;
        writeln!(f, "nr.aggressive_beta = {}", nr.aggressive.beta)?;
        writeln!(
            f,
            "nr.aggressive_floor_db = {}",
            nr.aggressive.gain_floor_db
        )?;
        writeln!(f, "nr.soft_beta = {}", nr.soft.beta)?;
        writeln!(f, "nr.soft_floor_db = {}", nr.soft.gain_floor_db)?;
        writeln!(f, "nr.silence_margin_db = {}", nr.silence_margin_db)?;
        let m = &self.mdrp;
        writeln!(f, "mdrp.attack_alpha = {}", m.attack_alpha)?;
        writeln!(f, "mdrp.release_alpha = {}", m.release_alpha)?;
        writeln!(f, "mdrp.silence_margin_db = {}", m.silence_margin_db)?;
        for (b, c) in m.speech_curve.iter().enumerate() {
            writeln!(f, "mdrp.speech_curve.{b} = {c}")?;
        }
        for (b, c) in m.silence_curve.iter().enumerate() {
            writeln!(f, "mdrp.silence_curve.{b} = {c}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::BandEnvelope;

    fn state(frame_type: FrameCategory, coding_mode: CodingMode) -> DecoderState {
        DecoderState {
            frame_type,
            coding_mode,
            cng_envelope: BandEnvelope::flat(-40.0),
            pitch_lag: 0,
            lpc: [0.0; 16],
            vad_active: frame_type == FrameCategory::Speech,
        }
    }

    #[test]
    fn rule_table() {
        let cfg = ControllerConfig::default();
        let d = direct(&state(FrameCategory::Speech, CodingMode::Voice), None, &cfg);
        assert_eq!(
            (d.nr_policy, d.noise_source, d.mdrp_curve),
            (
                NrPolicy::Aggressive,
                NoiseSource::Internal,
                MdrpCurve::SpeechCurve
            )
        );
        let d = direct(&state(FrameCategory::NoData, CodingMode::Voice), None, &cfg);
        assert_eq!(
            (d.nr_policy, d.noise_source, d.mdrp_curve),
            (
                NrPolicy::Aggressive,
                NoiseSource::DecoderGuided,
                MdrpCurve::SilenceCurve
            )
        );
        let psd = d.guided_noise_psd.unwrap();
        assert!(psd.iter().all(|&p| (p - 1e-4).abs() < 1e-12));
        let d = direct(&state(FrameCategory::Speech, CodingMode::Music), None, &cfg);
        assert_eq!(
            (d.nr_policy, d.noise_source, d.mdrp_curve),
            (
                NrPolicy::Soft,
                NoiseSource::Internal,
                MdrpCurve::SpeechCurve
            )
        );
        let d = direct(
            &state(FrameCategory::SpeechLost, CodingMode::Voice),
            None,
            &cfg,
        );
        assert_eq!(d.noise_source, NoiseSource::Internal);
    }

    #[test]
    fn crossfade_on_change_only() {
        let cfg = ControllerConfig::default();
        let states = [
            state(FrameCategory::Speech, CodingMode::Voice),
            state(FrameCategory::Speech, CodingMode::Voice),
            state(FrameCategory::Sid, CodingMode::Voice),
            state(FrameCategory::NoData, CodingMode::Voice),
            state(FrameCategory::Speech, CodingMode::Music),
        ];
        let hops: Vec<u32> = direct_all(&states, &cfg)
            .iter()
            .map(|d| d.crossfade_hops)
            .collect();
        assert_eq!(hops, vec![0, 0, 4, 0, 4]);
    }

    #[test]
    fn bypass_music_policy() {
        let cfg: ControllerConfig = "music_policy = bypass".parse().unwrap();
        let d = direct(&state(FrameCategory::Sid, CodingMode::Music), None, &cfg);
        assert_eq!(d.nr_policy, NrPolicy::Bypass);
        assert_eq!(d.noise_source, NoiseSource::Internal);
    }

    #[test]
    fn config_roundtrip() {
        let text = "\
# test
music_policy = bypass
freeze_variant = true
crossfade_hops = 2
nr.aggressive_floor_db = -20
mdrp.speech_curve.1 = (-60,6),(0,-3)
mdrp.silence_curve = (-90, -1), (0, -1)
";
        let cfg: ControllerConfig = text.parse().unwrap();
        assert_eq!(cfg.music_policy, NrPolicy::Bypass);
        assert!(cfg.freeze_variant);
        assert_eq!(cfg.crossfade_hops, 2);
        assert_eq!(cfg.nr.aggressive.gain_floor_db, -20.0);
        assert_eq!(
            cfg.mdrp.speech_curve[1].points(),
            &[(-60.0, 6.0), (0.0, -3.0)]
        );
        assert_eq!(
            cfg.mdrp.speech_curve[0],
            MdrpConfig::default().speech_curve[0]
        );
        assert!(cfg
            .mdrp
            .silence_curve
            .iter()
            .all(|c| c.gain_db(-30.0) == -1.0));

        let again: ControllerConfig = cfg.to_string().parse().unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn config_errors() {
        for bad in [
            "nonsense",
            "unknown = 1",
            "nr.bias = abc",
            "nr.bias = 0.5",
            "mdrp.speech_curve.3 = (0,0)",
            "mdrp.speech_curve = (0,0),(-10,1)",
            "freeze_variant = maybe",
        ] {
            assert!(bad.parse::<ControllerConfig>().is_err(), "{bad}");
        }
    }
}
