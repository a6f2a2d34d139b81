//! Three-band dynamic range processor.
//!
//! Each hop, the level of every band is mapped through a piecewise-linear
//! gain curve, smoothed with separate attack and release coefficients in
//! the dB domain and applied to the band's bins. Guided, the curve follows
//! the directive: the silence curve during SID/NO_DATA frames keeps the
//! expander from lifting background noise.

use std::fmt;
use std::str::FromStr;

use crate::controller::{EnhancementDirective, MdrpCurve};
use crate::nr::frame_of_hop;
use crate::spectral::{self, normalized_power, LOG_EPS, NUM_BINS};
use crate::{Error, Guidance};

pub const MDRP_BANDS: usize = 3;

/// Inclusive bin ranges; bin 0 is left untouched.
pub const DEFAULT_BANDS: [(usize, usize); MDRP_BANDS] = [(1, 32), (33, 128), (129, 256)];

/// Piecewise-linear gain (dB) versus input level (dBFS), flat beyond the
/// outermost knots.
#[derive(Debug, Clone, PartialEq)]
pub struct DrcCurve {
    points: Vec<(f64, f64)>,
}

impl DrcCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, Error> {
        if points.is_empty() {
            return Err(Error::Config("curve needs at least one knot".into()));
        }
        if points.iter().any(|(l, g)| !l.is_finite() || !g.is_finite()) {
            return Err(Error::Config("curve knots must be finite".into()));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Config(
                "curve levels must be strictly increasing".into(),
            ));
        }
        Ok(Self { points })
    }

    pub fn flat(gain_db: f64) -> Self {
        Self {
            points: vec![(0.0, gain_db)],
        }
    }

    pub fn default_speech() -> Self {
        Self {
            points: vec![(-80.0, 9.0), (-50.0, 9.0), (-20.0, 0.0), (0.0, -10.0)],
        }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn gain_db(&self, level_db: f64) -> f64 {
        let pts = &self.points;
        let (first, last) = (pts[0], pts[pts.len() - 1]);
        if level_db <= first.0 {
            return first.1;
        }
        if level_db >= last.0 {
            return last.1;
        }
        let i = pts.partition_point(|p| p.0 <= level_db);
        let (l0, g0) = pts[i - 1];
        let (l1, g1) = pts[i];
        g0 + (g1 - g0) * (level_db - l0) / (l1 - l0)
    }
}

pub fn curve_gain(level_db: f64, curve: &DrcCurve) -> f64 {
    curve.gain_db(level_db)
}

impl FromStr for DrcCurve {
    type Err = Error;

    /// Parses `(level,gain),(level,gain),...`.
    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::Config(format!("malformed curve '{s}'"));
        let mut points = Vec::new();
        let mut rest = s.trim();
        while !rest.is_empty() {
            let inner = rest.strip_prefix('(').ok_or_else(bad)?;
            let close = inner.find(')').ok_or_else(bad)?;
            let (l, g) = inner[..close].split_once(',').ok_or_else(bad)?;
            let l: f64 = l.trim().parse().map_err(|_| bad())?;
            let g: f64 = g.trim().parse().map_err(|_| bad())?;
            points.push((l, g));
            rest = inner[close + 1..].trim_start();
            if let Some(r) = rest.strip_prefix(',') {
                rest = r.trim_start();
                if rest.is_empty() {
                    return Err(bad());
                }
            } else if !rest.is_empty() {
                return Err(bad());
            }
        }
        DrcCurve::new(points)
    }
}

impl fmt::Display for DrcCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (l, g)) in self.points.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "({l},{g})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdrpConfig {
    pub bands: [(usize, usize); MDRP_BANDS],
    pub speech_curve: [DrcCurve; MDRP_BANDS],
    pub silence_curve: [DrcCurve; MDRP_BANDS],
    pub attack_alpha: f64,
    pub release_alpha: f64,
    /// Margin of the level-based silence detector reported in unguided traces.
    pub silence_margin_db: f64,
}

impl Default for MdrpConfig {
    fn default() -> Self {
        Self {
            bands: DEFAULT_BANDS,
            speech_curve: std::array::from_fn(|_| DrcCurve::default_speech()),
            silence_curve: std::array::from_fn(|_| DrcCurve::flat(0.0)),
            attack_alpha: 0.5,
            release_alpha: 0.9,
            silence_margin_db: 6.0,
        }
    }
}

impl MdrpConfig {
    pub fn validate(&self) -> Result<(), Error> {
        let mut next = 1;
        for &(lo, hi) in &self.bands {
            if lo != next || hi < lo {
                return Err(Error::Config(
                    "MDRP bands must partition bins 1..256".into(),
                ));
            }
            next = hi + 1;
        }
        if next != NUM_BINS {
            return Err(Error::Config(
                "MDRP bands must partition bins 1..256".into(),
            ));
        }
        let unit = |a: f64| (0.0..1.0).contains(&a);
        if !unit(self.attack_alpha) || !unit(self.release_alpha) {
            return Err(Error::Config("MDRP smoothing must lie in [0, 1)".into()));
        }
        Ok(())
    }

    fn curve(&self, which: MdrpCurve, band: usize) -> &DrcCurve {
        match which {
            MdrpCurve::SpeechCurve => &self.speech_curve[band],
            MdrpCurve::SilenceCurve => &self.silence_curve[band],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandTrace {
    pub level_db: f64,
    pub target_gain_db: f64,
    pub applied_gain_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdrpHopTrace {
    pub hop: usize,
    pub frame: usize,
    pub curve: MdrpCurve,
    /// Guided: silence curve in use. Unguided: hop level within the silence
    /// margin of its running minimum.
    pub silence: bool,
    pub bands: [BandTrace; MDRP_BANDS],
}

/// Running minimum of hop levels over roughly one second.
struct LevelFloor {
    history: std::collections::VecDeque<f64>,
}

impl LevelFloor {
    const LEN: usize = 100;

    fn push(&mut self, level: f64) -> f64 {
        if self.history.len() == Self::LEN {
            self.history.pop_front();
        }
        self.history.push_back(level);
        self.history.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub struct Mdrp {
    cfg: MdrpConfig,
    gains_db: [f64; MDRP_BANDS],
}

impl Mdrp {
    pub fn new(cfg: MdrpConfig) -> Result<Self, Error> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            gains_db: [0.0; MDRP_BANDS],
        })
    }

    pub fn process(
        &mut self,
        pcm: &[f64],
        guidance: Guidance<'_>,
    ) -> Result<(Vec<f64>, Vec<MdrpHopTrace>), Error> {
        let mut frames = spectral::analyze(pcm);
        let directives: Option<&[EnhancementDirective]> = guidance.directives(frames.len())?;
        let mut floor = LevelFloor {
            history: Default::default(),
        };
        let mut trace = Vec::with_capacity(frames.len());
        let mut fade: Option<(MdrpCurve, u32, u32)> = None;
        let mut last_frame = None;

        for (h, frame) in frames.iter_mut().enumerate() {
            let (frame_idx, curve) = match directives {
                Some(d) => {
                    let i = frame_of_hop(h, d.len());
                    let dir = &d[i];
                    if last_frame != Some(i) && i > 0 && dir.crossfade_hops > 0 {
                        let from = d[i - 1].mdrp_curve;
                        fade = (from != dir.mdrp_curve).then_some((from, 0, dir.crossfade_hops));
                    }
                    last_frame = Some(i);
                    (i, dir.mdrp_curve)
                }
                None => (h / 2, MdrpCurve::SpeechCurve),
            };
            let blend = match &mut fade {
                Some((from, step, total)) => {
                    *step += 1;
                    let t = f64::from(*step) / f64::from(*total);
                    let out = Some((*from, t));
                    if *step >= *total {
                        fade = None;
                    }
                    out
                }
                None => None,
            };

            let norm = normalized_power(&frame.power);
            let mut gains = vec![1.0; NUM_BINS];
            let mut bands = [BandTrace {
                level_db: 0.0,
                target_gain_db: 0.0,
                applied_gain_db: 0.0,
            }; MDRP_BANDS];
            for (b, &(lo, hi)) in self.cfg.bands.iter().enumerate() {
                let mean = norm[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64;
                let level_db = 10.0 * (mean + LOG_EPS).log10();
                let mut target = self.cfg.curve(curve, b).gain_db(level_db);
                if let Some((from, t)) = blend {
                    let old = self.cfg.curve(from, b).gain_db(level_db);
                    target = (1.0 - t) * old + t * target;
                }
                let g = self.gains_db[b];
                let alpha = if target < g {
                    self.cfg.attack_alpha
                } else {
                    self.cfg.release_alpha
                };
                let g = alpha * g + (1.0 - alpha) * target;
                self.gains_db[b] = g;
                let lin = 10f64.powf(g / 20.0);
                gains[lo..=hi].iter_mut().for_each(|x| *x = lin);
                bands[b] = BandTrace {
                    level_db,
                    target_gain_db: target,
                    applied_gain_db: g,
                };
            }
            frame.apply_gains(&gains);

            let level = frame_level_db(&norm);
            let min = floor.push(level);
            let silence = match directives {
                Some(_) => curve == MdrpCurve::SilenceCurve,
                None => level < min + self.cfg.silence_margin_db,
            };
            trace.push(MdrpHopTrace {
                hop: h,
                frame: frame_idx,
                curve,
                silence,
                bands,
            });
        }

        let mut out = spectral::synthesize(&frames);
        out.truncate(pcm.len());
        Ok((out, trace))
    }
}

fn frame_level_db(norm: &[f64]) -> f64 {
    let mean = norm[1..].iter().sum::<f64>() / (norm.len() - 1) as f64;
    10.0 * (mean + LOG_EPS).log10()
}

pub fn process(
    pcm: &[f64],
    guidance: Guidance<'_>,
    cfg: &MdrpConfig,
) -> Result<(Vec<f64>, Vec<MdrpHopTrace>), Error> {
    Mdrp::new(cfg.clone())?.process(pcm, guidance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_examples() {
        let c = DrcCurve::default_speech();
        assert_eq!(curve_gain(-20.0, &c), 0.0);
        assert!((curve_gain(-35.0, &c) - 4.5).abs() < 1e-12);
        assert_eq!(curve_gain(-120.0, &c), 9.0);
        assert_eq!(curve_gain(6.0, &c), -10.0);
        assert!((curve_gain(-10.0, &c) + 5.0).abs() < 1e-12);
        let s = DrcCurve::flat(0.0);
        for l in [-200.0, -35.0, 0.0, 10.0] {
            assert_eq!(curve_gain(l, &s), 0.0);
        }
    }

    #[test]
    fn curve_parse() {
        let c: DrcCurve = "(-80,9),(-50,9),(-20,0),(0,-10)".parse().unwrap();
        assert_eq!(c, DrcCurve::default_speech());
        assert_eq!(c.to_string().parse::<DrcCurve>().unwrap(), c);
        for bad in [
            "",
            "(1,2",
            "(1,2),",
            "(a,1)",
            "(0,0)(1,1)",
            "(1,0),(0,0)",
            "(0,0),(0,1)",
        ] {
            assert!(bad.parse::<DrcCurve>().is_err(), "{bad}");
        }
    }

    #[test]
    fn default_bands_validate() {
        assert!(MdrpConfig::default().validate().is_ok());
        let mut cfg = MdrpConfig::default();
        cfg.bands[1] = (34, 128);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn silence_in_silence_out() {
        let (out, trace) =
            process(&vec![0.0; 3200], Guidance::Unguided, &MdrpConfig::default()).unwrap();
        assert!(out.iter().all(|&s| s == 0.0));
        assert_eq!(trace.len(), 20);
    }

    #[test]
    fn smoothing_step_is_bounded() {
        // Loud tone then silence: gain steps never exceed the one-pole bound.
        let mut pcm: Vec<f64> = (0..8000)
            .map(|n| 0.9 * (2.0 * std::f64::consts::PI * 500.0 * n as f64 / 16000.0).sin())
            .collect();
        pcm.extend(std::iter::repeat_n(0.0, 8000));
        let cfg = MdrpConfig::default();
        let (_, trace) = process(&pcm, Guidance::Unguided, &cfg).unwrap();
        let mut prev = [0.0; MDRP_BANDS];
        for t in &trace {
            for (b, bt) in t.bands.iter().enumerate() {
                let step = (bt.applied_gain_db - prev[b]).abs();
                let bound = (1.0 - cfg.attack_alpha.min(cfg.release_alpha))
                    * (bt.target_gain_db - prev[b]).abs();
                assert!(step <= bound + 1e-9);
                prev[b] = bt.applied_gain_db;
            }
        }
    }
}
