//! Single-channel noise reduction: minimum-statistics noise tracking and
//! power spectral subtraction.
//!
//! Unguided, the processor always uses its own noise estimate with the
//! aggressive policy. Guided, it follows one [`EnhancementDirective`] per
//! codec frame: during SID/NO_DATA frames the decoder's comfort-noise
//! envelope replaces the internal estimate, and music frames get the soft
//! policy (or bypass).

use crate::controller::{EnhancementDirective, NoiseSource, NrPolicy};
use crate::spectral::{self, window_energy, HOP, LOG_EPS, NUM_BINS};
use crate::{Error, Guidance};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyParams {
    /// Over-subtraction factor.
    pub beta: f64,
    pub gain_floor_db: f64,
}

impl PolicyParams {
    pub fn gain_floor(&self) -> f64 {
        10f64.powf(self.gain_floor_db / 20.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NrConfig {
    /// Recursive smoothing of the periodogram fed to the minimum tracker.
    pub alpha_smooth: f64,
    pub bias: f64,
    pub subwindows: usize,
    pub subwindow_len: usize,
    /// Recursive smoothing of the noisy power used in the gain rule.
    pub alpha_gain: f64,
    pub aggressive: PolicyParams,
    pub soft: PolicyParams,
    /// Margin of the energy-based silence detector reported in the trace.
    pub silence_margin_db: f64,
}

impl Default for NrConfig {
    fn default() -> Self {
        Self {
            alpha_smooth: 0.85,
            bias: 1.5,
            subwindows: 10,
            subwindow_len: 10,
            alpha_gain: 0.85,
            aggressive: PolicyParams {
                beta: 1.5,
                gain_floor_db: -18.0,
            },
            soft: PolicyParams {
                beta: 0.5,
                gain_floor_db: -6.0,
            },
            silence_margin_db: 6.0,
        }
    }
}

impl NrConfig {
    pub fn validate(&self) -> Result<(), Error> {
        let ok = self.alpha_smooth > 0.0
            && self.alpha_smooth < 1.0
            && (0.0..1.0).contains(&self.alpha_gain)
            && self.bias >= 1.0
            && self.subwindows > 0
            && self.subwindow_len > 0
            && self.aggressive.gain_floor_db < 0.0
            && self.soft.gain_floor_db < 0.0
            && self.aggressive.beta >= 0.0
            && self.soft.beta >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid noise-reduction settings {self:?}"
            )))
        }
    }

    pub fn params(&self, policy: NrPolicy) -> Option<PolicyParams> {
        match policy {
            NrPolicy::Aggressive => Some(self.aggressive),
            NrPolicy::Soft => Some(self.soft),
            NrPolicy::Bypass => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Internal,
    DecoderGuided,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Internal => "internal",
            Provenance::DecoderGuided => "decoder",
        }
    }
}

/// Minimum-statistics noise PSD tracker, in periodogram units.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseEstimate {
    pub psd: Vec<f64>,
    pub provenance: Provenance,
    pub smoothed_periodogram: Vec<f64>,
    /// Per-bin minima of the most recent sub-windows; `current` is the one
    /// still being filled.
    pub min_tracker: Vec<Vec<f64>>,
    current: usize,
    filled: usize,
    hops_in_current: usize,
    started: bool,
}

impl NoiseEstimate {
    pub fn new(cfg: &NrConfig) -> Self {
        Self {
            psd: vec![0.0; NUM_BINS],
            provenance: Provenance::Internal,
            smoothed_periodogram: vec![0.0; NUM_BINS],
            min_tracker: vec![vec![f64::INFINITY; NUM_BINS]; cfg.subwindows],
            current: 0,
            filled: 0,
            hops_in_current: 0,
            started: false,
        }
    }

    pub fn update(&mut self, power: &[f64], cfg: &NrConfig) {
        let alpha = cfg.alpha_smooth;
        if self.started {
            for (s, p) in self.smoothed_periodogram.iter_mut().zip(power) {
                *s = alpha * *s + (1.0 - alpha) * p;
            }
        } else {
            self.smoothed_periodogram.copy_from_slice(power);
            self.started = true;
        }

        if self.hops_in_current == 0 {
            self.min_tracker[self.current].copy_from_slice(&self.smoothed_periodogram);
            self.filled = (self.filled + 1).min(cfg.subwindows);
        } else {
            for (m, s) in self.min_tracker[self.current]
                .iter_mut()
                .zip(&self.smoothed_periodogram)
            {
                *m = m.min(*s);
            }
        }
        self.hops_in_current += 1;

        self.refresh_psd(cfg);
        self.provenance = Provenance::Internal;

        if self.hops_in_current == cfg.subwindow_len {
            // The oldest sub-window is overwritten when the next hop starts.
            self.current = (self.current + 1) % cfg.subwindows;
            self.hops_in_current = 0;
        }
    }

    fn refresh_psd(&mut self, cfg: &NrConfig) {
        for (k, out) in self.psd.iter_mut().enumerate() {
            let min = self
                .min_tracker
                .iter()
                .take(self.filled.max(1))
                .map(|m| m[k])
                .fold(f64::INFINITY, f64::min);
            *out = if min.is_finite() { cfg.bias * min } else { 0.0 };
        }
    }

    /// Replaces the tracker state with an externally supplied noise PSD.
    pub fn reseed(&mut self, psd: &[f64], cfg: &NrConfig) {
        self.smoothed_periodogram.copy_from_slice(psd);
        for m in &mut self.min_tracker {
            for (dst, p) in m.iter_mut().zip(psd) {
                *dst = p / cfg.bias;
            }
        }
        self.filled = cfg.subwindows;
        self.hops_in_current = 0;
        self.started = true;
        self.psd.copy_from_slice(psd);
        self.provenance = Provenance::DecoderGuided;
    }
}

/// One minimum-statistics step.
pub fn update_noise(power: &[f64], est: &mut NoiseEstimate, cfg: &NrConfig) {
    est.update(power, cfg);
}

/// Spectral-subtraction gains, each in `[floor, 1]`.
pub fn compute_gain(
    power: &[f64],
    noise_psd: &[f64],
    policy: NrPolicy,
    cfg: &NrConfig,
) -> Vec<f64> {
    let Some(params) = cfg.params(policy) else {
        return vec![1.0; power.len()];
    };
    let floor = params.gain_floor();
    power
        .iter()
        .zip(noise_psd)
        .map(|(&p, &n)| {
            let ratio = params.beta * n / p.max(LOG_EPS);
            (1.0 - ratio).max(0.0).sqrt().max(floor)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NrHopTrace {
    pub hop: usize,
    /// Codec frame whose directive drove this hop.
    pub frame: usize,
    pub provenance: Provenance,
    pub policy: NrPolicy,
    pub mean_gain_db: f64,
    /// Mean noise PSD used for the gains, dBFS.
    pub mean_noise_db: f64,
    /// Output power of the hop's 160 new samples, dBFS.
    pub residual_db: f64,
    /// Guided: decoder-guided noise in use. Unguided: hop energy within the
    /// silence margin of the internal noise estimate.
    pub silence: bool,
    pub gains: Vec<f64>,
    /// What the aggressive policy would have applied on this hop.
    pub aggressive_gains: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct GainRule {
    policy: NrPolicy,
    source: NoiseSource,
}

impl GainRule {
    fn from_directive(d: &EnhancementDirective) -> Self {
        Self {
            policy: d.nr_policy,
            source: d.noise_source,
        }
    }
}

struct Crossfade {
    from: GainRule,
    step: u32,
    total: u32,
}

/// Maps hop `h` to the most recent frame whose samples it has seen.
///
/// Hop `2i + 1` reaches into frame `i + 1`, so by the time it can be
/// processed that frame's state is already decoded.
pub fn frame_of_hop(hop: usize, frames: usize) -> usize {
    (hop.div_ceil(2)).min(frames.saturating_sub(1))
}

/// Stateful noise reducer for one stream.
pub struct NoiseReducer {
    cfg: NrConfig,
    estimate: NoiseEstimate,
    gain_power: Option<Vec<f64>>,
}

impl NoiseReducer {
    pub fn new(cfg: NrConfig) -> Result<Self, Error> {
        cfg.validate()?;
        Ok(Self {
            estimate: NoiseEstimate::new(&cfg),
            cfg,
            gain_power: None,
        })
    }

    pub fn estimate(&self) -> &NoiseEstimate {
        &self.estimate
    }

    fn smooth_power(&mut self, power: &[f64]) -> Vec<f64> {
        let a = self.cfg.alpha_gain;
        match &mut self.gain_power {
            Some(s) => {
                for (s, p) in s.iter_mut().zip(power) {
                    *s = a * *s + (1.0 - a) * p;
                }
                s.clone()
            }
            None => {
                self.gain_power = Some(power.to_vec());
                power.to_vec()
            }
        }
    }

    fn gains_for(&self, rule: GainRule, power: &[f64], guided_psd: Option<&[f64]>) -> Vec<f64> {
        let noise = match (rule.source, guided_psd) {
            (NoiseSource::DecoderGuided, Some(psd)) => psd,
            _ => &self.estimate.psd,
        };
        compute_gain(power, noise, rule.policy, &self.cfg)
    }

    pub fn process(
        &mut self,
        pcm: &[f64],
        guidance: Guidance<'_>,
    ) -> Result<(Vec<f64>, Vec<NrHopTrace>), Error> {
        let mut frames = spectral::analyze(pcm);
        let directives = guidance.directives(frames.len())?;
        let scale = window_energy();
        let silence_factor = 10f64.powf(self.cfg.silence_margin_db / 10.0);

        let mut trace = Vec::with_capacity(frames.len());
        let mut fade: Option<Crossfade> = None;
        let mut last_frame = None;
        let mut prev_source = None;

        for (h, frame) in frames.iter_mut().enumerate() {
            let directive = directives.map(|d| (frame_of_hop(h, d.len()), d));
            let (frame_idx, rule, guided_psd) = match directive {
                Some((i, d)) => {
                    let dir = &d[i];
                    if last_frame != Some(i) && dir.crossfade_hops > 0 && i > 0 {
                        fade = Some(Crossfade {
                            from: GainRule::from_directive(&d[i - 1]),
                            step: 0,
                            total: dir.crossfade_hops,
                        });
                    }
                    last_frame = Some(i);
                    let psd: Option<Vec<f64>> = dir
                        .guided_noise_psd
                        .as_ref()
                        .map(|p| p.iter().map(|v| v * scale).collect());
                    (
                        i,
                        GainRule::from_directive(dir),
                        psd.map(|p| (p, dir.freeze_nr_estimation)),
                    )
                }
                None => (
                    h / 2,
                    GainRule {
                        policy: NrPolicy::Aggressive,
                        source: NoiseSource::Internal,
                    },
                    None,
                ),
            };

            let guided = guided_psd
                .as_ref()
                .filter(|_| rule.source == NoiseSource::DecoderGuided);
            match guided {
                Some((psd, true)) => self.estimate.reseed(psd, &self.cfg),
                _ => self.estimate.update(&frame.power, &self.cfg),
            }
            let internal_level: f64 = self.estimate.psd.iter().sum();
            let hop_level: f64 = frame.power.iter().sum();

            let entering_guided = rule.source == NoiseSource::DecoderGuided
                && prev_source == Some(NoiseSource::Internal);
            if entering_guided {
                // The decoder marks the end of active content; speech power
                // still held in the smoother no longer describes the input.
                self.gain_power = None;
            }
            prev_source = Some(rule.source);
            let power = self.smooth_power(&frame.power);
            let psd_ref = guided_psd.as_ref().map(|(p, _)| p.as_slice());
            let mut gains = self.gains_for(rule, &power, psd_ref);
            if let Some(f) = &mut fade {
                f.step += 1;
                let t = f64::from(f.step) / f64::from(f.total);
                let from = self.gains_for(f.from, &power, psd_ref);
                for (g, g0) in gains.iter_mut().zip(&from) {
                    *g = (1.0 - t) * g0 + t * *g;
                }
                if f.step >= f.total {
                    fade = None;
                }
            }
            frame.apply_gains(&gains);

            let provenance = match rule.source {
                NoiseSource::DecoderGuided if psd_ref.is_some() => Provenance::DecoderGuided,
                _ => Provenance::Internal,
            };
            let noise_used: &[f64] = match provenance {
                Provenance::DecoderGuided => psd_ref.unwrap(),
                Provenance::Internal => &self.estimate.psd,
            };
            let mean_noise = noise_used.iter().sum::<f64>() / (NUM_BINS as f64 * scale);
            let aggressive_gains =
                compute_gain(&power, noise_used, NrPolicy::Aggressive, &self.cfg);
            let mean_gain = gains.iter().sum::<f64>() / NUM_BINS as f64;
            let silence = if directives.is_some() {
                provenance == Provenance::DecoderGuided
            } else {
                hop_level < internal_level * silence_factor
            };
            trace.push(NrHopTrace {
                hop: h,
                frame: frame_idx,
                provenance,
                policy: rule.policy,
                mean_gain_db: 20.0 * (mean_gain + LOG_EPS).log10(),
                mean_noise_db: 10.0 * (mean_noise + LOG_EPS).log10(),
                residual_db: 0.0,
                silence,
                gains,
                aggressive_gains,
            });
        }

        let mut out = spectral::synthesize(&frames);
        out.truncate(pcm.len());
        for t in &mut trace {
            let start = (t.hop * HOP).min(out.len());
            let end = (start + HOP).min(out.len());
            t.residual_db = hop_power_db(&out[start..end]);
        }
        Ok((out, trace))
    }
}

pub(crate) fn hop_power_db(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 10.0 * LOG_EPS.log10();
    }
    let ms = samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64;
    10.0 * (ms + LOG_EPS).log10()
}

/// Runs a fresh [`NoiseReducer`] over `pcm`.
pub fn process(
    pcm: &[f64],
    guidance: Guidance<'_>,
    cfg: &NrConfig,
) -> Result<(Vec<f64>, Vec<NrHopTrace>), Error> {
    NoiseReducer::new(*cfg)?.process(pcm, guidance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn constant_power_converges_to_bias() {
        let cfg = NrConfig::default();
        let mut est = NoiseEstimate::new(&cfg);
        for _ in 0..120 {
            update_noise(&vec![1.0; NUM_BINS], &mut est, &cfg);
        }
        assert!(est.psd.iter().all(|&p| (p - 1.5).abs() < 1e-9));
    }

    #[test]
    fn zero_input_zero_estimate() {
        let cfg = NrConfig::default();
        let mut est = NoiseEstimate::new(&cfg);
        for _ in 0..30 {
            update_noise(&vec![0.0; NUM_BINS], &mut est, &cfg);
        }
        assert!(est.psd.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn minimum_follows_drop_and_forgets_after_window() {
        let cfg = NrConfig::default();
        let mut est = NoiseEstimate::new(&cfg);
        for _ in 0..50 {
            est.update(&vec![4.0; NUM_BINS], &cfg);
        }
        for _ in 0..50 {
            est.update(&vec![1.0; NUM_BINS], &cfg);
        }
        assert!((est.psd[10] - 1.5).abs() < 1e-2);
        // A rise is only tracked once every sub-window holding the low
        // values has been evicted.
        for _ in 0..95 {
            est.update(&vec![4.0; NUM_BINS], &cfg);
        }
        assert!(est.psd[10] < 4.0);
        for _ in 0..105 {
            est.update(&vec![4.0; NUM_BINS], &cfg);
        }
        assert!((est.psd[10] - 6.0).abs() < 1e-6);
    }

    #[test]
    fn gain_examples() {
        let cfg = NrConfig::default();
        let g = compute_gain(&[10.0], &[1.0], NrPolicy::Aggressive, &cfg);
        assert!((g[0] - 0.85f64.sqrt()).abs() < 1e-12);
        assert!((g[0] - 0.922).abs() < 1e-3);

        let floor = 10f64.powf(-18.0 / 20.0);
        let g = compute_gain(&[1.0, 1.5], &[1.0, 1.0], NrPolicy::Aggressive, &cfg);
        assert!(g.iter().all(|&x| (x - floor).abs() < 1e-12));

        let g = compute_gain(&[0.0, 3.0, 1e9], &[5.0, 1.0, 0.0], NrPolicy::Bypass, &cfg);
        assert_eq!(g, vec![1.0; 3]);
    }

    #[test]
    fn soft_gains_never_below_aggressive() {
        let cfg = NrConfig::default();
        let power: Vec<f64> = (0..NUM_BINS).map(|k| 0.01 * (k as f64 + 1.0)).collect();
        let noise: Vec<f64> = (0..NUM_BINS).map(|k| 0.5 + (k % 7) as f64).collect();
        let soft = compute_gain(&power, &noise, NrPolicy::Soft, &cfg);
        let aggr = compute_gain(&power, &noise, NrPolicy::Aggressive, &cfg);
        assert!(soft.iter().zip(&aggr).all(|(s, a)| s >= a));
    }

    #[test]
    fn silence_in_silence_out() {
        let pcm = vec![0.0; 3200];
        let (out, trace) = process(&pcm, Guidance::Unguided, &NrConfig::default()).unwrap();
        assert!(out.iter().all(|&s| s == 0.0));
        assert_eq!(trace.len(), 20);
    }

    #[test]
    fn stationary_noise_estimate_tracks_true_psd() {
        let sigma = 0.03;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let normal = Normal::new(0.0, sigma).unwrap();
        let x: Vec<f64> = (0..200 * HOP).map(|_| normal.sample(&mut rng)).collect();
        let cfg = NrConfig::default();
        let mut est = NoiseEstimate::new(&cfg);
        let frames = spectral::analyze(&x);
        for f in &frames[..frames.len() - 1] {
            est.update(&f.power, &cfg);
        }
        let truth = sigma * sigma * window_energy();
        let mean = est.psd[1..NUM_BINS - 1].iter().sum::<f64>() / (NUM_BINS - 2) as f64;
        let err_db = 10.0 * (mean / truth).log10();
        assert!(err_db.abs() <= 2.0, "{err_db} dB");
    }

    #[test]
    fn rejects_invalid_config() {
        let cfg = NrConfig {
            alpha_smooth: 1.0,
            ..Default::default()
        };
        assert!(NoiseReducer::new(cfg).is_err());
        let cfg = NrConfig {
            bias: 0.5,
            ..Default::default()
        };
        assert!(NoiseReducer::new(cfg).is_err());
    }
}
