//! Deterministic synthetic test vectors and a bank of noise beds.
//!
//! Speech is modelled as pitch-pulse trains through an all-pole (AR(16))
//! formant filter, grouped into syllables and bursts separated by pauses.
//! Music is sustained multi-sine chords. Every generator returns ground
//! truth labels at 20 ms resolution.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::framestream::{FRAME_LEN, SAMPLE_RATE};
use crate::metrics::{SegmentLabel, SegmentLabels};
use crate::Error;

const FS: f64 = SAMPLE_RATE as f64;

/// Nominal RMS of generated speech and music (about -26 dBFS).
pub const NOMINAL_RMS: f64 = 0.05;

/// Envelope level below which a frame no longer counts as active.
const ACTIVE_THRESHOLD_DB: f64 = -30.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SignalVector {
    pub samples: Vec<f64>,
    pub labels: SegmentLabels,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    SpeechLike,
    MusicLike,
    Mixed,
    Silence,
}

impl SignalKind {
    pub const ALL: [SignalKind; 4] = [
        SignalKind::SpeechLike,
        SignalKind::MusicLike,
        SignalKind::Mixed,
        SignalKind::Silence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SignalKind::SpeechLike => "speech_like",
            SignalKind::MusicLike => "music_like",
            SignalKind::Mixed => "mixed",
            SignalKind::Silence => "silence",
        }
    }
}

impl FromStr for SignalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        SignalKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| Error::InvalidKind(s.to_string()))
    }
}

pub fn generate(kind: SignalKind, duration_s: f64, seed: u64) -> Result<SignalVector, Error> {
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::Config(format!(
            "duration must be positive, got {duration_s}"
        )));
    }
    Ok(match kind {
        SignalKind::SpeechLike => speech_like(duration_s, seed),
        SignalKind::MusicLike => music_like(duration_s, seed),
        SignalKind::Mixed => mixed(duration_s, seed),
        SignalKind::Silence => silence(duration_s),
    })
}

fn sample_count(duration_s: f64) -> usize {
    let frames = (duration_s * FS / FRAME_LEN as f64).round().max(1.0) as usize;
    frames * FRAME_LEN
}

/// Second-order IIR section, direct form I.
#[derive(Debug, Clone, Copy)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
    x: [f64; 2],
    y: [f64; 2],
}

impl Biquad {
    fn highpass(cutoff_hz: f64, q: f64) -> Self {
        let w0 = 2.0 * PI * cutoff_hz / FS;
        let alpha = w0.sin() / (2.0 * q);
        let cos = w0.cos();
        let a0 = 1.0 + alpha;
        Self {
            b: [
                (1.0 + cos) / 2.0 / a0,
                -(1.0 + cos) / a0,
                (1.0 + cos) / 2.0 / a0,
            ],
            a: [-2.0 * cos / a0, (1.0 - alpha) / a0],
            x: [0.0; 2],
            y: [0.0; 2],
        }
    }

    fn bandpass(center_hz: f64, q: f64) -> Self {
        let w0 = 2.0 * PI * center_hz / FS;
        let alpha = w0.sin() / (2.0 * q);
        let a0 = 1.0 + alpha;
        Self {
            b: [alpha / a0, 0.0, -alpha / a0],
            a: [-2.0 * w0.cos() / a0, (1.0 - alpha) / a0],
            x: [0.0; 2],
            y: [0.0; 2],
        }
    }

    /// Two-pole resonator at `freq_hz` with bandwidth `bw_hz`.
    fn resonator(freq_hz: f64, bw_hz: f64) -> Self {
        let r = (-PI * bw_hz / FS).exp();
        let theta = 2.0 * PI * freq_hz / FS;
        Self {
            b: [1.0, 0.0, 0.0],
            a: [-2.0 * r * theta.cos(), r * r],
            x: [0.0; 2],
            y: [0.0; 2],
        }
    }

    fn tick(&mut self, x: f64) -> f64 {
        let y = self.b[0] * x + self.b[1] * self.x[0] + self.b[2] * self.x[1]
            - self.a[0] * self.y[0]
            - self.a[1] * self.y[1];
        self.x = [x, self.x[0]];
        self.y = [y, self.y[0]];
        y
    }
}

fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Labels each frame `label` where `envelope` exceeds the activity
/// threshold, `NoiseOnly` elsewhere.
fn label_frames(envelope: &[f64], active: &[SegmentLabel]) -> SegmentLabels {
    let threshold = 10f64.powf(ACTIVE_THRESHOLD_DB / 20.0);
    let frames = envelope.len() / FRAME_LEN;
    let labels = (0..frames)
        .map(|i| {
            let range = i * FRAME_LEN..(i + 1) * FRAME_LEN;
            envelope[range.clone()]
                .iter()
                .zip(&active[range])
                .filter(|(e, _)| **e > threshold)
                .map(|(_, l)| *l)
                .next()
                .unwrap_or(SegmentLabel::NoiseOnly)
        })
        .collect();
    SegmentLabels::new(labels)
}

/// Writes one spoken burst starting at `start`; returns its length.
fn speech_burst(
    out: &mut [f64],
    envelope: &mut [f64],
    start: usize,
    len: usize,
    rng: &mut ChaCha8Rng,
) -> usize {
    const VOWELS: [[f64; 4]; 6] = [
        [730.0, 1090.0, 2440.0, 3400.0],
        [270.0, 2290.0, 3010.0, 3700.0],
        [530.0, 1840.0, 2480.0, 3500.0],
        [570.0, 840.0, 2410.0, 3300.0],
        [440.0, 1020.0, 2240.0, 3200.0],
        [300.0, 870.0, 2240.0, 3400.0],
    ];
    const UPPER: [f64; 4] = [4300.0, 5200.0, 6100.0, 7000.0];
    let attack = (0.015 * FS) as usize;
    let dip = (0.04 * FS) as usize;
    // Final decay of 0.5 dB per millisecond.
    let tail = (0.08 * FS) as usize;

    let end = (start + len).min(out.len());
    let mut pos = start;
    let base_f0 = rng.random_range(100.0..200.0);
    while pos < end {
        let syl_len = ((rng.random_range(0.12..0.28) * FS) as usize).min(end - pos);
        let last = pos + syl_len >= end || end - (pos + syl_len) < (0.1 * FS) as usize;
        let syl_len = if last { end - pos } else { syl_len };
        let total = if last { syl_len + tail } else { syl_len };

        let vowel = VOWELS[rng.random_range(0..VOWELS.len())];
        let mut filters: Vec<Biquad> = vowel
            .iter()
            .map(|&f| Biquad::resonator(f * rng.random_range(0.95..1.05), 80.0 + f * 0.05))
            .chain(UPPER.iter().map(|&f| Biquad::resonator(f, 600.0)))
            .collect();
        let f0_start = base_f0 * rng.random_range(0.9..1.15);
        let f0_end = f0_start * rng.random_range(0.85..1.1);

        let mut seg = vec![0.0; total];
        let mut phase = 1.0;
        for (n, s) in seg.iter_mut().enumerate() {
            let f0 = f0_start + (f0_end - f0_start) * n as f64 / total as f64;
            phase += f0 / FS;
            let mut x = 0.05 * gaussian(rng);
            if phase >= 1.0 {
                phase -= 1.0;
                x += 1.0;
            }
            *s = filters.iter_mut().fold(x, |acc, f| f.tick(acc));
        }
        let scale = NOMINAL_RMS / rms(&seg).max(1e-12);

        for (n, s) in seg.iter().enumerate() {
            let idx = pos + n;
            if idx >= out.len() {
                break;
            }
            let env = if n < attack {
                0.5 - 0.5 * (PI * n as f64 / attack as f64).cos()
            } else if n < syl_len {
                let to_end = syl_len - n;
                if !last && to_end < dip {
                    0.35 + 0.65 * (to_end as f64 / dip as f64)
                } else {
                    1.0
                }
            } else {
                let db = -0.5 * ((n - syl_len) as f64 / (0.001 * FS));
                10f64.powf(db / 20.0)
            };
            out[idx] += env * scale * s;
            envelope[idx] = envelope[idx].max(env);
        }
        pos += syl_len;
    }
    (end - start) + if end < out.len() { tail } else { 0 }
}

/// (frequency in Hz, amplitude) pairs.
type Partials = Vec<(f64, f64)>;

fn chord_segment(
    out: &mut [f64],
    envelope: &mut [f64],
    start: usize,
    len: usize,
    rng: &mut ChaCha8Rng,
) {
    // Open voicings: root, fifth an octave up, third two octaves up.
    const VOICINGS: [[i32; 3]; 4] = [[0, 19, 28], [0, 19, 27], [0, 17, 28], [0, 16, 31]];
    let fade = (0.03 * FS) as usize;
    let xfade = (0.02 * FS) as usize;
    let end = (start + len).min(out.len());

    let mut pos = start;
    let mut chords: Vec<(usize, usize, Partials)> = Vec::new();
    while pos < end {
        let dur = ((rng.random_range(0.6..1.0) * FS) as usize).min(end - pos);
        let root = rng.random_range(53..62);
        let voicing = VOICINGS[rng.random_range(0..VOICINGS.len())];
        let partials =
            chord_partials(&voicing.map(|i| 440.0 * 2f64.powf(f64::from(root + i - 69) / 12.0)));
        chords.push((pos, dur, partials));
        pos += dur;
    }

    let mut seg = vec![0.0; end - start];
    for (i, (cstart, dur, partials)) in chords.iter().enumerate() {
        let phases: Vec<f64> = partials
            .iter()
            .map(|_| rng.random_range(0.0..2.0 * PI))
            .collect();
        let from = cstart.saturating_sub(if i > 0 { xfade } else { 0 });
        let to = (cstart + dur + xfade).min(end);
        for idx in from..to {
            let t = idx as f64 / FS;
            let w = if idx < *cstart {
                (idx + xfade - cstart) as f64 / xfade as f64
            } else if idx >= cstart + dur {
                1.0 - (idx - cstart - dur) as f64 / xfade as f64
            } else {
                1.0
            };
            let v: f64 = partials
                .iter()
                .zip(&phases)
                .map(|((f, a), p)| a * (2.0 * PI * f * t + p).sin())
                .sum();
            seg[idx - start] += w * v;
        }
    }
    let scale = NOMINAL_RMS / rms(&seg).max(1e-12);
    let n = seg.len();
    for (k, s) in seg.iter().enumerate() {
        let env = if k < fade {
            k as f64 / fade as f64
        } else if n - k <= fade {
            (n - k) as f64 / fade as f64
        } else {
            1.0
        };
        out[start + k] += env * scale * s;
        envelope[start + k] = envelope[start + k].max(env);
    }
}

/// Harmonics of the chord notes, dropping any partial that would beat
/// against a stronger one within the analysis window's resolution.
fn chord_partials(notes: &[f64]) -> Vec<(f64, f64)> {
    const MIN_SPACING_HZ: f64 = 120.0;
    let mut all: Vec<(f64, f64)> = notes
        .iter()
        .flat_map(|&f| (1..=4).map(move |h| (f * h as f64, 1.0 / h as f64)))
        .filter(|(f, _)| *f < 7000.0)
        .collect();
    all.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.total_cmp(&b.0)));
    let mut kept: Vec<(f64, f64)> = Vec::new();
    for (f, a) in all {
        if kept.iter().all(|(k, _)| (k - f).abs() > MIN_SPACING_HZ) {
            kept.push((f, a));
        }
    }
    kept
}

/// Speech bursts of 0.6-1.4 s separated by 0.7-1.5 s pauses, starting and
/// ending with a pause.
pub fn speech_like(duration_s: f64, seed: u64) -> SignalVector {
    let n = sample_count(duration_s);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0.0; n];
    let mut env = vec![0.0; n];
    let mut pos = (rng.random_range(0.5..0.8) * FS) as usize;
    while pos < n {
        let burst = (rng.random_range(0.6..1.4) * FS) as usize;
        let used = speech_burst(&mut out, &mut env, pos, burst, &mut rng);
        pos += used + (rng.random_range(0.7..1.5) * FS) as usize;
    }
    let kinds = vec![SegmentLabel::SpeechActive; n];
    SignalVector {
        labels: label_frames(&env, &kinds),
        samples: out,
    }
}

pub fn music_like(duration_s: f64, seed: u64) -> SignalVector {
    let n = sample_count(duration_s);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0.0; n];
    let mut env = vec![0.0; n];
    chord_segment(&mut out, &mut env, 0, n, &mut rng);
    // Music runs edge to edge; only fade-in and fade-out frames may fall
    // under the activity threshold.
    let kinds = vec![SegmentLabel::Music; n];
    SignalVector {
        labels: label_frames(&env, &kinds),
        samples: out,
    }
}

/// Alternating speech bursts and music passages with pauses in between:
/// pause, speech, pause, music, repeated.
pub fn mixed(duration_s: f64, seed: u64) -> SignalVector {
    let n = sample_count(duration_s);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0.0; n];
    let mut env = vec![0.0; n];
    let mut kinds = vec![SegmentLabel::NoiseOnly; n];
    let mut pos = (0.6 * FS) as usize;
    let mut music = false;
    while pos < n {
        let seg_start = pos;
        let used = if music {
            let len = ((1.8 * FS) as usize).min(n - pos);
            chord_segment(&mut out, &mut env, pos, len, &mut rng);
            len
        } else {
            speech_burst(&mut out, &mut env, pos, (1.2 * FS) as usize, &mut rng)
        };
        let label = if music {
            SegmentLabel::Music
        } else {
            SegmentLabel::SpeechActive
        };
        let seg_end = (seg_start + used).min(n);
        kinds[seg_start..seg_end].fill(label);
        pos = seg_end + (0.8 * FS) as usize;
        music = !music;
    }
    SignalVector {
        labels: label_frames(&env, &kinds),
        samples: out,
    }
}

pub fn silence(duration_s: f64) -> SignalVector {
    let n = sample_count(duration_s);
    SignalVector {
        samples: vec![0.0; n],
        labels: SegmentLabels::new(vec![SegmentLabel::NoiseOnly; n / FRAME_LEN]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    White,
    Pink,
    Car,
    Road,
    Train,
    Crossroad,
    Cafeteria,
    Wind,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 8] = [
        NoiseKind::White,
        NoiseKind::Pink,
        NoiseKind::Car,
        NoiseKind::Road,
        NoiseKind::Train,
        NoiseKind::Crossroad,
        NoiseKind::Cafeteria,
        NoiseKind::Wind,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::White => "white",
            NoiseKind::Pink => "pink",
            NoiseKind::Car => "car",
            NoiseKind::Road => "road",
            NoiseKind::Train => "train",
            NoiseKind::Crossroad => "crossroad",
            NoiseKind::Cafeteria => "cafeteria",
            NoiseKind::Wind => "wind",
        }
    }

    fn index(self) -> u64 {
        NoiseKind::ALL.iter().position(|&k| k == self).unwrap() as u64
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        NoiseKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| Error::InvalidKind(s.to_string()))
    }
}

/// Seed for the noise bed of `kind`, derived from a run seed.
pub fn noise_seed(seed: u64, kind: NoiseKind) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(kind.index() + 1)
}

struct PinkFilter {
    b: [f64; 7],
}

impl PinkFilter {
    fn tick(&mut self, white: f64) -> f64 {
        let b = &mut self.b;
        b[0] = 0.99886 * b[0] + white * 0.0555179;
        b[1] = 0.99332 * b[1] + white * 0.0750759;
        b[2] = 0.96900 * b[2] + white * 0.1538520;
        b[3] = 0.86650 * b[3] + white * 0.3104856;
        b[4] = 0.55000 * b[4] + white * 0.5329522;
        b[5] = -0.7616 * b[5] - white * 0.0168980;
        let out = b.iter().sum::<f64>() + white * 0.5362;
        b[6] = white * 0.115926;
        out
    }
}

fn pink(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut f = PinkFilter { b: [0.0; 7] };
    (0..n).map(|_| f.tick(gaussian(rng))).collect()
}

/// Telephone-band high-pass applied to every noise bed.
const NOISE_HIGHPASS_HZ: f64 = 100.0;

/// White noise through a first-order low-pass (6 dB per octave above
/// `cutoff`).
fn lowpassed(n: usize, cutoff: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let a = (-2.0 * PI * cutoff / FS).exp();
    let mut y = 0.0;
    (0..n)
        .map(|_| {
            y = a * y + (1.0 - a) * gaussian(rng);
            y
        })
        .collect()
}

fn highpassed(x: Vec<f64>) -> Vec<f64> {
    let mut hp = Biquad::highpass(NOISE_HIGHPASS_HZ, std::f64::consts::FRAC_1_SQRT_2);
    x.into_iter().map(|v| hp.tick(v)).collect()
}

fn normalize(mut x: Vec<f64>) -> Vec<f64> {
    let r = rms(&x).max(1e-12);
    x.iter_mut().for_each(|v| *v /= r);
    x
}

/// Smooth positive modulation built from a few slow sinusoids; the result
/// swings by roughly `depth_db` peak to trough.
fn slow_modulation(
    n: usize,
    freqs: std::ops::Range<f64>,
    components: usize,
    depth_db: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let parts: Vec<(f64, f64)> = (0..components)
        .map(|_| {
            (
                rng.random_range(freqs.clone()),
                rng.random_range(0.0..2.0 * PI),
            )
        })
        .collect();
    let half = depth_db / 2.0 / components as f64;
    (0..n)
        .map(|i| {
            let t = i as f64 / FS;
            let db: f64 = parts
                .iter()
                .map(|(f, p)| half * (2.0 * PI * f * t + p).sin())
                .sum();
            10f64.powf(db / 20.0)
        })
        .collect()
}

/// Unit-RMS noise of the given kind.
///
/// Modulation depths are kept to a few dB so that the beds stay below the
/// encoder's voice-activity margin.
pub fn noise(kind: NoiseKind, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = match kind {
        NoiseKind::White => (0..n).map(|_| gaussian(&mut rng)).collect(),
        NoiseKind::Pink => pink(n, &mut rng),
        NoiseKind::Car => lowpassed(n, 500.0, &mut rng),
        NoiseKind::Road => {
            let rumble = lowpassed(n, 500.0, &mut rng);
            let wander = slow_modulation(n, 0.1..0.4, 2, 2.0, &mut rng);
            rumble.iter().zip(&wander).map(|(r, w)| r * w).collect()
        }
        NoiseKind::Train => {
            let base = normalize(highpassed(pink(n, &mut rng)));
            let rumble = normalize(highpassed(lowpassed(n, 300.0, &mut rng)));
            // Rail joints: short amplitude bursts in a regular rhythm.
            let period = rng.random_range(0.5..0.7) * FS;
            let burst = 0.06 * FS;
            (0..n)
                .map(|i| {
                    let ph = (i as f64) % period;
                    let clack = if ph < burst {
                        1.0 + 0.25 * (PI * ph / burst).sin()
                    } else {
                        1.0
                    };
                    clack * (base[i] + 0.7 * rumble[i])
                })
                .collect()
        }
        NoiseKind::Crossroad => {
            let base = normalize(pink(n, &mut rng));
            let traffic = normalize(highpassed(lowpassed(n, 800.0, &mut rng)));
            let swell = slow_modulation(n, 0.08..0.3, 2, 3.0, &mut rng);
            (0..n)
                .map(|i| base[i] * 0.6 + traffic[i] * swell[i])
                .collect()
        }
        NoiseKind::Cafeteria => {
            // Babble from many independent talkers: band-limited noise
            // with syllable-rate amplitude modulation, plus dish clatter.
            let talkers = 12;
            let mut sum = vec![0.0; n];
            for _ in 0..talkers {
                let mut bp = Biquad::bandpass(rng.random_range(400.0..2000.0), 0.6);
                let rate = rng.random_range(3.0..5.0);
                let phase = rng.random_range(0.0..2.0 * PI);
                for (i, s) in sum.iter_mut().enumerate() {
                    let t = i as f64 / FS;
                    let am = 0.7 + 0.3 * (2.0 * PI * rate * t + phase).sin();
                    *s += am * bp.tick(gaussian(&mut rng));
                }
            }
            let sum = normalize(sum);
            let mut clatter = vec![0.0; n];
            let mut i = 0usize;
            while i < n {
                i += (rng.random_range(0.3..1.2) * FS) as usize;
                let len = (0.02 * FS) as usize;
                for k in 0..len.min(n.saturating_sub(i)) {
                    let decay = (-(k as f64) / (0.004 * FS)).exp();
                    clatter[i + k] = 1.5 * decay * gaussian(&mut rng);
                }
            }
            sum.iter().zip(&clatter).map(|(a, b)| a + b).collect()
        }
        NoiseKind::Wind => {
            let base = lowpassed(n, 300.0, &mut rng);
            let gusts = slow_modulation(n, 1.0..4.0, 3, 3.0, &mut rng);
            base.iter().zip(&gusts).map(|(b, g)| b * g).collect()
        }
    };
    normalize(highpassed(x))
}

/// Mean power of the active (speech or music) frames, or the nominal level
/// when there are none.
pub fn reference_power(vector: &SignalVector) -> f64 {
    let mut acc = 0.0;
    let mut count = 0usize;
    for (i, label) in vector.labels.iter().enumerate() {
        if *label != SegmentLabel::NoiseOnly {
            let frame =
                &vector.samples[i * FRAME_LEN..((i + 1) * FRAME_LEN).min(vector.samples.len())];
            acc += frame.iter().map(|x| x * x).sum::<f64>();
            count += frame.len();
        }
    }
    if count == 0 {
        NOMINAL_RMS * NOMINAL_RMS
    } else {
        acc / count as f64
    }
}

/// Adds a noise bed at `snr_db` below the active-signal power.
pub fn add_noise(vector: &SignalVector, kind: NoiseKind, snr_db: f64, seed: u64) -> Vec<f64> {
    let n = vector.samples.len();
    let bed = noise(kind, n, noise_seed(seed, kind));
    let gain = (reference_power(vector) / 10f64.powf(snr_db / 10.0)).sqrt();
    vector
        .samples
        .iter()
        .zip(&bed)
        .map(|(s, b)| s + gain * b)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn silence_labels() {
        let v = silence(2.0);
        assert_eq!(v.labels.len(), 100);
        assert!(v.labels.iter().all(|l| *l == SegmentLabel::NoiseOnly));
        assert!(v.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn mixed_has_all_classes() {
        let v = mixed(10.0, 1);
        for class in [
            SegmentLabel::SpeechActive,
            SegmentLabel::NoiseOnly,
            SegmentLabel::Music,
        ] {
            assert!(v.labels.iter().any(|l| *l == class), "{class:?}");
        }
        assert_eq!(v.samples.len(), v.labels.len() * FRAME_LEN);
    }

    #[test]
    fn deterministic() {
        assert_eq!(speech_like(3.0, 5), speech_like(3.0, 5));
        assert_ne!(speech_like(3.0, 5).samples, speech_like(3.0, 6).samples);
        assert_eq!(
            noise(NoiseKind::Cafeteria, 4000, 3),
            noise(NoiseKind::Cafeteria, 4000, 3)
        );
    }

    #[test]
    fn speech_level_and_bounds() {
        let v = speech_like(8.0, 2);
        let p = reference_power(&v);
        let db = 10.0 * p.log10();
        assert!((-32.0..-22.0).contains(&db), "{db}");
        assert!(v.samples.iter().all(|s| s.abs() < 1.0));
        assert!(v.labels.iter().any(|l| *l == SegmentLabel::SpeechActive));
        assert_eq!(v.labels.iter().next(), Some(&SegmentLabel::NoiseOnly));
    }

    #[test]
    fn noise_is_unit_rms() {
        for kind in NoiseKind::ALL {
            let x = noise(kind, 32000, 9);
            assert!((rms(&x) - 1.0).abs() < 1e-9, "{kind:?}");
        }
    }

    #[test]
    fn mixing_hits_snr() {
        let v = speech_like(6.0, 4);
        let noisy = add_noise(&v, NoiseKind::White, 10.0, 4);
        let noise: Vec<f64> = noisy.iter().zip(&v.samples).map(|(a, b)| a - b).collect();
        let snr = 10.0 * (reference_power(&v) / rms(&noise).powi(2)).log10();
        assert!((snr - 10.0).abs() < 1e-6);
    }

    #[test]
    fn parse_kinds() {
        assert_eq!("mixed".parse::<SignalKind>().unwrap(), SignalKind::Mixed);
        assert!("noise".parse::<SignalKind>().is_err());
        assert_eq!("wind".parse::<NoiseKind>().unwrap(), NoiseKind::Wind);
    }
}
