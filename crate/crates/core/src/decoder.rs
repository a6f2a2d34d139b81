//! Frame-stream decoder and its per-frame state sidecar.
//!
//! SPEECH payloads are emitted verbatim. SID and NO_DATA frames are filled
//! with random-phase comfort noise shaped by the held SID envelope, and a
//! SPEECH_LOST frame repeats the previous output 3 dB quieter. Alongside the
//! PCM the decoder exposes one [`DecoderState`] per frame, which is what the
//! guidance controller consumes.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::framestream::{
    CodingMode, FrameCategory, FrameRecord, Payload, StreamError, StreamHeader, FRAME_LEN,
    LPC_ORDER,
};
use crate::spectral::{
    expand_envelope, BandEnvelope, OverlapAdd, SpectralFrame, SynthesisWindow, FFT_LEN, HOP,
};

pub const DEFAULT_CNG_SEED: u64 = 0x5EED_C0DE;

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderState {
    pub frame_type: FrameCategory,
    pub coding_mode: CodingMode,
    pub cng_envelope: BandEnvelope,
    pub pitch_lag: u16,
    pub lpc: [f64; LPC_ORDER],
    pub vad_active: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderConfig {
    pub cng_seed: u64,
    /// Weight of the held envelope when a new SID arrives (dB domain).
    pub envelope_smoothing: f64,
    pub concealment_attenuation_db: f64,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            cng_seed: DEFAULT_CNG_SEED,
            envelope_smoothing: 0.8,
            concealment_attenuation_db: 3.0,
        }
    }
}

/// Random-phase spectral comfort noise with overlap carried across calls.
#[derive(Debug, Clone)]
pub struct ComfortNoiseGenerator {
    rng: ChaCha8Rng,
    ola: OverlapAdd,
    primed: bool,
}

impl ComfortNoiseGenerator {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            ola: OverlapAdd::new(SynthesisWindow::SqrtHann),
            primed: false,
        }
    }

    fn random_hop(&mut self, magnitude: &[f64]) -> SpectralFrame {
        let bins = magnitude
            .iter()
            .map(|&m| Complex64::from_polar(m, self.rng.random_range(0.0..2.0 * PI)))
            .collect();
        SpectralFrame::from_bins(bins, 0)
    }

    /// Drops the overlap so the next call starts a fresh noise segment.
    pub fn restart(&mut self) {
        self.ola.reset();
        self.primed = false;
    }

    /// Produces `hops * 160` samples whose per-bin power follows `env`.
    pub fn generate(&mut self, env: &BandEnvelope, hops: usize) -> Vec<f64> {
        let magnitude: Vec<f64> = expand_envelope(env)
            .iter()
            .map(|p| (p * FFT_LEN as f64).sqrt())
            .collect();
        if !self.primed {
            // The first half-window would otherwise fade in from silence.
            let hop = self.random_hop(&magnitude);
            self.ola.push(&hop);
            self.primed = true;
        }
        let mut out = Vec::with_capacity(hops * HOP);
        for _ in 0..hops {
            let hop = self.random_hop(&magnitude);
            out.extend(self.ola.push(&hop));
        }
        out
    }
}

/// Stateless comfort noise: deterministic for a given seed.
pub fn generate_cng(env: &BandEnvelope, rng_seed: u64, hops: usize) -> Vec<f64> {
    ComfortNoiseGenerator::new(rng_seed).generate(env, hops)
}

pub fn to_i16(x: f64) -> i16 {
    (x * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

#[derive(Debug, Clone)]
pub struct Decoder {
    cfg: DecoderConfig,
    envelope: Option<BandEnvelope>,
    cng: ComfortNoiseGenerator,
    in_cng: bool,
    prev_pcm: Vec<i16>,
    pitch_lag: u16,
    lpc: [f64; LPC_ORDER],
}

impl Decoder {
    pub fn new(cfg: DecoderConfig) -> Self {
        Self {
            cfg,
            envelope: None,
            cng: ComfortNoiseGenerator::new(cfg.cng_seed),
            in_cng: false,
            prev_pcm: vec![0; FRAME_LEN],
            pitch_lag: 0,
            lpc: [0.0; LPC_ORDER],
        }
    }

    pub fn cng_envelope(&self) -> BandEnvelope {
        self.envelope.unwrap_or_else(BandEnvelope::floor)
    }

    pub fn decode_frame(
        &mut self,
        frame: &FrameRecord,
    ) -> Result<(Vec<i16>, DecoderState), StreamError> {
        // Rejects records whose payload disagrees with the ToC.
        frame.payload_bytes()?;
        let frame_type = frame.category();
        let pcm = match (&frame.payload, frame_type) {
            (Payload::Speech(speech), _) => {
                self.in_cng = false;
                self.pitch_lag = speech.pitch_lag;
                for (dst, &src) in self.lpc.iter_mut().zip(&speech.lpc) {
                    *dst = f64::from(src);
                }
                speech.pcm.clone()
            }
            (Payload::Sid(env), _) => {
                let received = env.map(f64::from);
                let smoothed = match self.envelope {
                    None => BandEnvelope {
                        energies_db: received,
                    },
                    Some(held) => {
                        let a = self.cfg.envelope_smoothing;
                        let mut energies_db = held.energies_db;
                        for (e, r) in energies_db.iter_mut().zip(received) {
                            *e = a * *e + (1.0 - a) * r;
                        }
                        BandEnvelope { energies_db }
                    }
                };
                self.envelope = Some(smoothed);
                self.comfort_noise()
            }
            (Payload::Empty, FrameCategory::NoData) => self.comfort_noise(),
            (Payload::Empty, _) => {
                self.in_cng = false;
                let gain = 10f64.powf(-self.cfg.concealment_attenuation_db / 20.0);
                self.prev_pcm
                    .iter()
                    .map(|&s| (f64::from(s) * gain).round() as i16)
                    .collect()
            }
        };
        let active = frame_type == FrameCategory::Speech;
        let voiced = matches!(
            frame_type,
            FrameCategory::Speech | FrameCategory::SpeechLost
        );
        let state = DecoderState {
            frame_type,
            coding_mode: frame.toc.coding_mode,
            cng_envelope: self.cng_envelope(),
            pitch_lag: if voiced { self.pitch_lag } else { 0 },
            lpc: if voiced { self.lpc } else { [0.0; LPC_ORDER] },
            vad_active: active,
        };
        self.prev_pcm.clone_from(&pcm);
        Ok((pcm, state))
    }

    fn comfort_noise(&mut self) -> Vec<i16> {
        if !self.in_cng {
            self.cng.restart();
            self.in_cng = true;
        }
        let env = self.cng_envelope();
        self.cng
            .generate(&env, FRAME_LEN / HOP)
            .into_iter()
            .map(to_i16)
            .collect()
    }

    pub fn decode(
        &mut self,
        header: &StreamHeader,
        frames: &[FrameRecord],
    ) -> Result<(Vec<i16>, Vec<DecoderState>), StreamError> {
        if header.frame_count as usize != frames.len() {
            return Err(StreamError::FrameCountMismatch {
                header: header.frame_count,
                actual: frames.len(),
            });
        }
        let mut pcm = Vec::with_capacity(frames.len() * FRAME_LEN);
        let mut states = Vec::with_capacity(frames.len());
        for frame in frames {
            let (out, state) = self.decode_frame(frame)?;
            pcm.extend(out);
            states.push(state);
        }
        Ok((pcm, states))
    }
}

/// Decodes with a fresh default [`Decoder`].
pub fn decode(
    header: &StreamHeader,
    frames: &[FrameRecord],
) -> Result<(Vec<i16>, Vec<DecoderState>), StreamError> {
    Decoder::new(DecoderConfig::default()).decode(header, frames)
}
