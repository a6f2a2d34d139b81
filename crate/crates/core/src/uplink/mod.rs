//! Simulated voice encoder front end.
//!
//! Per 20 ms frame the encoder runs VAD, the DTX state machine, LPC and
//! pitch analysis and the voice/music classifier, and emits one
//! [`FrameRecord`]. Active frames carry their PCM unchanged. Inactive frames
//! become a SID every eighth frame of an inactive run (starting with the
//! first) and NO_DATA in between.

pub mod classifier;
pub mod lpc;
pub mod pitch;
pub mod vad;

pub use classifier::{classify_mode, ClassifierConfig, ClassifierState};
pub use lpc::{analyze_lpc, levinson_durbin, LpcError, LpcSolution};
pub use pitch::estimate_pitch;
pub use vad::{vad_decide, VadConfig, VadDecision, VadState};

use crate::framestream::{
    CodingMode, FrameRecord, Payload, SpeechPayload, StreamHeader, Toc, FRAME_LEN, LPC_ORDER,
    SID_BANDS,
};
use crate::spectral::{self, band_energies, NUM_BINS};

pub const SID_PERIOD: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderConfig {
    pub vad: VadConfig,
    pub classifier: ClassifierConfig,
    pub sid_period: u32,
    /// Exponential smoothing of the inactive-frame power spectrum.
    pub noise_smoothing: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            vad: VadConfig::default(),
            classifier: ClassifierConfig::default(),
            sid_period: SID_PERIOD,
            noise_smoothing: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtxMode {
    Active,
    Inactive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DtxState {
    pub mode: DtxMode,
    pub frames_since_sid: u32,
}

impl Default for DtxState {
    fn default() -> Self {
        Self {
            mode: DtxMode::Active,
            frames_since_sid: 0,
        }
    }
}

/// What the encoder decided for one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameAnalysis {
    pub vad: VadDecision,
    pub coding_mode: CodingMode,
}

#[derive(Debug, Clone)]
pub struct Encoder {
    cfg: EncoderConfig,
    vad: VadState,
    dtx: DtxState,
    classifier: ClassifierState,
    noise_psd: Option<Vec<f64>>,
}

impl Encoder {
    pub fn new(cfg: EncoderConfig) -> Self {
        Self {
            cfg,
            vad: VadState::default(),
            dtx: DtxState::default(),
            classifier: ClassifierState::default(),
            noise_psd: None,
        }
    }

    pub fn dtx_state(&self) -> DtxState {
        self.dtx
    }

    /// Encodes a whole signal; the tail is zero-padded to a full frame.
    pub fn encode(
        &mut self,
        samples: &[i16],
        dtx: bool,
    ) -> (StreamHeader, Vec<FrameRecord>, Vec<FrameAnalysis>) {
        let frame_count = samples.len().div_ceil(FRAME_LEN);
        let mut pcm: Vec<i16> = samples.to_vec();
        pcm.resize(frame_count * FRAME_LEN, 0);
        let signal: Vec<f64> = pcm.iter().map(|&s| f64::from(s) / 32768.0).collect();
        let hops = spectral::analyze(&signal);

        let mut frames = Vec::with_capacity(frame_count);
        let mut analyses = Vec::with_capacity(frame_count);
        for i in 0..frame_count {
            let range = i * FRAME_LEN..(i + 1) * FRAME_LEN;
            let frame_hops = &hops[2 * i..2 * i + 2];
            let (record, analysis) =
                self.encode_frame(&pcm[range.clone()], &signal[range], frame_hops, dtx);
            frames.push(record);
            analyses.push(analysis);
        }
        (StreamHeader::new(frame_count as u32), frames, analyses)
    }

    fn encode_frame(
        &mut self,
        pcm: &[i16],
        signal: &[f64],
        hops: &[spectral::SpectralFrame],
        dtx: bool,
    ) -> (FrameRecord, FrameAnalysis) {
        let vad = vad_decide(signal, &mut self.vad, &self.cfg.vad);
        let mut coding_mode = self.classifier.mode;
        for hop in hops {
            coding_mode = classify_mode(hop, &mut self.classifier, &self.cfg.classifier);
        }
        let analysis = FrameAnalysis { vad, coding_mode };

        if vad.active || !dtx {
            self.dtx.mode = DtxMode::Active;
            self.dtx.frames_since_sid = 0;
            let lpc = analyze_lpc(signal)
                .map(|sol| sol.coeffs)
                .unwrap_or_else(|_| vec![0.0; LPC_ORDER]);
            let mut lpc_f32 = [0f32; LPC_ORDER];
            for (dst, src) in lpc_f32.iter_mut().zip(&lpc) {
                *dst = *src as f32;
            }
            let record = FrameRecord {
                toc: Toc::speech(coding_mode),
                payload: Payload::Speech(SpeechPayload {
                    pitch_lag: estimate_pitch(signal),
                    lpc: lpc_f32,
                    pcm: pcm.to_vec(),
                }),
            };
            return (record, analysis);
        }

        self.update_noise(hops);
        let emit_sid = match self.dtx.mode {
            DtxMode::Active => {
                self.dtx.mode = DtxMode::Inactive;
                self.dtx.frames_since_sid = 0;
                true
            }
            DtxMode::Inactive => {
                self.dtx.frames_since_sid += 1;
                if self.dtx.frames_since_sid == self.cfg.sid_period {
                    self.dtx.frames_since_sid = 0;
                    true
                } else {
                    false
                }
            }
        };
        let record = if emit_sid {
            FrameRecord {
                toc: Toc::sid(coding_mode),
                payload: Payload::Sid(self.sid_envelope()),
            }
        } else {
            FrameRecord {
                toc: Toc::no_data(coding_mode),
                payload: Payload::Empty,
            }
        };
        (record, analysis)
    }

    fn update_noise(&mut self, hops: &[spectral::SpectralFrame]) {
        let mut frame_psd = vec![0.0; NUM_BINS];
        for hop in hops {
            for (acc, p) in frame_psd
                .iter_mut()
                .zip(spectral::normalized_power(&hop.power))
            {
                *acc += p / hops.len() as f64;
            }
        }
        let alpha = self.cfg.noise_smoothing;
        match &mut self.noise_psd {
            Some(psd) => {
                for (s, p) in psd.iter_mut().zip(&frame_psd) {
                    *s = alpha * *s + (1.0 - alpha) * p;
                }
            }
            None => self.noise_psd = Some(frame_psd),
        }
    }

    fn sid_envelope(&self) -> [i8; SID_BANDS] {
        let psd = self.noise_psd.as_deref().expect("noise PSD set before SID");
        quantize_envelope(&band_energies(psd))
    }
}

/// Rounds band energies to whole dB within the SID range [-127, 0].
pub fn quantize_envelope(env: &spectral::BandEnvelope) -> [i8; SID_BANDS] {
    let mut out = [0i8; SID_BANDS];
    for (q, e) in out.iter_mut().zip(&env.energies_db) {
        *q = e.round().clamp(-127.0, 0.0) as i8;
    }
    out
}

/// Convenience wrapper over a fresh [`Encoder`] with default settings.
pub fn encode(samples: &[i16], dtx: bool) -> (StreamHeader, Vec<FrameRecord>) {
    let (header, frames, _) = Encoder::new(EncoderConfig::default()).encode(samples, dtx);
    (header, frames)
}
