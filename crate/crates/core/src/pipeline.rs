//! End-to-end runs: mix, encode, decode, enhance both ways, measure.

use crate::controller::{direct_all, ControllerConfig};
use crate::decoder::{to_i16, Decoder, DecoderConfig, DecoderState};
use crate::framestream::{FrameRecord, StreamHeader};
use crate::mdrp::{Mdrp, MdrpHopTrace};
use crate::metrics::{
    log_spectral_distance, residual_trace, silence_detection_rate, suppression_db, MetricsReport,
    ReportRow, ResidualTraces, SegmentLabel,
};
use crate::nr::{NoiseReducer, NrHopTrace};
use crate::signals::{add_noise, NoiseKind, SignalVector};
use crate::uplink::{Encoder, EncoderConfig, FrameAnalysis};
use crate::{Error, Guidance};

pub const DEFAULT_SEED: u64 = 20_240_601;

pub fn pcm_to_f64(pcm: &[i16]) -> Vec<f64> {
    pcm.iter().map(|&s| f64::from(s) / 32768.0).collect()
}

pub fn f64_to_pcm(x: &[f64]) -> Vec<i16> {
    x.iter().map(|&v| to_i16(v)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Modules {
    pub nr: bool,
    pub mdrp: bool,
}

impl Modules {
    pub const NR: Modules = Modules {
        nr: true,
        mdrp: false,
    };
    pub const MDRP: Modules = Modules {
        nr: false,
        mdrp: true,
    };
    pub const BOTH: Modules = Modules {
        nr: true,
        mdrp: true,
    };
}

#[derive(Debug, Clone, Default)]
pub struct EnhanceOutput {
    pub pcm: Vec<f64>,
    pub nr_trace: Option<Vec<NrHopTrace>>,
    pub mdrp_trace: Option<Vec<MdrpHopTrace>>,
}

/// Runs the selected stages, noise reduction first. With `states` present
/// the stages are guided by the controller; without, they run unguided.
pub fn enhance(
    pcm: &[f64],
    states: Option<&[DecoderState]>,
    modules: Modules,
    cfg: &ControllerConfig,
) -> Result<EnhanceOutput, Error> {
    cfg.validate()?;
    let directives = states.map(|s| direct_all(s, cfg));
    let guidance = match &directives {
        Some(d) => Guidance::Guided(d),
        None => Guidance::Unguided,
    };
    let mut out = EnhanceOutput {
        pcm: pcm.to_vec(),
        ..Default::default()
    };
    if modules.nr {
        let (pcm, trace) = NoiseReducer::new(cfg.nr)?.process(&out.pcm, guidance)?;
        out.pcm = pcm;
        out.nr_trace = Some(trace);
    }
    if modules.mdrp {
        let (pcm, trace) = Mdrp::new(cfg.mdrp.clone())?.process(&out.pcm, guidance)?;
        out.pcm = pcm;
        out.mdrp_trace = Some(trace);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareConfig {
    pub controller: ControllerConfig,
    pub encoder: EncoderConfig,
    pub decoder: DecoderConfig,
    pub seed: u64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            controller: ControllerConfig::default(),
            encoder: EncoderConfig::default(),
            decoder: DecoderConfig::default(),
            seed: DEFAULT_SEED,
        }
    }
}

/// Encoder and decoder outputs for one input signal.
#[derive(Debug, Clone)]
pub struct Transcoded {
    pub header: StreamHeader,
    pub frames: Vec<FrameRecord>,
    pub analyses: Vec<FrameAnalysis>,
    pub decoded: Vec<i16>,
    pub states: Vec<DecoderState>,
}

pub fn transcode(input: &[i16], dtx: bool, cfg: &CompareConfig) -> Result<Transcoded, Error> {
    let (header, frames, analyses) = Encoder::new(cfg.encoder).encode(input, dtx);
    let (decoded, states) = Decoder::new(cfg.decoder).decode(&header, &frames)?;
    Ok(Transcoded {
        header,
        frames,
        analyses,
        decoded,
        states,
    })
}

/// Everything produced for one noise condition.
#[derive(Debug, Clone)]
pub struct ConditionRun {
    pub noise: NoiseKind,
    pub input: Vec<i16>,
    pub link: Transcoded,
    pub unguided: EnhanceOutput,
    pub guided: EnhanceOutput,
}

impl ConditionRun {
    pub fn decoded_f64(&self) -> Vec<f64> {
        pcm_to_f64(&self.link.decoded)
    }
}

/// Quantizes an enhancement result the way it would be written to disk.
fn quantized(mut out: EnhanceOutput) -> EnhanceOutput {
    out.pcm = pcm_to_f64(&f64_to_pcm(&out.pcm));
    out
}

pub fn run_condition(
    clean: &SignalVector,
    noise: NoiseKind,
    snr_db: f64,
    modules: Modules,
    cfg: &CompareConfig,
) -> Result<ConditionRun, Error> {
    let input = f64_to_pcm(&add_noise(clean, noise, snr_db, cfg.seed));
    run_input(input, noise, modules, cfg)
}

/// Runs an already mixed input through the link and both enhancement modes.
pub fn run_input(
    input: Vec<i16>,
    noise: NoiseKind,
    modules: Modules,
    cfg: &CompareConfig,
) -> Result<ConditionRun, Error> {
    let link = transcode(&input, true, cfg)?;
    let decoded = pcm_to_f64(&link.decoded);
    let unguided = quantized(enhance(&decoded, None, modules, &cfg.controller)?);
    let guided = quantized(enhance(
        &decoded,
        Some(&link.states),
        modules,
        &cfg.controller,
    )?);
    Ok(ConditionRun {
        noise,
        input,
        link,
        unguided,
        guided,
    })
}

/// Noise reduction with and without guidance under every noise condition.
pub fn compare(
    clean: &SignalVector,
    noises: &[NoiseKind],
    snr_db: f64,
    cfg: &CompareConfig,
) -> Result<MetricsReport, Error> {
    let mut report = MetricsReport::default();
    let has_music = clean.labels.iter().any(|l| *l == SegmentLabel::Music);
    for &noise in noises {
        let run = run_condition(clean, noise, snr_db, Modules::NR, cfg)?;
        let decoded = run.decoded_f64();
        let labels = &clean.labels;
        let su = suppression_db(&decoded, &run.unguided.pcm, labels)?;
        let sg = suppression_db(&decoded, &run.guided.pcm, labels)?;
        let rate = |out: &EnhanceOutput| {
            silence_detection_rate(out.nr_trace.as_deref().unwrap_or_default(), labels)
        };
        let lsd = |out: &EnhanceOutput| -> Result<Option<f64>, Error> {
            if has_music {
                log_spectral_distance(&clean.samples, &out.pcm, labels).map(Some)
            } else {
                Ok(None)
            }
        };
        report.rows.push(ReportRow {
            noise_type: noise.as_str().to_string(),
            suppression_unguided_db: su,
            suppression_guided_db: sg,
            improvement_db: sg - su,
            silence_detection_rate_unguided: rate(&run.unguided)?,
            silence_detection_rate_guided: rate(&run.guided)?,
            music_lsd_unguided: lsd(&run.unguided)?,
            music_lsd_guided: lsd(&run.guided)?,
        });
        report.traces.push(ResidualTraces {
            noise_type: noise.as_str().to_string(),
            unguided: residual_trace(&run.unguided.pcm),
            guided: residual_trace(&run.guided.pcm),
        });
    }
    Ok(report)
}
