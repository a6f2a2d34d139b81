//! Objective measures: noise suppression on noise-only frames, per-hop
//! residual power, silence-detection rate and log-spectral distance.

use std::str::FromStr;

use crate::framestream::FRAME_LEN;
use crate::mdrp::MdrpHopTrace;
use crate::nr::NrHopTrace;
use crate::spectral::{self, HOP, LOG_EPS};
use crate::Error;

/// Frames at the start of every noise-only run that are excluded from
/// measurements, matching the encoder's VAD hangover.
pub const HANGOVER_EXCLUSION: usize = 5;

/// Bins more than this far below the loudest bin of a hop are left out of
/// the log-spectral distance.
pub const LSD_DYNAMIC_RANGE_DB: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SegmentLabel {
    SpeechActive,
    NoiseOnly,
    Music,
}

impl SegmentLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            SegmentLabel::SpeechActive => "speech",
            SegmentLabel::NoiseOnly => "noise",
            SegmentLabel::Music => "music",
        }
    }
}

impl FromStr for SegmentLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim() {
            "speech" => Ok(SegmentLabel::SpeechActive),
            "noise" => Ok(SegmentLabel::NoiseOnly),
            "music" => Ok(SegmentLabel::Music),
            other => Err(Error::Csv(format!("unknown label '{other}'"))),
        }
    }
}

/// Ground truth, one label per 20 ms frame.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SegmentLabels(Vec<SegmentLabel>);

impl SegmentLabels {
    pub fn new(labels: Vec<SegmentLabel>) -> Self {
        Self(labels)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, frame: usize) -> Option<SegmentLabel> {
        self.0.get(frame).copied()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SegmentLabel> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[SegmentLabel] {
        &self.0
    }

    /// Maximal runs of equal labels as `(label, start, len)`.
    pub fn runs(&self) -> Vec<(SegmentLabel, usize, usize)> {
        let mut runs: Vec<(SegmentLabel, usize, usize)> = Vec::new();
        for (i, &l) in self.0.iter().enumerate() {
            match runs.last_mut() {
                Some((label, _, len)) if *label == l => *len += 1,
                _ => runs.push((l, i, 1)),
            }
        }
        runs
    }

    /// Noise-only frames outside the hangover exclusion at each run start.
    pub fn measured_noise_frames(&self) -> Vec<usize> {
        self.runs()
            .into_iter()
            .filter(|(l, _, _)| *l == SegmentLabel::NoiseOnly)
            .flat_map(|(_, start, len)| start + HANGOVER_EXCLUSION.min(len)..start + len)
            .collect()
    }

    pub fn frames_with(&self, label: SegmentLabel) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i] == label).collect()
    }
}

impl FromIterator<SegmentLabel> for SegmentLabels {
    fn from_iter<I: IntoIterator<Item = SegmentLabel>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

fn frame_samples(x: &[f64], frame: usize) -> &[f64] {
    let start = (frame * FRAME_LEN).min(x.len());
    let end = ((frame + 1) * FRAME_LEN).min(x.len());
    &x[start..end]
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<(), Error> {
    if a.len() == b.len() {
        Ok(())
    } else {
        Err(Error::LengthMismatch(a.len(), b.len()))
    }
}

fn energy_over(x: &[f64], frames: &[usize]) -> f64 {
    frames
        .iter()
        .flat_map(|&f| frame_samples(x, f))
        .map(|s| s * s)
        .sum()
}

/// Input-to-output power ratio over the measured noise-only frames, in dB.
pub fn suppression_db(input: &[f64], output: &[f64], labels: &SegmentLabels) -> Result<f64, Error> {
    check_lengths(input, output)?;
    let frames = labels.measured_noise_frames();
    if frames.is_empty() {
        return Err(Error::NoNoiseFrames);
    }
    let e_in = energy_over(input, &frames);
    let e_out = energy_over(output, &frames);
    Ok(10.0 * ((e_in + LOG_EPS) / (e_out + LOG_EPS)).log10())
}

/// Output power per 160-sample hop, in dBFS.
pub fn residual_trace(output: &[f64]) -> Vec<f64> {
    output
        .chunks(HOP)
        .map(|c| {
            let ms = c.iter().map(|x| x * x).sum::<f64>() / c.len() as f64;
            10.0 * (ms + LOG_EPS).log10()
        })
        .collect()
}

/// Per-hop diagnostics that can be scored against labels.
pub trait HopActivity {
    fn frame(&self) -> usize;
    /// Whether the stage treated this hop as background noise.
    fn silence(&self) -> bool;
}

impl HopActivity for NrHopTrace {
    fn frame(&self) -> usize {
        self.frame
    }
    fn silence(&self) -> bool {
        self.silence
    }
}

impl HopActivity for MdrpHopTrace {
    fn frame(&self) -> usize {
        self.frame
    }
    fn silence(&self) -> bool {
        self.silence
    }
}

/// Fraction of measured noise-only frames whose hops were all handled as
/// silence.
pub fn silence_detection_rate<T: HopActivity>(
    trace: &[T],
    labels: &SegmentLabels,
) -> Result<f64, Error> {
    let frames = labels.measured_noise_frames();
    if frames.is_empty() {
        return Err(Error::NoNoiseFrames);
    }
    let mut all_silent = vec![true; labels.len()];
    let mut seen = vec![false; labels.len()];
    for hop in trace {
        if let Some(slot) = all_silent.get_mut(hop.frame()) {
            *slot &= hop.silence();
            seen[hop.frame()] = true;
        }
    }
    let detected = frames.iter().filter(|&&f| seen[f] && all_silent[f]).count();
    Ok(detected as f64 / frames.len() as f64)
}

/// RMS difference of log power spectra over the hops of music frames.
///
/// Only bins within 30 dB of the hop's strongest reference bin are scored,
/// so that empty spectral regions, where any residual noise dominates the
/// log ratio, do not swamp the measure.
pub fn log_spectral_distance(
    reference: &[f64],
    test: &[f64],
    labels: &SegmentLabels,
) -> Result<f64, Error> {
    check_lengths(reference, test)?;
    let r = spectral::analyze(reference);
    let t = spectral::analyze(test);
    let range = 10f64.powf(-LSD_DYNAMIC_RANGE_DB / 10.0);
    let mut acc = 0.0;
    let mut count = 0usize;
    for (h, (rf, tf)) in r.iter().zip(&t).enumerate() {
        if labels.get(h / 2) != Some(SegmentLabel::Music) {
            continue;
        }
        let peak = rf.power.iter().copied().fold(0.0, f64::max);
        if peak <= LOG_EPS {
            continue;
        }
        for (pr, pt) in rf.power.iter().zip(&tf.power) {
            if *pr >= peak * range {
                let d = 10.0 * (pr + LOG_EPS).log10() - 10.0 * (pt + LOG_EPS).log10();
                acc += d * d;
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::NoMusicFrames);
    }
    Ok((acc / count as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub noise_type: String,
    pub suppression_unguided_db: f64,
    pub suppression_guided_db: f64,
    pub improvement_db: f64,
    pub silence_detection_rate_unguided: f64,
    pub silence_detection_rate_guided: f64,
    /// Present when the vector contains music.
    pub music_lsd_unguided: Option<f64>,
    pub music_lsd_guided: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualTraces {
    pub noise_type: String,
    pub unguided: Vec<f64>,
    pub guided: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsReport {
    pub rows: Vec<ReportRow>,
    pub traces: Vec<ResidualTraces>,
}

pub const REPORT_HEADER: [&str; 8] = [
    "noise_type",
    "suppression_unguided_db",
    "suppression_guided_db",
    "improvement_db",
    "silence_detection_rate_unguided",
    "silence_detection_rate_guided",
    "music_lsd_unguided",
    "music_lsd_guided",
];

impl MetricsReport {
    pub fn write_csv<W: std::io::Write>(&self, sink: W) -> Result<(), Error> {
        let mut w = csv::Writer::from_writer(sink);
        let csv_err = |e: csv::Error| Error::Csv(e.to_string());
        w.write_record(REPORT_HEADER).map_err(csv_err)?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.noise_type.clone(),
                format!("{:.4}", r.suppression_unguided_db),
                format!("{:.4}", r.suppression_guided_db),
                format!("{:.4}", r.improvement_db),
                format!("{:.4}", r.silence_detection_rate_unguided),
                format!("{:.4}", r.silence_detection_rate_guided),
                opt(r.music_lsd_unguided),
                opt(r.music_lsd_guided),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Per-hop residual power of both pipelines for every condition.
    pub fn write_traces_csv<W: std::io::Write>(&self, sink: W) -> Result<(), Error> {
        let mut w = csv::Writer::from_writer(sink);
        let csv_err = |e: csv::Error| Error::Csv(e.to_string());
        w.write_record(["noise_type", "hop", "time_s", "unguided_db", "guided_db"])
            .map_err(csv_err)?;
        for t in &self.traces {
            for (h, (u, g)) in t.unguided.iter().zip(&t.guided).enumerate() {
                w.write_record([
                    t.noise_type.clone(),
                    h.to_string(),
                    format!("{:.2}", h as f64 * HOP as f64 / 16000.0),
                    format!("{u:.4}"),
                    format!("{g:.4}"),
                ])
                .map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use SegmentLabel::*;

    fn labels(spec: &[(SegmentLabel, usize)]) -> SegmentLabels {
        spec.iter()
            .flat_map(|&(l, n)| std::iter::repeat_n(l, n))
            .collect()
    }

    fn ramp(n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| ((i * 7919) % 1000) as f64 / 1000.0 - 0.5)
            .collect()
    }

    #[test]
    fn measured_frames_skip_hangover() {
        let l = labels(&[
            (NoiseOnly, 7),
            (SpeechActive, 3),
            (NoiseOnly, 4),
            (NoiseOnly, 0),
        ]);
        assert_eq!(l.measured_noise_frames(), vec![5, 6]);
    }

    #[test]
    fn suppression_examples() {
        let l = labels(&[(NoiseOnly, 10)]);
        let x = ramp(10 * FRAME_LEN);
        assert!(suppression_db(&x, &x, &l).unwrap().abs() < 1e-9);
        let y: Vec<f64> = x.iter().map(|v| v * 0.1).collect();
        assert!((suppression_db(&x, &y, &l).unwrap() - 20.0).abs() < 1e-6);
        let none = labels(&[(SpeechActive, 10)]);
        assert!(matches!(
            suppression_db(&x, &x, &none),
            Err(Error::NoNoiseFrames)
        ));
        assert!(suppression_db(&x, &x[1..], &l).is_err());
    }

    #[test]
    fn residual_examples() {
        assert!(residual_trace(&vec![0.0; 480])
            .iter()
            .all(|&d| (d + 120.0).abs() < 1e-9));
        let t = residual_trace(&vec![0.1; 480]);
        assert_eq!(t.len(), 3);
        assert!(t.iter().all(|&d| (d + 20.0).abs() < 1e-9));
    }

    #[test]
    fn lsd_examples() {
        let l = labels(&[(Music, 10)]);
        let x: Vec<f64> = (0..10 * FRAME_LEN)
            .map(|n| (n as f64 * 0.05).sin() + 0.3 * (n as f64 * 0.31).sin())
            .collect();
        assert_eq!(log_spectral_distance(&x, &x, &l).unwrap(), 0.0);
        let half: Vec<f64> = x.iter().map(|v| v * 0.5).collect();
        let d = log_spectral_distance(&x, &half, &l).unwrap();
        assert!((d - 10.0 * 4f64.log10()).abs() < 1e-6, "{d}");
        let none = labels(&[(NoiseOnly, 10)]);
        assert!(matches!(
            log_spectral_distance(&x, &x, &none),
            Err(Error::NoMusicFrames)
        ));
    }

    struct Hop(usize, bool);
    impl HopActivity for Hop {
        fn frame(&self) -> usize {
            self.0
        }
        fn silence(&self) -> bool {
            self.1
        }
    }

    #[test]
    fn detection_rate_requires_every_hop() {
        let l = labels(&[(NoiseOnly, 7)]);
        let mut trace: Vec<Hop> = (0..14).map(|h| Hop(h / 2, true)).collect();
        assert_eq!(silence_detection_rate(&trace, &l).unwrap(), 1.0);
        trace[11].1 = false;
        assert_eq!(silence_detection_rate(&trace, &l).unwrap(), 0.5);
        let none = labels(&[(SpeechActive, 7)]);
        assert!(silence_detection_rate(&trace, &none).is_err());
    }
}
