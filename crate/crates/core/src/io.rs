//! WAV and CSV file formats.
//!
//! WAV files are mono, 16-bit integer PCM at 16 kHz. CSV files carry a
//! header row:
//!
//! - labels: `frame_index,label` with label `speech`, `noise` or `music`
//! - decoder states: `frame,frame_type,coding_mode,vad_active,pitch_lag,`
//!   followed by `cng_db_0..cng_db_19` and `lpc_0..lpc_15`
//! - noise-reduction trace: `hop,time_s,frame,provenance,policy,`
//!   `mean_gain_db,mean_noise_db,residual_db,silence`
//! - MDRP trace: `hop,band,level_db,target_gain_db,applied_gain_db,curve`

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, Write};
use std::path::Path;
use std::str::FromStr;

use crate::decoder::DecoderState;
use crate::framestream::{CodingMode, FrameCategory, LPC_ORDER, SAMPLE_RATE};
use crate::mdrp::MdrpHopTrace;
use crate::metrics::{SegmentLabel, SegmentLabels};
use crate::nr::NrHopTrace;
use crate::spectral::{BandEnvelope, HOP, NUM_BANDS};
use crate::Error;

fn wav_error(e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::Io(io),
        other => Error::Format(other.to_string()),
    }
}

fn csv_error(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Csv(format!("{other:?}")),
        }
    } else {
        Error::Csv(e.to_string())
    }
}

pub fn wav_spec() -> hound::WavSpec {
    hound::WavSpec {
        channels: 1,
        sample_rate: SAMPLE_RATE,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    }
}

pub fn read_wav_from<R: Read>(source: R) -> Result<Vec<i16>, Error> {
    let reader = hound::WavReader::new(source).map_err(wav_error)?;
    let spec = reader.spec();
    if spec != wav_spec() {
        return Err(Error::Format(format!(
            "expected mono 16-bit PCM at 16 kHz, got {} ch, {} bit {:?} at {} Hz",
            spec.channels, spec.bits_per_sample, spec.sample_format, spec.sample_rate
        )));
    }
    reader
        .into_samples::<i16>()
        .collect::<Result<Vec<_>, _>>()
        .map_err(wav_error)
}

pub fn read_wav(path: &Path) -> Result<Vec<i16>, Error> {
    read_wav_from(BufReader::new(File::open(path)?))
}

pub fn write_wav(path: &Path, samples: &[i16]) -> Result<(), Error> {
    write_wav_to(create(path)?, samples)
}

pub fn write_wav_to<W: Write + Seek>(sink: W, samples: &[i16]) -> Result<(), Error> {
    let mut w = hound::WavWriter::new(sink, wav_spec()).map_err(wav_error)?;
    for &s in samples {
        w.write_sample(s).map_err(wav_error)?;
    }
    w.finalize().map_err(wav_error)
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_labels<W: Write>(sink: W, labels: &SegmentLabels) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["frame_index", "label"])
        .map_err(csv_error)?;
    for (i, l) in labels.iter().enumerate() {
        w.write_record([i.to_string(), l.as_str().to_string()])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_labels<R: Read>(source: R) -> Result<SegmentLabels, Error> {
    let mut r = csv::Reader::from_reader(source);
    let mut out = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let idx: usize = field(&rec, 0, "frame_index")?;
        if idx != n {
            return Err(Error::Csv(format!(
                "row {}: expected frame {n}, got {idx}",
                n + 1
            )));
        }
        out.push(SegmentLabel::from_str(rec.get(1).unwrap_or(""))?);
    }
    Ok(SegmentLabels::new(out))
}

pub fn write_labels_file(path: &Path, labels: &SegmentLabels) -> Result<(), Error> {
    write_labels(create(path)?, labels)
}

pub fn read_labels_file(path: &Path) -> Result<SegmentLabels, Error> {
    read_labels(BufReader::new(File::open(path)?))
}

fn field<T: FromStr>(rec: &csv::StringRecord, i: usize, name: &str) -> Result<T, Error> {
    let raw = rec
        .get(i)
        .ok_or_else(|| Error::Csv(format!("missing column {name}")))?;
    raw.trim()
        .parse()
        .map_err(|_| Error::Csv(format!("{name}: cannot parse '{raw}'")))
}

fn frame_type_from(s: &str) -> Result<FrameCategory, Error> {
    [
        FrameCategory::Speech,
        FrameCategory::Sid,
        FrameCategory::NoData,
        FrameCategory::SpeechLost,
    ]
    .into_iter()
    .find(|c| c.as_str() == s)
    .ok_or_else(|| Error::Csv(format!("unknown frame type '{s}'")))
}

fn coding_mode_from(s: &str) -> Result<CodingMode, Error> {
    [CodingMode::Voice, CodingMode::Music]
        .into_iter()
        .find(|c| c.as_str() == s)
        .ok_or_else(|| Error::Csv(format!("unknown coding mode '{s}'")))
}

pub fn states_header() -> Vec<String> {
    let mut h: Vec<String> = [
        "frame",
        "frame_type",
        "coding_mode",
        "vad_active",
        "pitch_lag",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend((0..NUM_BANDS).map(|b| format!("cng_db_{b}")));
    h.extend((0..LPC_ORDER).map(|k| format!("lpc_{k}")));
    h
}

/// Floats are written in their shortest exact form so states survive a
/// round trip unchanged.
pub fn write_states<W: Write>(sink: W, states: &[DecoderState]) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(states_header()).map_err(csv_error)?;
    for (i, s) in states.iter().enumerate() {
        let mut rec = vec![
            i.to_string(),
            s.frame_type.as_str().to_string(),
            s.coding_mode.as_str().to_string(),
            u8::from(s.vad_active).to_string(),
            s.pitch_lag.to_string(),
        ];
        rec.extend(s.cng_envelope.energies_db.iter().map(|v| v.to_string()));
        rec.extend(s.lpc.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_states<R: Read>(source: R) -> Result<Vec<DecoderState>, Error> {
    let mut r = csv::Reader::from_reader(source);
    let expected = states_header();
    let header = r.headers().map_err(csv_error)?;
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::Csv("unexpected decoder-state header".into()));
    }
    let mut out = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let idx: usize = field(&rec, 0, "frame")?;
        if idx != n {
            return Err(Error::Csv(format!(
                "row {}: expected frame {n}, got {idx}",
                n + 1
            )));
        }
        let mut energies_db = [0.0; NUM_BANDS];
        for (b, e) in energies_db.iter_mut().enumerate() {
            *e = field(&rec, 5 + b, "cng_db")?;
        }
        let mut lpc = [0.0; LPC_ORDER];
        for (k, a) in lpc.iter_mut().enumerate() {
            *a = field(&rec, 5 + NUM_BANDS + k, "lpc")?;
        }
        let vad: u8 = field(&rec, 3, "vad_active")?;
        out.push(DecoderState {
            frame_type: frame_type_from(rec.get(1).unwrap_or(""))?,
            coding_mode: coding_mode_from(rec.get(2).unwrap_or(""))?,
            cng_envelope: BandEnvelope { energies_db },
            pitch_lag: field(&rec, 4, "pitch_lag")?,
            lpc,
            vad_active: vad != 0,
        });
    }
    Ok(out)
}

pub fn write_states_file(path: &Path, states: &[DecoderState]) -> Result<(), Error> {
    write_states(create(path)?, states)
}

pub fn read_states_file(path: &Path) -> Result<Vec<DecoderState>, Error> {
    read_states(BufReader::new(File::open(path)?))
}

pub fn write_nr_trace<W: Write>(sink: W, trace: &[NrHopTrace]) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([
        "hop",
        "time_s",
        "frame",
        "provenance",
        "policy",
        "mean_gain_db",
        "mean_noise_db",
        "residual_db",
        "silence",
    ])
    .map_err(csv_error)?;
    for t in trace {
        w.write_record([
            t.hop.to_string(),
            format!("{:.2}", (t.hop * HOP) as f64 / f64::from(SAMPLE_RATE)),
            t.frame.to_string(),
            t.provenance.as_str().to_string(),
            t.policy.as_str().to_string(),
            format!("{:.4}", t.mean_gain_db),
            format!("{:.4}", t.mean_noise_db),
            format!("{:.4}", t.residual_db),
            u8::from(t.silence).to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_mdrp_trace<W: Write>(sink: W, trace: &[MdrpHopTrace]) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([
        "hop",
        "band",
        "level_db",
        "target_gain_db",
        "applied_gain_db",
        "curve",
    ])
    .map_err(csv_error)?;
    for t in trace {
        for (b, bt) in t.bands.iter().enumerate() {
            w.write_record([
                t.hop.to_string(),
                b.to_string(),
                format!("{:.4}", bt.level_db),
                format!("{:.4}", bt.target_gain_db),
                format!("{:.4}", bt.applied_gain_db),
                t.curve.as_str().to_string(),
            ])
            .map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_file_with<F>(path: &Path, f: F) -> Result<(), Error>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<(), Error>,
{
    let mut sink = create(path)?;
    f(&mut sink)?;
    sink.flush()?;
    Ok(())
}
