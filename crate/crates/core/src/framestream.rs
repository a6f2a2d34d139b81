//! Frame-stream container (`.gvf`).
//!
//! A stream is a 14-byte header followed by one record per 20 ms frame:
//! a ToC byte, a little-endian `u16` payload length and the payload.
//!
//! ```text
//! header: "GVF1" | sample_rate u32 | frame_len u16 | frame_count u32
//! ToC:    b7 header | b6 followed | b5 coding mode | b4 quality | b3..b0 rate code
//! ```
//!
//! Rate codes 0..=11 are active speech, 12 is SID, 13 is NO_DATA and 14 is
//! SPEECH_LOST. Rate code 15 is rejected.

use std::io::{self, Read, Write};

use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"GVF1";
pub const HEADER_LEN: usize = 14;
pub const SAMPLE_RATE: u32 = 16_000;
pub const FRAME_LEN: usize = 320;
pub const LPC_ORDER: usize = 16;
pub const SID_BANDS: usize = 20;

/// Maximum pitch lag carried in a SPEECH payload.
pub const MAX_PITCH_LAG: u16 = 400;

/// pitch (2) + LPC (16 x f32) + PCM (320 x i16)
pub const SPEECH_PAYLOAD_LEN: usize = 2 + 4 * LPC_ORDER + 2 * FRAME_LEN;
pub const SID_PAYLOAD_LEN: usize = SID_BANDS;

pub const RATE_CODE_SID: u8 = 12;
pub const RATE_CODE_NO_DATA: u8 = 13;
pub const RATE_CODE_SPEECH_LOST: u8 = 14;

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("reserved ToC bit set in byte {0:#04x}")]
    ReservedBitSet(u8),
    #[error("invalid rate code {0}")]
    InvalidRateCode(u8),
    #[error("bad magic {0:?}, expected \"GVF1\"")]
    BadMagic([u8; 4]),
    #[error("truncated stream")]
    TruncatedStream,
    #[error("payload length {actual} does not match {category:?} (expected {expected})")]
    PayloadMismatch {
        category: FrameCategory,
        expected: usize,
        actual: usize,
    },
    #[error("unsupported stream format: {0}")]
    UnsupportedFormat(String),
    #[error("frame count mismatch: header says {header}, got {actual}")]
    FrameCountMismatch { header: u32, actual: usize },
    #[error("pitch lag {0} out of range")]
    PitchOutOfRange(u16),
    #[error("SID band energy {0} dB outside [-127, 0]")]
    SidOutOfRange(i8),
    #[error(transparent)]
    Io(io::Error),
}

impl From<io::Error> for StreamError {
    fn from(err: io::Error) -> Self {
        if err.kind() == io::ErrorKind::UnexpectedEof {
            StreamError::TruncatedStream
        } else {
            StreamError::Io(err)
        }
    }
}

pub type Result<T> = std::result::Result<T, StreamError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CodingMode {
    Voice,
    Music,
}

impl CodingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CodingMode::Voice => "voice",
            CodingMode::Music => "music",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameCategory {
    Speech,
    Sid,
    NoData,
    SpeechLost,
}

impl FrameCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            FrameCategory::Speech => "SPEECH",
            FrameCategory::Sid => "SID",
            FrameCategory::NoData => "NO_DATA",
            FrameCategory::SpeechLost => "SPEECH_LOST",
        }
    }

    /// SID and NO_DATA carry no voice activity.
    pub fn is_inactive(self) -> bool {
        matches!(self, FrameCategory::Sid | FrameCategory::NoData)
    }

    pub fn payload_len(self) -> usize {
        match self {
            FrameCategory::Speech => SPEECH_PAYLOAD_LEN,
            FrameCategory::Sid => SID_PAYLOAD_LEN,
            FrameCategory::NoData | FrameCategory::SpeechLost => 0,
        }
    }
}

/// Table-of-contents byte of one encoded frame.
///
/// The two reserved high bits are not stored; they are always written as 0
/// and a nonzero value is rejected on parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Toc {
    pub coding_mode: CodingMode,
    /// Stored but not interpreted.
    pub quality: bool,
    rate_code: u8,
}

impl Toc {
    pub fn new(coding_mode: CodingMode, quality: bool, rate_code: u8) -> Result<Self> {
        if rate_code > RATE_CODE_SPEECH_LOST {
            return Err(StreamError::InvalidRateCode(rate_code));
        }
        Ok(Self {
            coding_mode,
            quality,
            rate_code,
        })
    }

    pub fn speech(coding_mode: CodingMode) -> Self {
        Self {
            coding_mode,
            quality: true,
            rate_code: 0,
        }
    }

    pub fn sid(coding_mode: CodingMode) -> Self {
        Self {
            coding_mode,
            quality: true,
            rate_code: RATE_CODE_SID,
        }
    }

    pub fn no_data(coding_mode: CodingMode) -> Self {
        Self {
            coding_mode,
            quality: true,
            rate_code: RATE_CODE_NO_DATA,
        }
    }

    pub fn speech_lost(coding_mode: CodingMode) -> Self {
        Self {
            coding_mode,
            quality: false,
            rate_code: RATE_CODE_SPEECH_LOST,
        }
    }

    pub fn rate_code(&self) -> u8 {
        self.rate_code
    }

    pub fn category(&self) -> FrameCategory {
        category(self)
    }

    pub fn to_byte(&self) -> u8 {
        let mode = match self.coding_mode {
            CodingMode::Voice => 0,
            CodingMode::Music => 1,
        };
        (mode << 5) | (u8::from(self.quality) << 4) | self.rate_code
    }
}

pub fn parse_toc(byte: u8) -> Result<Toc> {
    if byte & 0xC0 != 0 {
        return Err(StreamError::ReservedBitSet(byte));
    }
    let rate_code = byte & 0x0F;
    if rate_code == 15 {
        return Err(StreamError::InvalidRateCode(rate_code));
    }
    let coding_mode = if byte & 0x20 != 0 {
        CodingMode::Music
    } else {
        CodingMode::Voice
    };
    Ok(Toc {
        coding_mode,
        quality: byte & 0x10 != 0,
        rate_code,
    })
}

pub fn category(toc: &Toc) -> FrameCategory {
    match toc.rate_code {
        0..=11 => FrameCategory::Speech,
        RATE_CODE_SID => FrameCategory::Sid,
        RATE_CODE_NO_DATA => FrameCategory::NoData,
        _ => FrameCategory::SpeechLost,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeechPayload {
    /// 0 means no pitch found.
    pub pitch_lag: u16,
    pub lpc: [f32; LPC_ORDER],
    pub pcm: Vec<i16>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Speech(SpeechPayload),
    /// Band log-energies in dB re full scale, each in [-127, 0].
    Sid([i8; SID_BANDS]),
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub toc: Toc,
    pub payload: Payload,
}

impl FrameRecord {
    pub fn category(&self) -> FrameCategory {
        self.toc.category()
    }

    /// Serialized payload bytes, checked against the ToC category.
    pub fn payload_bytes(&self) -> Result<Vec<u8>> {
        let category = self.category();
        let bytes = match &self.payload {
            Payload::Speech(speech) => {
                if speech.pitch_lag > MAX_PITCH_LAG {
                    return Err(StreamError::PitchOutOfRange(speech.pitch_lag));
                }
                let mut out = Vec::with_capacity(2 + 4 * LPC_ORDER + 2 * speech.pcm.len());
                out.extend_from_slice(&speech.pitch_lag.to_le_bytes());
                for c in speech.lpc {
                    out.extend_from_slice(&c.to_le_bytes());
                }
                for s in &speech.pcm {
                    out.extend_from_slice(&s.to_le_bytes());
                }
                out
            }
            Payload::Sid(env) => {
                if let Some(&bad) = env.iter().find(|&&e| !(-127..=0).contains(&e)) {
                    return Err(StreamError::SidOutOfRange(bad));
                }
                env.iter().map(|&e| e as u8).collect()
            }
            Payload::Empty => Vec::new(),
        };
        let payload_matches = matches!(
            (&self.payload, category),
            (Payload::Speech(_), FrameCategory::Speech)
                | (Payload::Sid(_), FrameCategory::Sid)
                | (
                    Payload::Empty,
                    FrameCategory::NoData | FrameCategory::SpeechLost
                )
        );
        if !payload_matches || bytes.len() != category.payload_len() {
            return Err(StreamError::PayloadMismatch {
                category,
                expected: category.payload_len(),
                actual: bytes.len(),
            });
        }
        Ok(bytes)
    }

    fn from_parts(toc: Toc, bytes: &[u8]) -> Result<Self> {
        let category = toc.category();
        if bytes.len() != category.payload_len() {
            return Err(StreamError::PayloadMismatch {
                category,
                expected: category.payload_len(),
                actual: bytes.len(),
            });
        }
        let payload = match category {
            FrameCategory::Speech => {
                let pitch_lag = u16::from_le_bytes([bytes[0], bytes[1]]);
                if pitch_lag > MAX_PITCH_LAG {
                    return Err(StreamError::PitchOutOfRange(pitch_lag));
                }
                let mut lpc = [0f32; LPC_ORDER];
                for (i, c) in lpc.iter_mut().enumerate() {
                    let at = 2 + 4 * i;
                    *c = f32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
                }
                let pcm = bytes[2 + 4 * LPC_ORDER..]
                    .chunks_exact(2)
                    .map(|b| i16::from_le_bytes([b[0], b[1]]))
                    .collect();
                Payload::Speech(SpeechPayload {
                    pitch_lag,
                    lpc,
                    pcm,
                })
            }
            FrameCategory::Sid => {
                let mut env = [0i8; SID_BANDS];
                for (e, &b) in env.iter_mut().zip(bytes) {
                    *e = b as i8;
                    if !(-127..=0).contains(e) {
                        return Err(StreamError::SidOutOfRange(*e));
                    }
                }
                Payload::Sid(env)
            }
            FrameCategory::NoData | FrameCategory::SpeechLost => Payload::Empty,
        };
        Ok(Self { toc, payload })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamHeader {
    pub sample_rate: u32,
    pub frame_len: u16,
    pub frame_count: u32,
}

impl StreamHeader {
    pub fn new(frame_count: u32) -> Self {
        Self {
            sample_rate: SAMPLE_RATE,
            frame_len: FRAME_LEN as u16,
            frame_count,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.sample_rate != SAMPLE_RATE || usize::from(self.frame_len) != FRAME_LEN {
            return Err(StreamError::UnsupportedFormat(format!(
                "{} Hz / {} samples per frame (only {} Hz / {} supported)",
                self.sample_rate, self.frame_len, SAMPLE_RATE, FRAME_LEN
            )));
        }
        Ok(())
    }

    fn to_bytes(self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[..4].copy_from_slice(&MAGIC);
        out[4..8].copy_from_slice(&self.sample_rate.to_le_bytes());
        out[8..10].copy_from_slice(&self.frame_len.to_le_bytes());
        out[10..14].copy_from_slice(&self.frame_count.to_le_bytes());
        out
    }
}

/// Writes a whole stream and returns the number of bytes written.
pub fn write_stream<W: Write>(
    header: &StreamHeader,
    frames: &[FrameRecord],
    sink: &mut W,
) -> Result<usize> {
    let mut writer = StreamWriter::new(sink, *header)?;
    for frame in frames {
        writer.write_frame(frame)?;
    }
    writer.finish()
}

pub fn read_stream<R: Read>(source: &mut R) -> Result<(StreamHeader, Vec<FrameRecord>)> {
    let mut reader = StreamReader::new(source)?;
    let header = reader.header();
    let frames = reader.by_ref().collect::<Result<Vec<_>>>()?;
    Ok((header, frames))
}

/// Incremental writer. The frame count is fixed up front by the header.
pub struct StreamWriter<'a, W: Write> {
    sink: &'a mut W,
    header: StreamHeader,
    written_frames: usize,
    bytes: usize,
}

impl<'a, W: Write> StreamWriter<'a, W> {
    pub fn new(sink: &'a mut W, header: StreamHeader) -> Result<Self> {
        header.validate()?;
        sink.write_all(&header.to_bytes())?;
        Ok(Self {
            sink,
            header,
            written_frames: 0,
            bytes: HEADER_LEN,
        })
    }

    pub fn write_frame(&mut self, frame: &FrameRecord) -> Result<()> {
        if self.written_frames >= self.header.frame_count as usize {
            return Err(StreamError::FrameCountMismatch {
                header: self.header.frame_count,
                actual: self.written_frames + 1,
            });
        }
        let payload = frame.payload_bytes()?;
        self.sink.write_all(&[frame.toc.to_byte()])?;
        self.sink.write_all(&(payload.len() as u16).to_le_bytes())?;
        self.sink.write_all(&payload)?;
        self.written_frames += 1;
        self.bytes += 3 + payload.len();
        Ok(())
    }

    pub fn finish(self) -> Result<usize> {
        if self.written_frames != self.header.frame_count as usize {
            return Err(StreamError::FrameCountMismatch {
                header: self.header.frame_count,
                actual: self.written_frames,
            });
        }
        self.sink.flush()?;
        Ok(self.bytes)
    }
}

/// Incremental reader; iterates over the frames announced in the header.
pub struct StreamReader<'a, R: Read> {
    source: &'a mut R,
    header: StreamHeader,
    remaining: u32,
}

impl<'a, R: Read> StreamReader<'a, R> {
    pub fn new(source: &'a mut R) -> Result<Self> {
        let mut raw = [0u8; HEADER_LEN];
        source.read_exact(&mut raw)?;
        let magic: [u8; 4] = raw[..4].try_into().unwrap();
        if magic != MAGIC {
            return Err(StreamError::BadMagic(magic));
        }
        let header = StreamHeader {
            sample_rate: u32::from_le_bytes(raw[4..8].try_into().unwrap()),
            frame_len: u16::from_le_bytes(raw[8..10].try_into().unwrap()),
            frame_count: u32::from_le_bytes(raw[10..14].try_into().unwrap()),
        };
        header.validate()?;
        Ok(Self {
            source,
            header,
            remaining: header.frame_count,
        })
    }

    pub fn header(&self) -> StreamHeader {
        self.header
    }

    fn read_frame(&mut self) -> Result<FrameRecord> {
        let mut head = [0u8; 3];
        self.source.read_exact(&mut head)?;
        let toc = parse_toc(head[0])?;
        let len = usize::from(u16::from_le_bytes([head[1], head[2]]));
        let expected = toc.category().payload_len();
        if len != expected {
            return Err(StreamError::PayloadMismatch {
                category: toc.category(),
                expected,
                actual: len,
            });
        }
        let mut payload = vec![0u8; len];
        self.source.read_exact(&mut payload)?;
        FrameRecord::from_parts(toc, &payload)
    }
}

impl<R: Read> Iterator for StreamReader<'_, R> {
    type Item = Result<FrameRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let frame = self.read_frame();
        if frame.is_err() {
            self.remaining = 0;
        }
        Some(frame)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn speech_frame() -> FrameRecord {
        FrameRecord {
            toc: Toc::speech(CodingMode::Voice),
            payload: Payload::Speech(SpeechPayload {
                pitch_lag: 80,
                lpc: [0.25; LPC_ORDER],
                pcm: (0..FRAME_LEN as i16).collect(),
            }),
        }
    }

    #[test]
    fn toc_examples() {
        let sid = parse_toc(0x0C).unwrap();
        assert_eq!(sid.coding_mode, CodingMode::Voice);
        assert!(!sid.quality);
        assert_eq!(sid.rate_code(), 12);
        assert_eq!(sid.category(), FrameCategory::Sid);

        let speech = parse_toc(0x10).unwrap();
        assert!(speech.quality);
        assert_eq!(speech.rate_code(), 0);
        assert_eq!(speech.category(), FrameCategory::Speech);

        assert!(matches!(
            parse_toc(0x0F),
            Err(StreamError::InvalidRateCode(15))
        ));
        assert!(matches!(
            parse_toc(0x80),
            Err(StreamError::ReservedBitSet(_))
        ));
        assert!(matches!(
            parse_toc(0x40),
            Err(StreamError::ReservedBitSet(_))
        ));
    }

    #[test]
    fn category_table() {
        let cat = |code| Toc::new(CodingMode::Voice, true, code).unwrap().category();
        assert_eq!(cat(3), FrameCategory::Speech);
        assert_eq!(cat(11), FrameCategory::Speech);
        assert_eq!(cat(13), FrameCategory::NoData);
        assert_eq!(cat(14), FrameCategory::SpeechLost);
        assert!(Toc::new(CodingMode::Voice, true, 15).is_err());
    }

    #[test]
    fn toc_byte_roundtrip_all_valid() {
        let mut count = 0;
        for byte in 0u8..=0x3F {
            match parse_toc(byte) {
                Ok(toc) => {
                    assert_eq!(toc.to_byte(), byte);
                    count += 1;
                }
                Err(StreamError::InvalidRateCode(15)) => assert_eq!(byte & 0x0F, 15),
                Err(e) => panic!("unexpected {e}"),
            }
        }
        // 4 mode/quality combinations x 15 rate codes
        assert_eq!(count, 60);
    }

    #[test]
    fn stream_sizes() {
        let mut buf = Vec::new();
        assert_eq!(
            write_stream(&StreamHeader::new(0), &[], &mut buf).unwrap(),
            14
        );
        assert_eq!(buf.len(), 14);

        let no_data = FrameRecord {
            toc: Toc::no_data(CodingMode::Voice),
            payload: Payload::Empty,
        };
        let mut buf = Vec::new();
        let n = write_stream(&StreamHeader::new(1), &[no_data], &mut buf).unwrap();
        assert_eq!(n, 14 + 3);

        let mut buf = Vec::new();
        let n = write_stream(&StreamHeader::new(1), &[speech_frame()], &mut buf).unwrap();
        assert_eq!(n, 14 + 3 + 706);
        assert_eq!(buf.len(), n);
    }

    #[test]
    fn read_errors() {
        let mut buf = Vec::new();
        write_stream(&StreamHeader::new(1), &[speech_frame()], &mut buf).unwrap();

        let truncated = &buf[..buf.len() - 10];
        assert!(matches!(
            read_stream(&mut &truncated[..]),
            Err(StreamError::TruncatedStream)
        ));

        let mut bad = buf.clone();
        bad[..4].copy_from_slice(b"XXXX");
        assert!(matches!(
            read_stream(&mut &bad[..]),
            Err(StreamError::BadMagic(_))
        ));

        let mut reserved = buf.clone();
        reserved[HEADER_LEN] |= 0x80;
        assert!(matches!(
            read_stream(&mut &reserved[..]),
            Err(StreamError::ReservedBitSet(_))
        ));

        let mut wrong_len = buf.clone();
        wrong_len[HEADER_LEN + 1] = 5;
        assert!(matches!(
            read_stream(&mut &wrong_len[..]),
            Err(StreamError::PayloadMismatch { .. })
        ));

        let mut rate = buf;
        rate[4..8].copy_from_slice(&8000u32.to_le_bytes());
        assert!(matches!(
            read_stream(&mut &rate[..]),
            Err(StreamError::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn write_rejects_mismatched_payload() {
        let wrong = FrameRecord {
            toc: Toc::sid(CodingMode::Voice),
            payload: Payload::Empty,
        };
        let mut buf = Vec::new();
        assert!(matches!(
            write_stream(&StreamHeader::new(1), &[wrong], &mut buf),
            Err(StreamError::PayloadMismatch { .. })
        ));

        let short = FrameRecord {
            toc: Toc::speech(CodingMode::Voice),
            payload: Payload::Speech(SpeechPayload {
                pitch_lag: 0,
                lpc: [0.0; LPC_ORDER],
                pcm: vec![0; 100],
            }),
        };
        assert!(matches!(
            write_stream(&StreamHeader::new(1), &[short], &mut Vec::new()),
            Err(StreamError::PayloadMismatch { .. })
        ));
    }

    #[test]
    fn frame_count_enforced() {
        let mut buf = Vec::new();
        assert!(matches!(
            write_stream(&StreamHeader::new(2), &[speech_frame()], &mut buf),
            Err(StreamError::FrameCountMismatch { .. })
        ));
    }
}
