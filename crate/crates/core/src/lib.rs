//! Decoder-guided downlink voice enhancement.
//!
//! The crate simulates a DTX voice link end to end: an encoder front end
//! ([`uplink`]) turns PCM into a frame stream ([`framestream`]) of speech,
//! SID and NO_DATA frames; the decoder ([`decoder`]) reconstructs PCM with
//! comfort noise and exposes per-frame state. Downstream, noise reduction
//! ([`nr`]) and a multiband dynamic range processor ([`mdrp`]) run either
//! unguided, as a conventional downlink chain would, or steered by the
//! decoder state through [`controller`]. [`metrics`] measures the
//! difference on synthetic vectors from [`signals`].
//!
//! ```
//! use voxguide::{pipeline, signals};
//!
//! let vector = signals::speech_like(2.0, 7);
//! let report = pipeline::compare(
//!     &vector,
//!     &[signals::NoiseKind::White],
//!     10.0,
//!     &pipeline::CompareConfig::default(),
//! )
//! .unwrap();
//! assert_eq!(report.rows.len(), 1);
//! ```

pub mod controller;
pub mod decoder;
pub mod framestream;
pub mod io;
pub mod mdrp;
pub mod metrics;
pub mod nr;
pub mod pipeline;
pub mod signals;
pub mod spectral;
pub mod uplink;

pub use controller::{
    direct, direct_all, ControllerConfig, EnhancementDirective, MdrpCurve, NoiseSource, NrPolicy,
};
pub use decoder::{decode, Decoder, DecoderConfig, DecoderState};
pub use framestream::{
    read_stream, write_stream, CodingMode, FrameCategory, FrameRecord, Payload, StreamError,
    StreamHeader, Toc,
};
pub use mdrp::{DrcCurve, MdrpConfig};
pub use metrics::{MetricsReport, SegmentLabel, SegmentLabels};
pub use nr::{NoiseEstimate, NrConfig, Provenance};
pub use spectral::{BandEnvelope, SpectralFrame};
pub use uplink::{encode, Encoder, EncoderConfig};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error("state misalignment: {hops} hops need {expected} decoder states, got {frames}")]
    StateMisalignment {
        hops: usize,
        expected: usize,
        frames: usize,
    },
    #[error("configuration: {0}")]
    Config(String),
    #[error("unsupported audio: {0}")]
    Format(String),
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("length mismatch: {0} vs {1} samples")]
    LengthMismatch(usize, usize),
    #[error("labels contain no noise-only frames")]
    NoNoiseFrames,
    #[error("labels contain no music frames")]
    NoMusicFrames,
    #[error("invalid signal kind '{0}'")]
    InvalidKind(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// How an enhancement stage is driven.
#[derive(Debug, Clone, Copy)]
pub enum Guidance<'a> {
    /// Conventional processing; no decoder information.
    Unguided,
    /// One directive per 20 ms frame of the input.
    Guided(&'a [EnhancementDirective]),
}

impl<'a> Guidance<'a> {
    /// Checks that the directives cover `hops` analysis hops.
    pub fn directives(self, hops: usize) -> Result<Option<&'a [EnhancementDirective]>, Error> {
        match self {
            Guidance::Unguided => Ok(None),
            Guidance::Guided(d) => {
                let expected = hops.div_ceil(2);
                if d.len() != expected {
                    return Err(Error::StateMisalignment {
                        hops,
                        expected,
                        frames: d.len(),
                    });
                }
                Ok(Some(d))
            }
        }
    }
}
