//! Fixtures shared by the benchmarks.

use voxguide::pipeline::{f64_to_pcm, transcode, CompareConfig, Transcoded};
use voxguide::signals::{self, NoiseKind};

/// Seconds of audio per benchmark input.
pub const SECONDS: f64 = 2.0;

/// Speech-like vector in white noise at 10 dB, as 16-bit PCM.
pub fn noisy_speech() -> Vec<i16> {
    let clean = signals::speech_like(SECONDS, 7);
    f64_to_pcm(&signals::add_noise(&clean, NoiseKind::White, 10.0, 1))
}

/// The DTX link output for [`noisy_speech`].
pub fn link() -> Transcoded {
    transcode(&noisy_speech(), true, &CompareConfig::default()).expect("transcode")
}
