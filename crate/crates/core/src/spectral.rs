//! Short-time spectral analysis and synthesis shared by every stage.
//!
//! Frames are 320-sample periodic Hann windows at a 160-sample hop,
//! zero-padded to a 512-point FFT. Hop `h` covers samples
//! `[160 h, 160 h + 320)`; a signal of `n` samples yields `ceil(n / 160)`
//! hops so every 20 ms codec frame maps onto exactly two hops.
//!
//! The periodic Hann window sums to one at 50% overlap, so synthesis is a
//! plain overlap-add of the inverse transforms. Only the first 160 samples,
//! which see a single rising half-window, are not reconstructed.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub const WINDOW_LEN: usize = 320;
pub const HOP: usize = 160;
pub const FFT_LEN: usize = 512;
pub const NUM_BINS: usize = FFT_LEN / 2 + 1;
pub const NUM_BANDS: usize = 20;

/// Floor added before every log conversion.
pub const LOG_EPS: f64 = 1e-12;

/// First bin of each envelope band; band `j` spans
/// `BAND_STARTS[j]..BAND_STARTS[j + 1]` with 257 as the final end.
///
/// 16 bands of 13 bins, then 12, 12, 12 and 13.
pub const BAND_STARTS: [usize; NUM_BANDS] = [
    0, 13, 26, 39, 52, 65, 78, 91, 104, 117, 130, 143, 156, 169, 182, 195, 208, 220, 232, 244,
];

pub fn band_range(band: usize) -> std::ops::Range<usize> {
    let end = BAND_STARTS.get(band + 1).copied().unwrap_or(NUM_BINS);
    BAND_STARTS[band]..end
}

/// Band containing `bin`.
pub fn band_of(bin: usize) -> usize {
    BAND_STARTS.partition_point(|&start| start <= bin) - 1
}

struct Tables {
    window: Vec<f64>,
    sqrt_window: Vec<f64>,
    window_energy: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let window: Vec<f64> = (0..WINDOW_LEN)
            .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / WINDOW_LEN as f64).cos())
            .collect();
        let sqrt_window = window.iter().map(|w| w.sqrt()).collect();
        let window_energy = window.iter().map(|w| w * w).sum();
        let mut planner = FftPlanner::new();
        Tables {
            window,
            sqrt_window,
            window_energy,
            forward: planner.plan_fft_forward(FFT_LEN),
            inverse: planner.plan_fft_inverse(FFT_LEN),
        }
    })
}

/// Periodic Hann analysis window.
pub fn window() -> &'static [f64] {
    &tables().window
}

/// Sum of squared window coefficients (120 for the periodic Hann).
///
/// Dividing a periodogram bin by this gives the per-sample power of a
/// stationary white signal, which is how levels are expressed in dBFS.
pub fn window_energy() -> f64 {
    tables().window_energy
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFrame {
    pub bins: Vec<Complex64>,
    pub power: Vec<f64>,
    pub hop_index: usize,
}

impl SpectralFrame {
    pub fn from_bins(bins: Vec<Complex64>, hop_index: usize) -> Self {
        let power = bins.iter().map(|c| c.norm_sqr()).collect();
        Self {
            bins,
            power,
            hop_index,
        }
    }

    pub fn zeros(hop_index: usize) -> Self {
        Self::from_bins(vec![Complex64::new(0.0, 0.0); NUM_BINS], hop_index)
    }

    /// Multiplies every bin by its gain and refreshes `power`.
    pub fn apply_gains(&mut self, gains: &[f64]) {
        for ((bin, power), &g) in self.bins.iter_mut().zip(&mut self.power).zip(gains) {
            *bin *= g;
            *power = bin.norm_sqr();
        }
    }

    /// Mean-square level of the hop in dBFS, via Parseval over the full
    /// two-sided spectrum and normalized by the window energy.
    pub fn level_dbfs(&self) -> f64 {
        let p = &self.power;
        let two_sided: f64 = p[0] + p[NUM_BINS - 1] + 2.0 * p[1..NUM_BINS - 1].iter().sum::<f64>();
        let mean_square = two_sided / (FFT_LEN as f64 * window_energy());
        10.0 * (mean_square + LOG_EPS).log10()
    }
}

/// Number of hops produced for a signal of `len` samples.
pub fn hop_count(len: usize) -> usize {
    len.div_ceil(HOP)
}

pub fn analyze(samples: &[f64]) -> Vec<SpectralFrame> {
    let t = tables();
    let mut buf = vec![Complex64::new(0.0, 0.0); FFT_LEN];
    (0..hop_count(samples.len()))
        .map(|h| {
            let start = h * HOP;
            buf.fill(Complex64::new(0.0, 0.0));
            for (n, w) in t.window.iter().enumerate() {
                if let Some(&x) = samples.get(start + n) {
                    buf[n] = Complex64::new(x * w, 0.0);
                }
            }
            t.forward.process(&mut buf);
            SpectralFrame::from_bins(buf[..NUM_BINS].to_vec(), h)
        })
        .collect()
}

fn inverse_real(bins: &[Complex64], buf: &mut [Complex64]) {
    buf[..NUM_BINS].copy_from_slice(bins);
    buf[0].im = 0.0;
    buf[NUM_BINS - 1].im = 0.0;
    for k in 1..NUM_BINS - 1 {
        buf[FFT_LEN - k] = bins[k].conj();
    }
    tables().inverse.process(buf);
    let scale = 1.0 / FFT_LEN as f64;
    for c in buf.iter_mut() {
        *c *= scale;
    }
}

/// Overlap-add of analysis frames. Output length is `frames.len() * 160`.
pub fn synthesize(frames: &[SpectralFrame]) -> Vec<f64> {
    let mut ola = OverlapAdd::new(SynthesisWindow::Rectangular);
    frames.iter().flat_map(|f| ola.push(f)).collect()
}

/// Overlap-add for spectra that were not produced by [`analyze`], such as
/// random-phase comfort noise.
pub fn synthesize_uncorrelated(frames: &[SpectralFrame]) -> Vec<f64> {
    let mut ola = OverlapAdd::new(SynthesisWindow::SqrtHann);
    frames.iter().flat_map(|f| ola.push(f)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthesisWindow {
    /// For analysis spectra, which already carry the Hann window.
    Rectangular,
    /// Square-root Hann: its squares sum to one at 50% overlap, so
    /// mutually uncorrelated frames keep their per-sample power.
    SqrtHann,
}

/// Streaming overlap-add: each pushed hop completes 160 output samples.
#[derive(Debug, Clone)]
pub struct OverlapAdd {
    window: SynthesisWindow,
    tail: Vec<f64>,
    buf: Vec<Complex64>,
}

impl OverlapAdd {
    pub fn new(window: SynthesisWindow) -> Self {
        Self {
            window,
            tail: vec![0.0; HOP],
            buf: vec![Complex64::new(0.0, 0.0); FFT_LEN],
        }
    }

    pub fn push(&mut self, frame: &SpectralFrame) -> Vec<f64> {
        inverse_real(&frame.bins, &mut self.buf);
        let mut segment: Vec<f64> = self.buf[..WINDOW_LEN].iter().map(|c| c.re).collect();
        if self.window == SynthesisWindow::SqrtHann {
            for (s, w) in segment.iter_mut().zip(&tables().sqrt_window) {
                *s *= w;
            }
        }
        let out = self
            .tail
            .iter()
            .zip(&segment[..HOP])
            .map(|(a, b)| a + b)
            .collect();
        self.tail.copy_from_slice(&segment[HOP..]);
        out
    }

    pub fn reset(&mut self) {
        self.tail.fill(0.0);
    }
}

/// Per-band log energies of a power spectrum, in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandEnvelope {
    pub energies_db: [f64; NUM_BANDS],
}

impl BandEnvelope {
    pub fn flat(db: f64) -> Self {
        Self {
            energies_db: [db; NUM_BANDS],
        }
    }

    pub fn floor() -> Self {
        Self::flat(10.0 * LOG_EPS.log10())
    }
}

pub fn band_energies(power: &[f64]) -> BandEnvelope {
    debug_assert_eq!(power.len(), NUM_BINS);
    let mut energies_db = [0.0; NUM_BANDS];
    for (band, e) in energies_db.iter_mut().enumerate() {
        let range = band_range(band);
        let n = range.len() as f64;
        let mean = power[range].iter().sum::<f64>() / n;
        *e = 10.0 * (mean + LOG_EPS).log10();
    }
    BandEnvelope { energies_db }
}

/// Piecewise-constant per-bin PSD from a band envelope.
pub fn expand_envelope(env: &BandEnvelope) -> Vec<f64> {
    let mut psd = vec![0.0; NUM_BINS];
    for (band, &db) in env.energies_db.iter().enumerate() {
        let value = 10f64.powf(db / 10.0);
        psd[band_range(band)].fill(value);
    }
    psd
}

/// Periodogram scaled to per-sample power (see [`window_energy`]).
pub fn normalized_power(power: &[f64]) -> Vec<f64> {
    let scale = 1.0 / window_energy();
    power.iter().map(|p| p * scale).collect()
}
