//! Pure signal-processing kernels for birdsong feature extraction.
//!
//! Everything in this crate is a deterministic function of its inputs:
//! no I/O, no global state, safe to call concurrently. The kernels cover
//! the radix-2 FFT, Hann-windowed STFT, HTK mel filterbank, MFCCs with
//! delta features, spectral shape descriptors, frame energy statistics,
//! and the 12-pitch-class chromagram.

pub mod chroma;
pub mod fft;
pub mod mel;
pub mod mfcc;
pub mod spectral;
pub mod stft;

pub use chroma::{chromagram, pitch_class, Chromagram, PITCH_CLASS_A, PITCH_CLASS_NAMES};
pub use fft::{fft, ifft, Complex};
pub use mel::{mel_filterbank, mel_spectrogram};
pub use mfcc::{delta, mfcc, MfccMatrix};
pub use spectral::{rms, spectral_bandwidth, spectral_centroid, spectral_rolloff, zcr};
pub use stft::{stft, Spectrogram, Waveform};

/// Errors raised by the DSP kernels.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DspError {
    #[error("fft length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("waveform is empty")]
    EmptyWaveform,
    #[error("sample rate must be positive")]
    ZeroSampleRate,
    #[error("hop must be >= 1")]
    ZeroHop,
    #[error("{n_mels} mel bands cannot be filled from {bins} spectrum bins")]
    MelResolution { n_mels: usize, bins: usize },
    #[error("rolloff ratio {0} outside (0, 1]")]
    BadRolloffRatio(f64),
    #[error("frame is empty")]
    EmptyFrame,
    #[error("zero-crossing rate needs at least 2 samples, got {0}")]
    FrameTooShort(usize),
}
