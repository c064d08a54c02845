//! Waveform framing and the short-time Fourier transform.

use crate::fft::{fft_in_place, Complex};
use crate::DspError;

/// Mono audio samples at a known sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    /// Amplitudes, nominally in [-1, 1].
    pub samples: Vec<f64>,
    /// Sample rate in Hz.
    pub sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, DspError> {
        if samples.is_empty() {
            return Err(DspError::EmptyWaveform);
        }
        if sample_rate == 0 {
            return Err(DspError::ZeroSampleRate);
        }
        Ok(Waveform {
            samples,
            sample_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Magnitude spectrogram: `magnitudes[f][t]` for bin `f`, frame `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    /// F x T non-negative magnitudes, F = n_fft/2 + 1.
    pub magnitudes: Vec<Vec<f64>>,
    /// Bin center frequencies in Hz, strictly ascending.
    pub bin_freqs: Vec<f64>,
    /// Frame center times in seconds.
    pub frame_times: Vec<f64>,
}

impl Spectrogram {
    pub fn num_bins(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn num_frames(&self) -> usize {
        self.magnitudes.first().map_or(0, |row| row.len())
    }
}

/// Periodic Hann window of length `n`.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 * (1.0 - (std::f64::consts::TAU * i as f64 / n as f64).cos()))
        .collect()
}

/// Number of STFT frames for a waveform of `len` samples.
///
/// No center padding: frames start at multiples of `hop` and must fit
/// entirely inside the signal. A signal shorter than `n_fft` yields one
/// zero-padded frame.
pub fn num_frames(len: usize, n_fft: usize, hop: usize) -> usize {
    if len < n_fft {
        1
    } else {
        1 + (len - n_fft) / hop
    }
}

/// Hann-windowed magnitude STFT.
pub fn stft(w: &Waveform, n_fft: usize, hop: usize) -> Result<Spectrogram, DspError> {
    if w.samples.is_empty() {
        return Err(DspError::EmptyWaveform);
    }
    if !n_fft.is_power_of_two() || n_fft == 0 {
        return Err(DspError::NotPowerOfTwo(n_fft));
    }
    if hop == 0 {
        return Err(DspError::ZeroHop);
    }

    let n_bins = n_fft / 2 + 1;
    let frames = num_frames(w.samples.len(), n_fft, hop);
    let window = hann_window(n_fft);

    let mut magnitudes = vec![vec![0.0; frames]; n_bins];
    let mut buf = vec![Complex::default(); n_fft];
    for t in 0..frames {
        let start = t * hop;
        for (i, slot) in buf.iter_mut().enumerate() {
            let sample = w.samples.get(start + i).copied().unwrap_or(0.0);
            *slot = Complex::new(sample * window[i], 0.0);
        }
        fft_in_place(&mut buf, false);
        for (f, row) in magnitudes.iter_mut().enumerate() {
            row[t] = buf[f].abs();
        }
    }

    let sr = w.sample_rate as f64;
    let bin_freqs = (0..n_bins).map(|f| f as f64 * sr / n_fft as f64).collect();
    let frame_times = (0..frames)
        .map(|t| (t * hop + n_fft / 2) as f64 / sr)
        .collect();

    Ok(Spectrogram {
        magnitudes,
        bin_freqs,
        frame_times,
    })
}
