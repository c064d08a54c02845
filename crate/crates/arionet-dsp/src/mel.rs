//! HTK mel scale and triangular filterbank.

use crate::stft::Spectrogram;
use crate::DspError;

/// HTK mel scale: mel(f) = 2595 * log10(1 + f/700).
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular mel filterbank, `n_mels` rows over the given bin frequencies.
///
/// Filters span [0, f_max] on the mel scale, f_max conventionally sr/2.
/// Every row is non-negative and is guaranteed to touch at least one bin;
/// if the requested resolution is too fine for the spectrum an error is
/// returned.
pub fn mel_filterbank(
    n_mels: usize,
    bin_freqs: &[f64],
    f_max: f64,
) -> Result<Vec<Vec<f64>>, DspError> {
    if n_mels == 0 || bin_freqs.is_empty() {
        return Err(DspError::MelResolution {
            n_mels,
            bins: bin_freqs.len(),
        });
    }
    let mel_max = hz_to_mel(f_max);
    // n_mels + 2 edge points, evenly spaced in mel.
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_max * i as f64 / (n_mels + 1) as f64))
        .collect();

    let mut bank = vec![vec![0.0; bin_freqs.len()]; n_mels];
    for (m, row) in bank.iter_mut().enumerate() {
        let (lo, center, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        for (f, &freq) in bin_freqs.iter().enumerate() {
            let w = if freq <= lo || freq >= hi {
                0.0
            } else if freq <= center {
                (freq - lo) / (center - lo)
            } else {
                (hi - freq) / (hi - center)
            };
            row[f] = w.max(0.0);
        }
    }

    if bank.iter().any(|row| row.iter().all(|&w| w == 0.0)) {
        return Err(DspError::MelResolution {
            n_mels,
            bins: bin_freqs.len(),
        });
    }
    Ok(bank)
}

/// Mel spectrogram: each band is a triangular weighted sum of the power
/// spectrum (squared magnitudes). Returns an `n_mels` x T matrix.
pub fn mel_spectrogram(s: &Spectrogram, n_mels: usize) -> Result<Vec<Vec<f64>>, DspError> {
    let f_max = s.bin_freqs.last().copied().unwrap_or(0.0);
    let bank = mel_filterbank(n_mels, &s.bin_freqs, f_max)?;
    let frames = s.num_frames();
    let mut out = vec![vec![0.0; frames]; n_mels];
    for (m, row) in out.iter_mut().enumerate() {
        for (f, &w) in bank[m].iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let mags = &s.magnitudes[f];
            for (t, slot) in row.iter_mut().enumerate() {
                *slot += w * mags[t] * mags[t];
            }
        }
    }
    Ok(out)
}
