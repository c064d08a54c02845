//! Spectral shape descriptors and frame-level energy statistics.
//!
//! Zero-energy frames yield 0 for centroid, bandwidth, and rolloff.

use crate::stft::Spectrogram;
use crate::DspError;

/// Spectral centroid per frame, in Hz.
pub fn spectral_centroid(s: &Spectrogram) -> Vec<f64> {
    (0..s.num_frames())
        .map(|t| {
            let mut num = 0.0;
            let mut den = 0.0;
            for (f, row) in s.magnitudes.iter().enumerate() {
                num += s.bin_freqs[f] * row[t];
                den += row[t];
            }
            if den == 0.0 {
                0.0
            } else {
                num / den
            }
        })
        .collect()
}

/// Spectral bandwidth per frame: magnitude-weighted standard deviation
/// around the centroid, in Hz.
pub fn spectral_bandwidth(s: &Spectrogram) -> Vec<f64> {
    let centroid = spectral_centroid(s);
    (0..s.num_frames())
        .map(|t| {
            let mut num = 0.0;
            let mut den = 0.0;
            for (f, row) in s.magnitudes.iter().enumerate() {
                let d = s.bin_freqs[f] - centroid[t];
                num += d * d * row[t];
                den += row[t];
            }
            if den == 0.0 {
                0.0
            } else {
                (num / den).sqrt()
            }
        })
        .collect()
}

/// Rolloff frequency per frame: the smallest bin frequency below which
/// `ratio` of the total magnitude is concentrated.
pub fn spectral_rolloff(s: &Spectrogram, ratio: f64) -> Result<Vec<f64>, DspError> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(DspError::BadRolloffRatio(ratio));
    }
    Ok((0..s.num_frames())
        .map(|t| {
            let total: f64 = s.magnitudes.iter().map(|row| row[t]).sum();
            if total == 0.0 {
                return 0.0;
            }
            let target = ratio * total;
            let mut cum = 0.0;
            for (f, row) in s.magnitudes.iter().enumerate() {
                cum += row[t];
                if cum >= target {
                    return s.bin_freqs[f];
                }
            }
            *s.bin_freqs.last().unwrap()
        })
        .collect())
}

/// Root mean square of a sample frame.
pub fn rms(frame: &[f64]) -> Result<f64, DspError> {
    if frame.is_empty() {
        return Err(DspError::EmptyFrame);
    }
    let sq: f64 = frame.iter().map(|x| x * x).sum();
    Ok((sq / frame.len() as f64).sqrt())
}

/// Zero-crossing rate: fraction of adjacent sample pairs with a strict
/// sign flip.
pub fn zcr(frame: &[f64]) -> Result<f64, DspError> {
    if frame.len() < 2 {
        return Err(DspError::FrameTooShort(frame.len()));
    }
    let crossings = frame.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
    Ok(crossings as f64 / (frame.len() - 1) as f64)
}
