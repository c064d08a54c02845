//! Minimal RIFF/WAVE codec: PCM 16-bit and 32-bit float decode for mono
//! or stereo, PCM 16-bit mono encode, and a linear resampler.

use arionet_dsp::Waveform;
use std::io::Write;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum WavError {
    #[error("missing RIFF header")]
    MissingRiff,
    #[error("RIFF form is not WAVE")]
    NotWave,
    #[error("missing \"{0}\" chunk")]
    MissingChunk(&'static str),
    #[error("\"{0}\" chunk truncated")]
    TruncatedChunk(&'static str),
    #[error("\"{chunk}\" chunk malformed: {reason}")]
    BadChunk {
        chunk: &'static str,
        reason: String,
    },
    #[error("unsupported encoding: format tag {format}, {bits} bits (PCM16 or float32 only)")]
    UnsupportedFormat { format: u16, bits: u16 },
    #[error("unsupported channel count {0} (mono or stereo only)")]
    UnsupportedChannels(u16),
    #[error("audio payload is empty")]
    EmptyAudio,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

struct Fmt {
    format: u16,
    channels: u16,
    sample_rate: u32,
    bits: u16,
}

/// Decode WAV bytes to a mono waveform; stereo channels are averaged.
pub fn decode_wav_bytes(bytes: &[u8]) -> Result<Waveform, WavError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" {
        return Err(WavError::MissingRiff);
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(WavError::NotWave);
    }

    let mut fmt: Option<Fmt> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12usize;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_start = pos + 8;
        match id {
            b"fmt " => {
                if body_start + size > bytes.len() || size < 16 {
                    return Err(WavError::TruncatedChunk("fmt "));
                }
                let b = &bytes[body_start..body_start + size];
                fmt = Some(Fmt {
                    format: u16::from_le_bytes([b[0], b[1]]),
                    channels: u16::from_le_bytes([b[2], b[3]]),
                    sample_rate: u32::from_le_bytes([b[4], b[5], b[6], b[7]]),
                    bits: u16::from_le_bytes([b[14], b[15]]),
                });
            }
            b"data" => {
                if body_start + size > bytes.len() {
                    return Err(WavError::TruncatedChunk("data"));
                }
                data = Some(&bytes[body_start..body_start + size]);
            }
            _ => {
                if body_start + size > bytes.len() {
                    return Err(WavError::TruncatedChunk("unknown"));
                }
            }
        }
        pos = body_start + size + (size & 1);
    }

    let fmt = fmt.ok_or(WavError::MissingChunk("fmt "))?;
    let data = data.ok_or(WavError::MissingChunk("data"))?;

    if fmt.channels == 0 || fmt.channels > 2 {
        return Err(WavError::UnsupportedChannels(fmt.channels));
    }
    let interleaved: Vec<f64> = match (fmt.format, fmt.bits) {
        (1, 16) => {
            if data.len() % 2 != 0 {
                return Err(WavError::BadChunk {
                    chunk: "data",
                    reason: "odd byte count for 16-bit samples".into(),
                });
            }
            data.chunks_exact(2)
                .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / 32768.0)
                .collect()
        }
        (3, 32) => {
            if data.len() % 4 != 0 {
                return Err(WavError::BadChunk {
                    chunk: "data",
                    reason: "byte count not a multiple of 4 for float samples".into(),
                });
            }
            data.chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                .collect()
        }
        (format, bits) => return Err(WavError::UnsupportedFormat { format, bits }),
    };

    let samples: Vec<f64> = if fmt.channels == 2 {
        if !interleaved.len().is_multiple_of(2) {
            return Err(WavError::BadChunk {
                chunk: "data",
                reason: "stereo stream with an odd sample count".into(),
            });
        }
        interleaved
            .chunks_exact(2)
            .map(|pair| 0.5 * (pair[0] + pair[1]))
            .collect()
    } else {
        interleaved
    };
    if samples.is_empty() {
        return Err(WavError::EmptyAudio);
    }
    Ok(Waveform {
        samples,
        sample_rate: fmt.sample_rate,
    })
}

pub fn decode_wav(path: &Path) -> Result<Waveform, WavError> {
    let bytes = std::fs::read(path)?;
    decode_wav_bytes(&bytes)
}

/// PCM 16-bit mono WAV bytes.
pub fn encode_wav_mono16(samples: &[f64], sample_rate: u32) -> Vec<u8> {
    let data_len = samples.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_wav_mono16(samples: &[f64], sample_rate: u32, path: &Path) -> Result<(), WavError> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(&encode_wav_mono16(samples, sample_rate))?;
    Ok(())
}

/// Linear-interpolation resample. Identity when rates already match.
pub fn resample_linear(w: &Waveform, target: u32) -> Waveform {
    if w.sample_rate == target || w.samples.len() < 2 {
        return Waveform {
            samples: w.samples.clone(),
            sample_rate: target,
        };
    }
    let ratio = w.sample_rate as f64 / target as f64;
    let n_out = (((w.samples.len() - 1) as f64 / ratio).floor() as usize) + 1;
    let samples = (0..n_out)
        .map(|i| {
            let pos = i as f64 * ratio;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(w.samples.len() - 1);
            let frac = pos - lo as f64;
            w.samples[lo] * (1.0 - frac) + w.samples[hi] * frac
        })
        .collect();
    Waveform {
        samples,
        sample_rate: target,
    }
}
