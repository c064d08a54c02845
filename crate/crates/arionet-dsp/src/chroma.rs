//! Chromagram: spectral energy folded onto the 12 pitch classes.

use crate::stft::Spectrogram;

/// Pitch classes indexed 0..12 as C, C#, D, ..., A#, B. A4 lands on 9.
pub const PITCH_CLASS_NAMES: [&str; 12] = [
    "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B",
];

/// Index of pitch class A.
pub const PITCH_CLASS_A: usize = 9;

/// Bins below this frequency carry no defined pitch and are skipped.
pub const MIN_PITCHED_HZ: f64 = 20.0;

/// 12 x T matrix of per-frame pitch-class energies.
#[derive(Debug, Clone, PartialEq)]
pub struct Chromagram {
    /// Always 12 rows; `energies[pitch_class][frame]`.
    pub energies: Vec<Vec<f64>>,
    /// True once each column has been divided by its maximum.
    pub normalized: bool,
}

impl Chromagram {
    pub fn from_rows(energies: Vec<Vec<f64>>, normalized: bool) -> Self {
        assert_eq!(energies.len(), 12, "chromagram must have 12 rows");
        let cols = energies[0].len();
        assert!(energies.iter().all(|row| row.len() == cols));
        Chromagram {
            energies,
            normalized,
        }
    }

    pub fn zeros(frames: usize) -> Self {
        Chromagram {
            energies: vec![vec![0.0; frames]; 12],
            normalized: false,
        }
    }

    pub fn num_frames(&self) -> usize {
        self.energies[0].len()
    }

    pub fn column(&self, t: usize) -> [f64; 12] {
        let mut col = [0.0; 12];
        for (k, row) in self.energies.iter().enumerate() {
            col[k] = row[t];
        }
        col
    }

    /// Pitch class with the highest energy in frame `t`; ties go to the
    /// lowest class index.
    pub fn argmax_class(&self, t: usize) -> usize {
        let mut best = 0;
        for k in 1..12 {
            if self.energies[k][t] > self.energies[best][t] {
                best = k;
            }
        }
        best
    }
}

/// Pitch class of a frequency relative to the A4 reference:
/// round(12 * log2(f / ref) + 69) mod 12.
pub fn pitch_class(freq: f64, ref_a4: f64) -> usize {
    let midi = (12.0 * (freq / ref_a4).log2() + 69.0).round() as i64;
    midi.rem_euclid(12) as usize
}

/// Fold a magnitude spectrogram onto the 12 pitch classes and normalize
/// each column by its maximum (zero columns are left untouched).
pub fn chromagram(s: &Spectrogram, ref_a4: f64) -> Chromagram {
    let frames = s.num_frames();
    let mut energies = vec![vec![0.0; frames]; 12];
    for (f, row) in s.magnitudes.iter().enumerate() {
        let freq = s.bin_freqs[f];
        if freq < MIN_PITCHED_HZ {
            continue;
        }
        let class = pitch_class(freq, ref_a4);
        for (t, &m) in row.iter().enumerate() {
            energies[class][t] += m;
        }
    }

    for t in 0..frames {
        let max = (0..12).map(|k| energies[k][t]).fold(0.0, f64::max);
        if max > 0.0 {
            for row in energies.iter_mut() {
                row[t] /= max;
            }
        }
    }

    Chromagram {
        energies,
        normalized: true,
    }
}
