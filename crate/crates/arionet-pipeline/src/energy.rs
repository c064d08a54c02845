//! Frame-level energy masking: drop spectrogram frames whose mean mel
//! energy falls below a fraction of the peak frame's, then project the
//! surviving frames back onto the waveform.

use arionet_dsp::Waveform;

/// Per-frame keep/drop decisions with the threshold that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyMask {
    pub keep: Vec<bool>,
    /// Absolute threshold: `peak * ratio`.
    pub threshold: f64,
    /// Highest per-frame mean energy observed.
    pub peak: f64,
}

impl EnergyMask {
    pub fn kept_frames(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }
}

/// Mean energy per frame over the mel bands, thresholded at
/// `ratio` of the peak frame. An all-zero input keeps every frame
/// (peak 0 gives threshold 0).
pub fn frame_energy_mask(mel: &[Vec<f64>], ratio: f64) -> EnergyMask {
    let frames = mel.first().map_or(0, |row| row.len());
    let bands = mel.len().max(1) as f64;
    let means: Vec<f64> = (0..frames)
        .map(|t| mel.iter().map(|row| row[t]).sum::<f64>() / bands)
        .collect();
    let peak = means.iter().cloned().fold(0.0, f64::max);
    let threshold = peak * ratio;
    EnergyMask {
        keep: means.iter().map(|&m| m >= threshold).collect(),
        threshold,
        peak,
    }
}

/// Keep every sample covered by at least one kept frame's
/// [start, start + n_fft) span and concatenate the survivors in order.
pub fn mask_to_waveform(
    mask: &EnergyMask,
    hop: usize,
    n_fft: usize,
    w: &Waveform,
) -> Waveform {
    let len = w.samples.len();
    let mut keep_sample = vec![false; len];
    for (frame, &keep) in mask.keep.iter().enumerate() {
        if !keep {
            continue;
        }
        let start = frame * hop;
        let end = (start + n_fft).min(len);
        for flag in &mut keep_sample[start.min(len)..end] {
            *flag = true;
        }
    }
    let samples: Vec<f64> = w
        .samples
        .iter()
        .zip(&keep_sample)
        .filter_map(|(&s, &k)| k.then_some(s))
        .collect();
    Waveform {
        samples,
        sample_rate: w.sample_rate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mel_with_means(means: &[f64]) -> Vec<Vec<f64>> {
        // Two bands whose average equals the requested per-frame mean.
        vec![
            means.iter().map(|m| m * 2.0).collect(),
            vec![0.0; means.len()],
        ]
    }

    #[test]
    fn hand_case_drops_exactly_the_quiet_frame() {
        let mel = mel_with_means(&[10.0, 0.4, 5.0]);
        let mask = frame_energy_mask(&mel, 0.05);
        assert_eq!(mask.keep, vec![true, false, true]);
        assert_eq!(mask.peak, 10.0);
        assert_eq!(mask.threshold, 0.5);
        // ratio 0.05 equals the 1/20 rule exactly.
        assert_eq!(mask.threshold, mask.peak / 20.0);
    }

    #[test]
    fn equal_frames_all_kept() {
        let mask = frame_energy_mask(&mel_with_means(&[3.0, 3.0, 3.0]), 0.05);
        assert_eq!(mask.keep, vec![true, true, true]);
    }

    #[test]
    fn single_frame_is_its_own_peak() {
        let mask = frame_energy_mask(&mel_with_means(&[0.001]), 0.05);
        assert_eq!(mask.keep, vec![true]);
    }

    #[test]
    fn all_zero_mel_keeps_everything() {
        let mask = frame_energy_mask(&vec![vec![0.0; 4]; 8], 0.05);
        assert_eq!(mask.keep, vec![true; 4]);
        assert_eq!(mask.threshold, 0.0);
    }

    #[test]
    fn projection_all_kept_is_identity() {
        let w = Waveform::new((0..100).map(|i| i as f64).collect(), 22050).unwrap();
        let mask = EnergyMask {
            keep: vec![true; 3],
            threshold: 0.0,
            peak: 1.0,
        };
        let out = mask_to_waveform(&mask, 32, 64, &w);
        assert_eq!(out.samples, w.samples);
    }

    #[test]
    fn projection_none_kept_is_empty() {
        let w = Waveform::new(vec![1.0; 100], 22050).unwrap();
        let mask = EnergyMask {
            keep: vec![false; 3],
            threshold: 1.0,
            peak: 1.0,
        };
        let out = mask_to_waveform(&mask, 32, 64, &w);
        assert!(out.samples.is_empty());
    }

    #[test]
    fn non_overlapping_first_frame_keeps_first_span_only() {
        let w = Waveform::new((0..192).map(|i| i as f64).collect(), 22050).unwrap();
        let mask = EnergyMask {
            keep: vec![true, false, false],
            threshold: 0.5,
            peak: 1.0,
        };
        let out = mask_to_waveform(&mask, 64, 64, &w);
        assert_eq!(out.samples, (0..64).map(|i| i as f64).collect::<Vec<_>>());
    }
}
