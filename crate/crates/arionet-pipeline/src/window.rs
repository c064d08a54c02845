//! Dataset-level window sizing and non-overlapping segmentation.

use crate::PipelineError;
use arionet_dsp::Waveform;

/// Window size in samples: the minimum effective (post-mask) recording
/// length across the dataset, unless overridden.
pub fn compute_window_size(
    effective_lengths: &[usize],
    overridden: Option<usize>,
) -> Result<usize, PipelineError> {
    if let Some(w) = overridden {
        if w == 0 {
            return Err(PipelineError::ZeroWindow);
        }
        return Ok(w);
    }
    effective_lengths
        .iter()
        .copied()
        .min()
        .filter(|&w| w > 0)
        .ok_or(PipelineError::EmptyDataset)
}

/// Split into floor(len / window) non-overlapping windows; the trailing
/// remainder is discarded.
pub fn segment_windows(w: &Waveform, window: usize) -> Result<Vec<Waveform>, PipelineError> {
    if window == 0 {
        return Err(PipelineError::ZeroWindow);
    }
    Ok(w
        .samples
        .chunks_exact(window)
        .map(|chunk| Waveform {
            samples: chunk.to_vec(),
            sample_rate: w.sample_rate,
        })
        .collect())
}
