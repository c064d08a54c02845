//! Per-segment feature assembly and the dataset-level extraction driver.

use crate::energy::{frame_energy_mask, mask_to_waveform};
use crate::store::FeatureStore;
use crate::window::{compute_window_size, segment_windows};
use crate::PipelineError;
use arionet_dsp::{
    chromagram, mel_spectrogram, mfcc, rms, spectral_bandwidth, spectral_centroid,
    spectral_rolloff, stft, zcr, Chromagram, Waveform,
};
use arionet_rng::Rng;
use rayon::prelude::*;

/// Length of the per-segment summary vector:
/// 13 MFCC + 13 delta + 13 delta-delta means, then centroid, bandwidth,
/// rolloff, RMS, and ZCR means.
pub const SUMMARY_DIM: usize = 44;

/// DSP and selection parameters for one extraction run.
#[derive(Debug, Clone)]
pub struct ExtractConfig {
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub energy_ratio: f64,
    pub chroma_min_frames: usize,
    pub rolloff_ratio: f64,
    pub ref_a4: f64,
    pub window_override: Option<usize>,
    pub cap_per_species: Option<usize>,
    pub seed: u64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            n_fft: 2048,
            hop: 512,
            n_mels: 128,
            energy_ratio: 0.05,
            chroma_min_frames: 13,
            rolloff_ratio: 0.85,
            ref_a4: 440.0,
            window_override: None,
            cap_per_species: None,
            seed: 0,
        }
    }
}

/// One feature-store record: the 44-entry summary plus the chromagram.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentFeatures {
    pub species_id: u32,
    pub segment_id: u32,
    pub summary: Vec<f64>,
    pub chroma: Chromagram,
}

/// A decoded recording paired with its species label.
pub struct RecordingInput {
    pub waveform: Waveform,
    pub species: String,
}

/// Extraction counters for operator-facing reporting.
#[derive(Debug, Clone, Default)]
pub struct ExtractionSummary {
    /// Window size used (samples).
    pub window: usize,
    /// Kept windows per surviving species, in label-table order.
    pub windows_per_species: Vec<(String, usize)>,
    /// Segments skipped for falling under the chroma frame minimum.
    pub skipped_segments: usize,
    /// Species that ended with zero valid windows.
    pub excluded_species: Vec<String>,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Features of one windowed segment, or `None` when the segment cannot
/// produce `chroma_min_frames` chromagram frames. The chromagram is
/// computed first so the skip decision happens before any other work.
pub fn extract_segment(
    seg: &Waveform,
    cfg: &ExtractConfig,
) -> Result<Option<(Vec<f64>, Chromagram)>, PipelineError> {
    let spec = stft(seg, cfg.n_fft, cfg.hop)?;
    let chroma = chromagram(&spec, cfg.ref_a4);
    if chroma.num_frames() < cfg.chroma_min_frames {
        return Ok(None);
    }

    let mel = mel_spectrogram(&spec, cfg.n_mels)?;
    let cepstra = mfcc(&mel);
    let centroid = spectral_centroid(&spec);
    let bandwidth = spectral_bandwidth(&spec);
    let rolloff = spectral_rolloff(&spec, cfg.rolloff_ratio)?;

    // Frame-level RMS/ZCR over the same framing as the STFT, without
    // zero padding (the tail frame is truncated at the signal edge).
    let frames = spec.num_frames();
    let mut rms_vals = Vec::with_capacity(frames);
    let mut zcr_vals = Vec::with_capacity(frames);
    for t in 0..frames {
        let start = (t * cfg.hop).min(seg.samples.len());
        let end = (start + cfg.n_fft).min(seg.samples.len());
        let frame = &seg.samples[start..end];
        rms_vals.push(rms(frame)?);
        zcr_vals.push(zcr(frame)?);
    }

    let mut summary = Vec::with_capacity(SUMMARY_DIM);
    for row in &cepstra.coeffs {
        summary.push(mean(row));
    }
    for row in &cepstra.delta {
        summary.push(mean(row));
    }
    for row in &cepstra.delta2 {
        summary.push(mean(row));
    }
    summary.push(mean(&centroid));
    summary.push(mean(&bandwidth));
    summary.push(mean(&rolloff));
    summary.push(mean(&rms_vals));
    summary.push(mean(&zcr_vals));
    debug_assert_eq!(summary.len(), SUMMARY_DIM);

    Ok(Some((summary, chroma)))
}

/// Keep at most `cap` segments per species. Recordings are visited in a
/// seeded shuffle; segments inside one recording keep their original
/// order. Output records are sorted by (species_id, segment_id).
pub fn cap_windows_per_species(
    per_recording: Vec<Vec<SegmentFeatures>>,
    cap: Option<usize>,
    seed: u64,
) -> Vec<SegmentFeatures> {
    let mut order: Vec<usize> = (0..per_recording.len()).collect();
    Rng::seed_from_u64(seed).shuffle(&mut order);

    let max_species = per_recording
        .iter()
        .flatten()
        .map(|r| r.species_id as usize + 1)
        .max()
        .unwrap_or(0);
    let mut counts = vec![0usize; max_species];
    let cap = cap.unwrap_or(usize::MAX);

    let mut kept = Vec::new();
    for idx in order {
        for record in &per_recording[idx] {
            let c = &mut counts[record.species_id as usize];
            if *c < cap {
                *c += 1;
                kept.push(record.clone());
            }
        }
    }
    kept.sort_by_key(|r| (r.species_id, r.segment_id));
    kept
}

/// The full extraction pipeline over decoded recordings: energy-filter
/// each waveform, size windows from the dataset minimum, extract and
/// filter segments, cap per species, drop empty species, and assemble a
/// feature store with a dense label table.
///
/// Per-recording work runs in parallel; every ordering decision is
/// driven by manifest order plus the seed, so results are independent
/// of scheduling.
pub fn run_extraction(
    recordings: &[RecordingInput],
    cfg: &ExtractConfig,
) -> Result<(FeatureStore, ExtractionSummary), PipelineError> {
    if recordings.is_empty() {
        return Err(PipelineError::EmptyDataset);
    }

    // Silence filtering per recording.
    let effective: Vec<Waveform> = recordings
        .par_iter()
        .map(|rec| {
            let spec = stft(&rec.waveform, cfg.n_fft, cfg.hop)?;
            let mel = mel_spectrogram(&spec, cfg.n_mels)?;
            let mask = frame_energy_mask(&mel, cfg.energy_ratio);
            Ok(mask_to_waveform(&mask, cfg.hop, cfg.n_fft, &rec.waveform))
        })
        .collect::<Result<_, PipelineError>>()?;

    let lengths: Vec<usize> = effective.iter().map(|w| w.samples.len()).collect();
    let window = compute_window_size(&lengths, cfg.window_override)?;

    // Provisional species ids in sorted-name order over the manifest.
    let mut names: Vec<String> = recordings.iter().map(|r| r.species.clone()).collect();
    names.sort();
    names.dedup();
    let provisional = |species: &str| names.iter().position(|n| n == species).unwrap() as u32;

    // Windowing + per-segment features, recordings in parallel.
    type RecordingSegments = (Vec<(Vec<f64>, Chromagram)>, usize);
    let extracted: Vec<RecordingSegments> = effective
        .par_iter()
        .map(|w| {
            let mut kept = Vec::new();
            let mut skipped = 0usize;
            for seg in segment_windows(w, window)? {
                match extract_segment(&seg, cfg)? {
                    Some(features) => kept.push(features),
                    None => skipped += 1,
                }
            }
            Ok((kept, skipped))
        })
        .collect::<Result<_, PipelineError>>()?;

    // Global segment ids in manifest order, before capping.
    let mut per_recording = Vec::with_capacity(recordings.len());
    let mut next_segment = 0u32;
    let mut skipped_segments = 0usize;
    for (rec, (segments, skipped)) in recordings.iter().zip(extracted) {
        skipped_segments += skipped;
        let species_id = provisional(&rec.species);
        let mut records = Vec::with_capacity(segments.len());
        for (summary, chroma) in segments {
            records.push(SegmentFeatures {
                species_id,
                segment_id: next_segment,
                summary,
                chroma,
            });
            next_segment += 1;
        }
        per_recording.push(records);
    }

    let kept = cap_windows_per_species(per_recording, cfg.cap_per_species, cfg.seed);

    // Drop species without windows and remap ids densely.
    let mut survivors: Vec<bool> = vec![false; names.len()];
    for record in &kept {
        survivors[record.species_id as usize] = true;
    }
    let excluded_species: Vec<String> = names
        .iter()
        .zip(&survivors)
        .filter(|&(_n, &s)| !s).map(|(n, &_s)| n.clone())
        .collect();
    let remap: Vec<Option<u32>> = {
        let mut next = 0u32;
        survivors
            .iter()
            .map(|&s| {
                s.then(|| {
                    let id = next;
                    next += 1;
                    id
                })
            })
            .collect()
    };
    let species_names: Vec<String> = names
        .iter()
        .zip(&survivors)
        .filter(|&(_n, &s)| s).map(|(n, &_s)| n.clone())
        .collect();

    let records: Vec<SegmentFeatures> = kept
        .into_iter()
        .map(|mut r| {
            r.species_id = remap[r.species_id as usize].unwrap();
            r
        })
        .collect();

    let mut windows_per_species: Vec<(String, usize)> = species_names
        .iter()
        .map(|n| (n.clone(), 0))
        .collect();
    for r in &records {
        windows_per_species[r.species_id as usize].1 += 1;
    }

    let store = FeatureStore {
        species_names,
        records,
    };
    let summary = ExtractionSummary {
        window,
        windows_per_species,
        skipped_segments,
        excluded_species,
    };
    Ok((store, summary))
}
