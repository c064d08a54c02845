//! End-to-end feature extraction: energy-based silence filtering, dynamic
//! windowing, per-segment feature assembly, per-species capping, and a
//! persistent binary feature store.

pub mod energy;
pub mod extract;
pub mod manifest;
pub mod store;
pub mod window;

pub use energy::{frame_energy_mask, mask_to_waveform, EnergyMask};
pub use extract::{
    cap_windows_per_species, extract_segment, run_extraction, ExtractConfig, ExtractionSummary,
    RecordingInput, SegmentFeatures, SUMMARY_DIM,
};
pub use manifest::{parse_manifest, Manifest, ManifestRow};
pub use store::{parse_store, read_store, store_bytes, write_store, FeatureStore};
pub use window::{compute_window_size, segment_windows};

/// Errors from extraction, the store format, and manifest parsing.
#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Dsp(#[from] arionet_dsp::DspError),
    #[error("no recordings to process")]
    EmptyDataset,
    #[error("window size must be positive")]
    ZeroWindow,
    #[error("feature store has bad magic bytes")]
    BadMagic,
    #[error("feature store version {0} is unsupported")]
    UnsupportedVersion(u32),
    #[error("feature store truncated while reading {0}")]
    Truncated(&'static str),
    #[error("feature store record invalid: {0}")]
    InvalidRecord(String),
    #[error("manifest line {line}: {reason}")]
    BadManifest { line: usize, reason: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
