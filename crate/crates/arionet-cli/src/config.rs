//! Run configuration: every tunable in one struct, a line-oriented
//! `key = value` file format, and fail-fast validation.

use crate::CliError;
use arionet_model::{AugmentationSpec, EncoderConfig, PretrainConfig, TemporalConfig};
use arionet_pipeline::ExtractConfig;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    // Signal processing and extraction.
    pub sample_rate: u32,
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub energy_ratio: f64,
    pub chroma_min_frames: usize,
    pub rolloff_ratio: f64,
    pub ref_a4: f64,
    pub window: Option<usize>,
    pub cap_per_species: Option<usize>,
    // Contrastive pretraining.
    pub tau: f64,
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    pub gamma: f64,
    pub enc_blocks: usize,
    pub enc_heads: usize,
    pub enc_d_model: usize,
    pub enc_ffn: usize,
    pub proj_dim: usize,
    pub dropout: f64,
    // Augmentations.
    pub aug_pitch_shift: bool,
    pub pitch_shift_range: i64,
    pub aug_time_mask: bool,
    pub time_mask_max: f64,
    pub aug_chroma_mask: bool,
    pub chroma_mask_max_rows: usize,
    // Temporal prediction.
    pub tmp_blocks: usize,
    pub tmp_heads: usize,
    pub tmp_d_model: usize,
    pub tmp_ffn: usize,
    pub context: usize,
    pub horizon: usize,
    pub tmp_lr: f64,
    pub tmp_batch: usize,
    pub tmp_epochs: usize,
    pub patience: usize,
    pub min_delta: f64,
    pub val_fraction: f64,
    // Downstream classification.
    pub trees: usize,
    pub knn_k: usize,
    pub test_fraction: f64,
    // Run identity.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            sample_rate: 22050,
            n_fft: 2048,
            hop: 512,
            n_mels: 128,
            energy_ratio: 0.05,
            chroma_min_frames: 13,
            rolloff_ratio: 0.85,
            ref_a4: 440.0,
            window: None,
            cap_per_species: None,
            tau: 0.07,
            lr: 1e-3,
            batch: 64,
            epochs: 300,
            gamma: 0.95,
            enc_blocks: 4,
            enc_heads: 4,
            enc_d_model: 128,
            enc_ffn: 512,
            proj_dim: 256,
            dropout: 0.2,
            aug_pitch_shift: true,
            pitch_shift_range: 2,
            aug_time_mask: true,
            time_mask_max: 0.2,
            aug_chroma_mask: true,
            chroma_mask_max_rows: 2,
            tmp_blocks: 2,
            tmp_heads: 2,
            tmp_d_model: 64,
            tmp_ffn: 256,
            context: 12,
            horizon: 1,
            tmp_lr: 1e-4,
            tmp_batch: 32,
            tmp_epochs: 300,
            patience: 20,
            min_delta: 1e-5,
            val_fraction: 0.1,
            trees: 100,
            knn_k: 5,
            test_fraction: 0.2,
            seed: 0,
        }
    }
}

fn bad(key: &str, value: &str) -> CliError {
    CliError::Validation(format!("config key \"{key}\": cannot parse value \"{value}\""))
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| bad(key, value))
}

fn parse_opt(key: &str, value: &str) -> Result<Option<usize>, CliError> {
    if value == "none" {
        Ok(None)
    } else {
        Ok(Some(parse(key, value)?))
    }
}

impl RunConfig {
    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "sample_rate" => self.sample_rate = parse(key, value)?,
            "n_fft" => self.n_fft = parse(key, value)?,
            "hop" => self.hop = parse(key, value)?,
            "n_mels" => self.n_mels = parse(key, value)?,
            "energy_ratio" => self.energy_ratio = parse(key, value)?,
            "chroma_min_frames" => self.chroma_min_frames = parse(key, value)?,
            "rolloff_ratio" => self.rolloff_ratio = parse(key, value)?,
            "ref_a4" => self.ref_a4 = parse(key, value)?,
            "window" => self.window = parse_opt(key, value)?,
            "cap_per_species" => self.cap_per_species = parse_opt(key, value)?,
            "tau" => self.tau = parse(key, value)?,
            "lr" => self.lr = parse(key, value)?,
            "batch" => self.batch = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "gamma" => self.gamma = parse(key, value)?,
            "enc_blocks" => self.enc_blocks = parse(key, value)?,
            "enc_heads" => self.enc_heads = parse(key, value)?,
            "enc_d_model" => self.enc_d_model = parse(key, value)?,
            "enc_ffn" => self.enc_ffn = parse(key, value)?,
            "proj_dim" => self.proj_dim = parse(key, value)?,
            "dropout" => self.dropout = parse(key, value)?,
            "aug_pitch_shift" => self.aug_pitch_shift = parse(key, value)?,
            "pitch_shift_range" => self.pitch_shift_range = parse(key, value)?,
            "aug_time_mask" => self.aug_time_mask = parse(key, value)?,
            "time_mask_max" => self.time_mask_max = parse(key, value)?,
            "aug_chroma_mask" => self.aug_chroma_mask = parse(key, value)?,
            "chroma_mask_max_rows" => self.chroma_mask_max_rows = parse(key, value)?,
            "tmp_blocks" => self.tmp_blocks = parse(key, value)?,
            "tmp_heads" => self.tmp_heads = parse(key, value)?,
            "tmp_d_model" => self.tmp_d_model = parse(key, value)?,
            "tmp_ffn" => self.tmp_ffn = parse(key, value)?,
            "context" => self.context = parse(key, value)?,
            "horizon" => self.horizon = parse(key, value)?,
            "tmp_lr" => self.tmp_lr = parse(key, value)?,
            "tmp_batch" => self.tmp_batch = parse(key, value)?,
            "tmp_epochs" => self.tmp_epochs = parse(key, value)?,
            "patience" => self.patience = parse(key, value)?,
            "min_delta" => self.min_delta = parse(key, value)?,
            "val_fraction" => self.val_fraction = parse(key, value)?,
            "trees" => self.trees = parse(key, value)?,
            "knn_k" => self.knn_k = parse(key, value)?,
            "test_fraction" => self.test_fraction = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            _ => {
                return Err(CliError::Validation(format!(
                    "unknown config key \"{key}\""
                )))
            }
        }
        Ok(())
    }

    /// Load `key = value` lines; `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {path:?}: {e}")))?;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Validation(format!(
                    "config {path:?} line {}: expected key = value",
                    idx + 1
                )));
            };
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Check every constraint before any compute starts.
    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::Validation(msg));
        if self.sample_rate == 0 {
            return fail("sample_rate must be positive".into());
        }
        if self.n_fft < 2 || !self.n_fft.is_power_of_two() {
            return fail(format!("n_fft {} must be a power of two >= 2", self.n_fft));
        }
        if self.hop == 0 {
            return fail("hop must be >= 1".into());
        }
        if self.n_mels == 0 {
            return fail("n_mels must be >= 1".into());
        }
        if !(self.energy_ratio > 0.0 && self.energy_ratio <= 1.0) {
            return fail(format!("energy_ratio {} outside (0, 1]", self.energy_ratio));
        }
        if !(self.rolloff_ratio > 0.0 && self.rolloff_ratio <= 1.0) {
            return fail(format!("rolloff_ratio {} outside (0, 1]", self.rolloff_ratio));
        }
        if self.ref_a4 <= 0.0 {
            return fail("ref_a4 must be positive".into());
        }
        if self.chroma_min_frames < 13 {
            return fail(format!(
                "chroma_min_frames {} below the 13-frame record minimum",
                self.chroma_min_frames
            ));
        }
        if self.window == Some(0) {
            return fail("window override must be positive".into());
        }
        if self.cap_per_species == Some(0) {
            return fail("cap_per_species must be >= 1 when set".into());
        }
        if self.tau <= 0.0 {
            return fail(format!("tau {} must be positive", self.tau));
        }
        if self.lr <= 0.0 || self.tmp_lr <= 0.0 {
            return fail("learning rates must be positive".into());
        }
        if self.batch == 0 || self.tmp_batch == 0 {
            return fail("batch sizes must be >= 1".into());
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return fail(format!("gamma {} outside (0, 1]", self.gamma));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout {} outside [0, 1)", self.dropout));
        }
        for (what, d, h) in [
            ("encoder", self.enc_d_model, self.enc_heads),
            ("temporal", self.tmp_d_model, self.tmp_heads),
        ] {
            if d == 0 || h == 0 || d % h != 0 {
                return fail(format!(
                    "{what} d_model {d} must be a positive multiple of heads {h}"
                ));
            }
        }
        if self.enc_blocks == 0 || self.tmp_blocks == 0 || self.enc_ffn == 0 || self.tmp_ffn == 0 {
            return fail("block and feed-forward sizes must be positive".into());
        }
        if self.proj_dim == 0 {
            return fail("proj_dim must be >= 1".into());
        }
        if self.pitch_shift_range < 0 {
            return fail("pitch_shift_range must be >= 0".into());
        }
        if !(0.0..=1.0).contains(&self.time_mask_max) {
            return fail(format!("time_mask_max {} outside [0, 1]", self.time_mask_max));
        }
        if self.chroma_mask_max_rows > 12 {
            return fail("chroma_mask_max_rows cannot exceed 12".into());
        }
        if self.context == 0 || self.horizon == 0 {
            return fail("context and horizon must be >= 1".into());
        }
        if self.context + self.horizon > self.chroma_min_frames {
            return fail(format!(
                "context {} + horizon {} exceeds chroma_min_frames {}",
                self.context, self.horizon, self.chroma_min_frames
            ));
        }
        if self.patience == 0 {
            return fail("patience must be >= 1".into());
        }
        if self.min_delta < 0.0 {
            return fail("min_delta must be >= 0".into());
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return fail(format!("val_fraction {} outside (0, 1)", self.val_fraction));
        }
        if self.trees == 0 {
            return fail("trees must be >= 1".into());
        }
        if self.knn_k == 0 {
            return fail("knn_k must be >= 1".into());
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return fail(format!(
                "test_fraction {} outside (0, 1)",
                self.test_fraction
            ));
        }
        Ok(())
    }

    pub fn extract_config(&self) -> ExtractConfig {
        ExtractConfig {
            n_fft: self.n_fft,
            hop: self.hop,
            n_mels: self.n_mels,
            energy_ratio: self.energy_ratio,
            chroma_min_frames: self.chroma_min_frames,
            rolloff_ratio: self.rolloff_ratio,
            ref_a4: self.ref_a4,
            window_override: self.window,
            cap_per_species: self.cap_per_species,
            seed: self.seed,
        }
    }

    pub fn encoder_config(&self) -> EncoderConfig {
        EncoderConfig {
            blocks: self.enc_blocks,
            heads: self.enc_heads,
            d_model: self.enc_d_model,
            ffn_dim: self.enc_ffn,
            proj_dim: self.proj_dim,
            dropout: self.dropout,
            input_dim: 12,
            positional: true,
        }
    }

    pub fn augmentation_spec(&self) -> AugmentationSpec {
        AugmentationSpec {
            pitch_shift: self.aug_pitch_shift,
            pitch_shift_range: self.pitch_shift_range,
            time_mask: self.aug_time_mask,
            time_mask_max: self.time_mask_max,
            chroma_mask: self.aug_chroma_mask,
            chroma_mask_max_rows: self.chroma_mask_max_rows,
        }
    }

    pub fn pretrain_config(&self) -> PretrainConfig {
        PretrainConfig {
            encoder: self.encoder_config(),
            augment: self.augmentation_spec(),
            tau: self.tau,
            lr: self.lr,
            gamma: self.gamma,
            batch: self.batch,
            epochs: self.epochs,
            seed: self.seed,
        }
    }

    pub fn temporal_config(&self) -> TemporalConfig {
        TemporalConfig {
            blocks: self.tmp_blocks,
            heads: self.tmp_heads,
            d_model: self.tmp_d_model,
            ffn_dim: self.tmp_ffn,
            context: self.context,
            horizon: self.horizon,
            lr: self.tmp_lr,
            batch: self.tmp_batch,
            max_epochs: self.tmp_epochs,
            patience: self.patience,
            min_delta: self.min_delta,
            val_fraction: self.val_fraction,
            seed: self.seed,
        }
    }
}
