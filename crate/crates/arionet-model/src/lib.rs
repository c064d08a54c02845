//! Chromagram sequence models: the shared transformer encoder with its
//! projection head, contrastive pretraining over augmented views, and the
//! smaller future-frame prediction transformer.

pub mod encoder;
pub mod layers;
pub mod ssl;
pub mod temporal;

pub use encoder::{Encoder, EncoderConfig, EncoderOutput};
pub use layers::{positional_encoding, Mode};
pub use ssl::{
    chroma_mask, contrastive_eval, make_views, nt_xent, pitch_shift, pretrain, time_mask,
    AugmentationSpec, NtXent, PretrainConfig, PretrainOutcome,
};
pub use temporal::{
    mse, split_context_target, train_temporal, validation_split, EpochTrace, TemporalConfig,
    TemporalOutcome, TemporalPredictor,
};

/// Errors from model construction, forward passes, and training.
#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("d_model {d_model} is not divisible by {heads} heads")]
    BadHeads { d_model: usize, heads: usize },
    #[error("encoder input has zero frames")]
    EmptyInput,
    #[error("temperature {0} must be positive")]
    BadTemperature(f64),
    #[error("contrastive batch is empty")]
    EmptyBatch,
    #[error("view stacks differ in shape: {a:?} vs {b:?}")]
    ViewShapeMismatch { a: Vec<usize>, b: Vec<usize> },
    #[error("sequence has {len} frames, too short for context {context} + horizon {horizon}")]
    SequenceTooShort {
        len: usize,
        context: usize,
        horizon: usize,
    },
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error(transparent)]
    Tensor(#[from] arionet_tensor::TensorError),
}
