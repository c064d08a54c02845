//! Minimal dense-tensor reverse-mode automatic differentiation.
//!
//! A [`Tensor`] is an immutable node in a dynamically built computation
//! graph; calling an op records its inputs so that [`backward`] can push
//! gradients back to every parameter. Values are f64 throughout so
//! finite-difference oracles have headroom; checkpoints store f32.
//!
//! Graphs are confined to a single thread (`Rc` interior); independent
//! graphs may run on different threads.

mod checkpoint;
mod optim;
mod params;
mod tensor;

pub use checkpoint::{
    checkpoint_bytes, load_checkpoint, load_checkpoint_into, parse_checkpoint, read_checkpoint,
    save_checkpoint,
};
pub use optim::{adam_step, lr_decay, AdamConfig, OptimState};
pub use params::ParamSet;
pub use tensor::{backward, Tensor};

/// Errors from tensor ops, the backward pass, and checkpoint I/O.
#[derive(Debug, thiserror::Error)]
pub enum TensorError {
    #[error("{op}: shape mismatch {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("{op}: expected a matrix, got shape {shape:?}")]
    NotAMatrix { op: &'static str, shape: Vec<usize> },
    #[error("{op}: axis {axis} out of range for shape {shape:?}")]
    BadAxis {
        op: &'static str,
        axis: usize,
        shape: Vec<usize>,
    },
    #[error("slice [{start}, {start}+{len}) exceeds axis {axis} of shape {shape:?}")]
    BadSlice {
        axis: usize,
        start: usize,
        len: usize,
        shape: Vec<usize>,
    },
    #[error("concat needs at least one input")]
    EmptyConcat,
    #[error("dropout rate {0} outside [0, 1)")]
    BadDropoutRate(f64),
    #[error("backward needs a scalar loss, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
    #[error("checkpoint has bad magic bytes")]
    BadMagic,
    #[error("checkpoint version {0} is unsupported")]
    UnsupportedVersion(u32),
    #[error("checkpoint truncated while reading {0}")]
    Truncated(&'static str),
    #[error("checkpoint tensor name is not valid UTF-8")]
    BadName,
    #[error("checkpoint contains unknown tensor \"{0}\"")]
    UnknownTensor(String),
    #[error("checkpoint is missing tensor \"{0}\"")]
    MissingTensor(String),
    #[error("checkpoint tensor \"{name}\" has shape {found:?}, expected {expected:?}")]
    CheckpointShape {
        name: String,
        found: Vec<usize>,
        expected: Vec<usize>,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
