//! Library surface of the batch CLI, exposed so integration tests can
//! drive the same code paths as the binary.

pub mod commands;
pub mod config;
pub mod synth;
pub mod wav;

pub use config::RunConfig;
pub use synth::{make_synthetic_dataset, species_name, species_pitch_classes, SynthSpec};

/// Exit code 2 for validation failures (bad config or arguments,
/// detected before any compute), exit code 1 for runtime failures.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

/// Cap rayon worker parallelism from the ARIONET_THREADS variable.
/// Called once at process start; later calls are ignored.
pub fn init_thread_pool() {
    if let Ok(value) = std::env::var("ARIONET_THREADS") {
        if let Ok(n) = value.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}
