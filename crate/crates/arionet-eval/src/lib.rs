//! Downstream evaluation: frozen-embedding species classification with a
//! random forest or k-NN, the confusion-matrix metrics suite, and the
//! future-frame distribution statistics.

pub mod embed;
pub mod forest;
pub mod framestats;
pub mod knn;
pub mod metrics;
pub mod model_io;
pub mod split;

pub use embed::embed_all;
pub use forest::{fit_forest, forest_predict, forest_predict_batch, ForestConfig, ForestModel};
pub use framestats::{
    frame_distribution_stats, pitch_class_correlation, FrameDistributionReport, FrameSetStats,
};
pub use knn::knn_predict;
pub use metrics::{cosine_similarity, metrics, ClassMetrics, ConfusionMatrix, EvalReport};
pub use model_io::{
    classifier_bytes, parse_classifier, read_classifier, write_classifier, ClassifierModel,
};
pub use split::stratified_split;

/// Errors from classifier training, prediction, and metric computation.
#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("no samples provided")]
    EmptyInput,
    #[error("feature rows have inconsistent lengths")]
    RaggedFeatures,
    #[error("labels and features disagree in length: {labels} vs {rows}")]
    LengthMismatch { labels: usize, rows: usize },
    #[error("training set contains a single class")]
    SingleClass,
    #[error("k must be at least 1")]
    BadK,
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("correlation undefined for a constant vector")]
    UndefinedCorrelation,
    #[error("query has {query} features, model expects {expected}")]
    QueryDim { query: usize, expected: usize },
    #[error(transparent)]
    Model(#[from] arionet_model::ModelError),
    #[error("classifier model has bad magic bytes")]
    BadMagic,
    #[error("classifier model version {0} is unsupported")]
    UnsupportedVersion(u32),
    #[error("classifier model truncated while reading {0}")]
    Truncated(&'static str),
    #[error("classifier model invalid: {0}")]
    InvalidModel(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
