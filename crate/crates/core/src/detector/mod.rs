//! Per-frame newborn-presence scoring.
//!
//! The reference scorer is a logistic model over six thermal features of a
//! normalized frame. Externally computed scores enter through
//! [`import_scores`] and follow the same downstream path.

mod dataset;
mod features;
mod metrics;
mod model;
mod scores;

pub use dataset::{build_dataset, select_training_frames, split_train_validation, Dataset, Sample};
pub use features::{
    extract_features, FeatureVector, FEATURE_LEN, FEATURE_NAMES, FEATURE_VERSION, HOT_THRESHOLD,
    TOP_FRACTION,
};
pub use metrics::{evaluate_detector, Confusion, DetectionMetrics, Metric};
pub use model::{
    class_weights, logistic, loss_gradient, mean_loss, score_feature_series, score_frame,
    score_video, train_detector, weighted_bce, ClassWeights, DetectorModel, Params, TrainConfig,
    TrainingInfo, EPS,
};
pub use scores::{export_scores, import_scores, ScoreSeries};

use thiserror::Error;

/// NNB frames kept per second of a continuous NNB run.
pub const DEFAULT_NNB_HZ: f64 = 1.0;

#[derive(Debug, Error)]
pub enum DetectorError {
    #[error("length mismatch ({what}): {left} vs {right}")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },
    #[error("class {class} has no samples")]
    EmptyClass { class: usize },
    #[error("training needs both classes (NNB {negatives}, VNB {positives})")]
    SingleClass { negatives: usize, positives: usize },
    #[error("frame features are not finite")]
    NonFiniteFeatures,
    #[error("score file line {line}: {message}")]
    ScoreParse { line: usize, message: String },
    #[error("score frames must be contiguous: expected frame {expected}, found {found}")]
    ScoreGap { expected: usize, found: usize },
    #[error("score {value} at frame {frame} outside [0, 1]")]
    ScoreRange { frame: usize, value: f64 },
    #[error("model file: {0}")]
    ModelFormat(String),
    #[error("unsupported feature_version {0}")]
    FeatureVersion(u32),
}
