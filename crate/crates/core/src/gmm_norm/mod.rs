//! Adaptive normalization of thermal videos around the skin temperature.
//!
//! A three-component 1D Gaussian mixture is fitted to temperatures sampled
//! every 30 s. The hottest sufficiently heavy, sufficiently narrow component
//! gives the skin mean `mu_hat`, and a fixed-span window around it is clipped
//! and rescaled to `[0, 1]`.

mod em;
mod normalize;
mod selection;

pub use em::{fit_gmm, Component, EmConfig, GmmModel};
pub use normalize::{
    diagnostic_record, estimate_skin, maxmin_normalize, normalize_pipeline, normalize_video,
    GmmNormConfig, NormalizationOutcome, NormalizedVideo, DEFAULT_COMPONENTS, SAMPLE_INTERVAL_S,
};
pub use selection::{
    calibrate_profile, roi_bounds, round_to_step, select_skin_component, ComponentCheck,
    RoomProfile, SampleStats, SkinConstraints, SkinSelection, DEFAULT_ROUNDING_STEP,
};

use thiserror::Error;

use crate::thermal_io::ThermalIoError;

#[derive(Debug, Error)]
pub enum GmmError {
    #[error("mixture needs at least one component")]
    NoComponents,
    #[error("too few samples: got {got}, need at least {need}")]
    TooFewSamples { got: usize, need: usize },
    #[error("non-finite sample {0}")]
    NonFinite(f64),
    #[error("all samples identical; zero variance cannot be modelled")]
    ZeroVariance,
    #[error("invalid room profile (lower {lower_offset}, upper {upper_offset}): need lower <= 0 < upper")]
    InvalidProfile { lower_offset: f64, upper_offset: f64 },
    #[error("normalization bounds need lo < hi, got [{lo}, {hi}]")]
    InvalidBounds { lo: f64, hi: f64 },
    #[error("calibration corpus is empty")]
    EmptyCorpus,
    #[error("rounding step must be positive, got {0}")]
    InvalidStep(f64),
    #[error(transparent)]
    Io(#[from] ThermalIoError),
}
