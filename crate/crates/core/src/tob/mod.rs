//! Time-of-birth estimation from per-frame scores.
//!
//! Scores are smoothed with a causal length-`K` moving average (zero initial
//! conditions). The birth frame is the first smoothed value at or above the
//! confidence threshold `gamma`, converted to whole seconds with a floor.

mod compare;
mod fir;
mod sweep;

pub use compare::{
    compare_normalizations, corpus_features, dataset_from_features, evaluate_video, features_of,
    run_variant, Corpus, InMemoryCorpus, LabeledVideo, Normalization, PipelineConfig,
    PipelineError, Variant, VariantReport, VariantRun, VideoFeatures, VideoResult,
};
pub use fir::{fir_smooth, FirFilter};
pub use sweep::{default_threshold_grid, fpr_sweep, FprPoint, FprSweep};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::ScoreSeries;
use crate::stats;

pub const DEFAULT_FILTER_LEN: usize = 25;
pub const DEFAULT_GAMMA: f64 = 0.9;

#[derive(Debug, Error)]
pub enum TobError {
    #[error("filter length must be at least 1, got {0}")]
    FilterLength(usize),
    #[error("no birth frame was found at gamma {0}")]
    NotFound(f64),
    #[error("error statistics need at least one error")]
    NoErrors,
    #[error("thresholds must be sorted ascending")]
    UnsortedThresholds,
    #[error("length mismatch: {scores} scores vs {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TobEstimate {
    pub gamma: f64,
    /// First frame whose smoothed score reaches `gamma`.
    pub frame: Option<usize>,
    /// `floor(frame / frame_rate)`.
    pub seconds: Option<i64>,
}

impl TobEstimate {
    pub fn found(&self) -> bool {
        self.frame.is_some()
    }
}

pub fn estimate_tob(smoothed: &ScoreSeries, gamma: f64) -> TobEstimate {
    let frame = smoothed.scores.iter().position(|&s| s >= gamma);
    TobEstimate {
        gamma,
        frame,
        seconds: frame.map(|n| (n as f64 / smoothed.frame_rate).floor() as i64),
    }
}

/// Signed error in seconds; positive means the estimate is late.
pub fn tob_error(estimate: &TobEstimate, annotated_s: i64) -> Result<i64, TobError> {
    estimate
        .seconds
        .map(|t| t - annotated_s)
        .ok_or(TobError::NotFound(estimate.gamma))
}

/// Quartiles and mean of absolute errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub errors: Vec<f64>,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub mean: f64,
    pub found_fraction: f64,
}

pub fn error_stats(errors: &[f64], found: usize, total: usize) -> Result<ErrorStats, TobError> {
    if errors.is_empty() {
        return Err(TobError::NoErrors);
    }
    let abs: Vec<f64> = errors.iter().map(|e| e.abs()).collect();
    let sorted = stats::sorted_copy(&abs);
    Ok(ErrorStats {
        errors: errors.to_vec(),
        q1: stats::quantile_sorted(&sorted, 0.25),
        q2: stats::quantile_sorted(&sorted, 0.5),
        q3: stats::quantile_sorted(&sorted, 0.75),
        mean: stats::mean(&abs),
        found_fraction: if total == 0 {
            0.0
        } else {
            found as f64 / total as f64
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(scores: Vec<f64>) -> ScoreSeries {
        ScoreSeries::new("t", 8.33, scores).unwrap()
    }

    #[test]
    fn all_ones_found_at_zero() {
        let e = estimate_tob(&series(vec![1.0; 10]), 0.9);
        assert_eq!(e.frame, Some(0));
        assert_eq!(e.seconds, Some(0));
    }

    #[test]
    fn floor_seconds() {
        let mut s = vec![0.5; 400];
        s[250..].iter_mut().for_each(|v| *v = 0.9);
        let e = estimate_tob(&series(s), 0.9);
        assert_eq!(e.frame, Some(250));
        // 250 / 8.33 = 30.012
        assert_eq!(e.seconds, Some(30));
    }

    #[test]
    fn below_threshold_not_found() {
        let e = estimate_tob(&series(vec![0.8; 50]), 0.9);
        assert!(!e.found());
        assert!(matches!(tob_error(&e, 3), Err(TobError::NotFound(_))));
    }

    #[test]
    fn error_sign() {
        let est = |s| TobEstimate {
            gamma: 0.9,
            frame: Some(0),
            seconds: Some(s),
        };
        assert_eq!(tob_error(&est(32), 30).unwrap(), 2);
        assert_eq!(tob_error(&est(28), 30).unwrap(), -2);
        assert_eq!(tob_error(&est(30), 30).unwrap(), 0);
    }

    #[test]
    fn quartiles() {
        let s = error_stats(&[1.0, -2.0, 3.0, -4.0], 4, 4).unwrap();
        assert_eq!((s.q1, s.q2, s.q3, s.mean), (1.75, 2.5, 3.25, 2.5));
        let s = error_stats(&[5.0], 1, 2).unwrap();
        assert_eq!((s.q1, s.q2, s.q3, s.mean), (5.0, 5.0, 5.0, 5.0));
        assert_eq!(s.found_fraction, 0.5);
        assert!(matches!(error_stats(&[], 0, 0), Err(TobError::NoErrors)));
    }
}
