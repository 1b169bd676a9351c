//! Range-of-interest normalization and the per-frame Max-Min baseline.

use serde::{Deserialize, Serialize};

use super::{
    fit_gmm, roi_bounds, select_skin_component, EmConfig, GmmError, GmmModel, RoomProfile,
    SampleStats, SkinConstraints, SkinSelection,
};
use crate::thermal_io::{sample_temperatures, ThermalVideo};

/// Frame spacing used to collect GMM training temperatures.
pub const SAMPLE_INTERVAL_S: f64 = 30.0;

/// Number of mixture components: background, mid temperatures, skin.
pub const DEFAULT_COMPONENTS: usize = 3;

/// Video with every pixel mapped into `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedVideo {
    pub width: u32,
    pub height: u32,
    pub frame_rate: f64,
    pub frames: Vec<Vec<f64>>,
}

impl NormalizedVideo {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Clips each temperature to `[lo, hi]` and rescales to `[0, 1]`.
pub fn normalize_video(
    video: &ThermalVideo,
    bounds: (f64, f64),
) -> Result<NormalizedVideo, GmmError> {
    let (lo, hi) = bounds;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(GmmError::InvalidBounds { lo, hi });
    }
    let inv = 1.0 / (hi - lo);
    let cal = video.calibration;
    let frames = video
        .frames
        .iter()
        .map(|f| {
            f.data
                .iter()
                .map(|&r| ((cal.celsius(r) - lo) * inv).clamp(0.0, 1.0))
                .collect()
        })
        .collect();
    Ok(NormalizedVideo {
        width: video.width(),
        height: video.height(),
        frame_rate: video.frame_rate,
        frames,
    })
}

/// Rescales every frame by its own minimum and maximum. A flat frame maps to
/// all zeros.
pub fn maxmin_normalize(video: &ThermalVideo) -> NormalizedVideo {
    let frames = video
        .frames
        .iter()
        .map(|f| {
            let (lo, hi) = f
                .data
                .iter()
                .fold((u16::MAX, 0u16), |(lo, hi), &r| (lo.min(r), hi.max(r)));
            if hi == lo {
                return vec![0.0; f.data.len()];
            }
            // affine calibration cancels out of (t - min) / (max - min)
            let inv = 1.0 / (hi - lo) as f64;
            f.data.iter().map(|&r| (r - lo) as f64 * inv).collect()
        })
        .collect();
    NormalizedVideo {
        width: video.width(),
        height: video.height(),
        frame_rate: video.frame_rate,
        frames,
    }
}

/// Settings for the adaptive normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GmmNormConfig {
    /// Overrides the per-room default profile when set.
    pub profile: Option<RoomProfile>,
    pub em: EmConfig,
    pub constraints: SkinConstraints,
    pub components: usize,
    pub sample_interval_s: f64,
}

impl Default for GmmNormConfig {
    fn default() -> Self {
        Self {
            profile: None,
            em: EmConfig::default(),
            constraints: SkinConstraints::default(),
            components: DEFAULT_COMPONENTS,
            sample_interval_s: SAMPLE_INTERVAL_S,
        }
    }
}

/// Everything the adaptive normalization computed along the way.
#[derive(Debug, Clone)]
pub struct NormalizationOutcome {
    pub video: NormalizedVideo,
    pub model: GmmModel,
    pub selection: SkinSelection,
    pub stats: SampleStats,
    pub bounds: (f64, f64),
}

/// Temperature sampling, mixture fit, skin selection, range of interest and
/// clip-rescale, in that order.
pub fn normalize_pipeline(
    video: &ThermalVideo,
    config: &GmmNormConfig,
) -> Result<NormalizationOutcome, GmmError> {
    let (model, selection, stats) = estimate_skin(video, config)?;
    let profile = config
        .profile
        .unwrap_or_else(|| RoomProfile::for_room(video.room_type));
    let bounds = roi_bounds(selection.mu_hat, &profile);
    let normalized = normalize_video(video, bounds)?;
    Ok(NormalizationOutcome {
        video: normalized,
        model,
        selection,
        stats,
        bounds,
    })
}

/// First half of [`normalize_pipeline`]: the skin mean without touching
/// every frame. Used for profile calibration.
pub fn estimate_skin(
    video: &ThermalVideo,
    config: &GmmNormConfig,
) -> Result<(GmmModel, SkinSelection, SampleStats), GmmError> {
    let v = sample_temperatures(video, config.sample_interval_s)?;
    let model = fit_gmm(&v, config.components, &config.em)?;
    let stats = SampleStats::from_samples(&v)?;
    let selection = select_skin_component(&model, &stats, &config.constraints);
    Ok((model, selection, stats))
}

/// JSON diagnostic record for one fitted video.
pub fn diagnostic_record(model: &GmmModel, selection: &SkinSelection) -> serde_json::Value {
    serde_json::json!({
        "weights": model.weights(),
        "means": model.means(),
        "variances": model.variances(),
        "mu_hat": selection.mu_hat,
        "fallback": selection.fallback_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermal_io::{celsius_to_raw, CalibrationMap, RoomType, ThermalFrame};

    fn video_from_celsius(frames: &[Vec<f64>], w: u32, h: u32) -> ThermalVideo {
        let cal = CalibrationMap::default();
        ThermalVideo::new(
            frames
                .iter()
                .map(|f| ThermalFrame {
                    width: w,
                    height: h,
                    data: f.iter().map(|&t| celsius_to_raw(t, &cal)).collect(),
                })
                .collect(),
            8.33,
            RoomType::DeliveryRoom,
            cal,
        )
        .unwrap()
    }

    #[test]
    fn clip_and_rescale() {
        let cal = CalibrationMap::new(1.0, 0.0).unwrap();
        let v = ThermalVideo::new(
            vec![ThermalFrame::new(4, 1, vec![31, 36, 46, 49]).unwrap()],
            8.33,
            RoomType::DeliveryRoom,
            cal,
        )
        .unwrap();
        let n = normalize_video(&v, (31.0, 46.0)).unwrap();
        assert_eq!(n.frames[0][0], 0.0);
        assert!((n.frames[0][1] - 5.0 / 15.0).abs() < 1e-15);
        assert_eq!(n.frames[0][2], 1.0);
        assert_eq!(n.frames[0][3], 1.0);
        assert!(matches!(
            normalize_video(&v, (3.0, 3.0)),
            Err(GmmError::InvalidBounds { .. })
        ));
    }

    #[test]
    fn maxmin_per_frame() {
        let v = video_from_celsius(&[vec![20.0, 30.0, 40.0], vec![5.0, 5.0, 5.0]], 3, 1);
        let n = maxmin_normalize(&v);
        assert_eq!(n.frames[0][0], 0.0);
        assert_eq!(n.frames[0][2], 1.0);
        assert!((n.frames[0][1] - 0.5).abs() < 1e-3);
        assert_eq!(n.frames[1], vec![0.0; 3]);
    }

    #[test]
    fn constant_video_fails_in_fit() {
        let v = video_from_celsius(&vec![vec![30.0; 64]; 3], 8, 8);
        assert!(matches!(
            normalize_pipeline(&v, &GmmNormConfig::default()),
            Err(GmmError::ZeroVariance)
        ));
    }

    #[test]
    fn diagnostic_has_expected_keys() {
        let pixels: Vec<f64> = (0..300).map(|i| 20.0 + (i % 3) as f64 * 7.0 + (i % 7) as f64 * 0.1).collect();
        let v = video_from_celsius(&[pixels], 30, 10);
        let out = normalize_pipeline(&v, &GmmNormConfig::default()).unwrap();
        let d = diagnostic_record(&out.model, &out.selection);
        for key in ["weights", "means", "variances", "mu_hat", "fallback"] {
            assert!(d.get(key).is_some(), "{key}");
        }
        assert!(out.video.frames[0].iter().all(|x| (0.0..=1.0).contains(x)));
    }
}
