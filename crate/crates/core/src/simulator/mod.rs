//! Synthetic thermal birth episodes with exact ground truth.
//!
//! A scene is a stack of soft-edged elliptical blobs (drapes, mother,
//! providers, towels, hot objects, newborn) painted over a flat background.
//! Sensor distortions are added in °C and the result is quantized once.

mod render;
mod suite;

pub use render::{apply_miscalibration, render_scene, GroundTruth};
pub use suite::{scenario_suite, RoomMix, SimulatedCorpus};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::thermal_io::{AnnotationError, RoomType, ThermalIoError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("entity {index} ({kind:?}) lies outside the frame")]
    OutOfBounds { index: usize, kind: EntityKind },
    #[error("newborn lies outside the frame")]
    NewbornOutOfBounds,
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("scenario suite needs at least one scenario")]
    EmptySuite,
    #[error(transparent)]
    Video(#[from] ThermalIoError),
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Drape,
    Mother,
    Provider,
    Towel,
    Distractor,
}

impl EntityKind {
    pub fn is_adult(self) -> bool {
        matches!(self, EntityKind::Mother | EntityKind::Provider)
    }
}

/// An elliptical warm blob in normalized image coordinates (`x` across the
/// width, `y` down the height, both in `[0, 1]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub kind: EntityKind,
    pub temp: f64,
    pub center: [f64; 2],
    pub radii: [f64; 2],
    /// `[start_s, end_s)` presence windows; empty means always present.
    #[serde(default)]
    pub windows: Vec<[f64; 2]>,
}

impl Entity {
    pub fn active_at(&self, t: f64) -> bool {
        self.windows.is_empty() || self.windows.iter().any(|w| w[0] <= t && t < w[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Newborn {
    pub temp: f64,
    pub center: [f64; 2],
    pub radii: [f64; 2],
    /// Birth time; the first visibility window starts here.
    pub tob_s: f64,
    /// Sorted, disjoint `[start_s, end_s)` windows in which the newborn is
    /// in view.
    pub visibility: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionConfig {
    pub noise_std: f64,
    /// `(time_s, offset °C)` knots, interpolated linearly and held constant
    /// outside the first and last knot. Empty means no drift.
    #[serde(default)]
    pub drift: Vec<[f64; 2]>,
    /// `(time_s, step °C)`: a step applies from its time onwards.
    #[serde(default)]
    pub selfcal_jumps: Vec<[f64; 2]>,
    pub miscalibration_offset: f64,
}

impl Default for DistortionConfig {
    fn default() -> Self {
        Self {
            noise_std: 0.15,
            drift: vec![[0.0, -0.5], [60.0, 0.5], [120.0, -0.25], [180.0, 0.5]],
            selfcal_jumps: vec![[45.0, 0.4], [135.0, -0.4]],
            miscalibration_offset: 0.0,
        }
    }
}

impl DistortionConfig {
    pub fn none() -> Self {
        Self {
            noise_std: 0.0,
            drift: Vec::new(),
            selfcal_jumps: Vec::new(),
            miscalibration_offset: 0.0,
        }
    }

    /// Deterministic part of the distortion at time `t`: drift, jumps and
    /// miscalibration.
    pub fn offset_at(&self, t: f64) -> f64 {
        let drift = match self.drift.as_slice() {
            [] => 0.0,
            [first, ..] if t <= first[0] => first[1],
            [.., last] if t >= last[0] => last[1],
            knots => {
                let i = knots.partition_point(|k| k[0] <= t);
                let (a, b) = (knots[i - 1], knots[i]);
                a[1] + (b[1] - a[1]) * (t - a[0]) / (b[0] - a[0])
            }
        };
        let jumps: f64 = self
            .selfcal_jumps
            .iter()
            .filter(|j| t >= j[0])
            .map(|j| j[1])
            .sum();
        drift + jumps + self.miscalibration_offset
    }

    fn validate(&self) -> Result<(), SimError> {
        let finite = |v: &[[f64; 2]]| v.iter().flatten().all(|x| x.is_finite());
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite())
            || !self.miscalibration_offset.is_finite()
            || !finite(&self.drift)
            || !finite(&self.selfcal_jumps)
        {
            return Err(SimError::Invalid("distortion values must be finite".into()));
        }
        if self.drift.windows(2).any(|w| w[0][0] >= w[1][0]) {
            return Err(SimError::Invalid("drift knots must be strictly increasing in time".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub duration_s: f64,
    pub frame_rate: f64,
    pub room_type: RoomType,
    pub width: u32,
    pub height: u32,
    pub background_temp: f64,
    /// Painted in order, later entities on top. The newborn goes last.
    pub entities: Vec<Entity>,
    pub newborn: Option<Newborn>,
    pub distortion: DistortionConfig,
    /// Seeds the sensor noise and nothing else.
    pub seed: u64,
}

/// Frame index of time `t`: the first frame at or after it.
pub(crate) fn frame_at(t: f64, frame_rate: f64) -> usize {
    (t * frame_rate).ceil().max(0.0) as usize
}

impl Scenario {
    pub fn n_frames(&self) -> usize {
        ((self.duration_s * self.frame_rate).floor() as usize).max(1)
    }

    /// Hottest adult skin temperature in the scene.
    pub fn adult_skin_temp(&self) -> Option<f64> {
        self.entities
            .iter()
            .filter(|e| e.kind.is_adult())
            .map(|e| e.temp)
            .reduce(f64::max)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let invalid = |m: &str| Err(SimError::Invalid(m.into()));
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return invalid("duration must be positive");
        }
        if !(self.frame_rate > 0.0 && self.frame_rate.is_finite()) {
            return invalid("frame rate must be positive");
        }
        if self.width == 0 || self.height == 0 {
            return invalid("resolution must be non-zero");
        }
        if !self.background_temp.is_finite() {
            return invalid("background temperature must be finite");
        }
        self.distortion.validate()?;
        for (index, e) in self.entities.iter().enumerate() {
            if !inside(e.center, e.radii) || !e.temp.is_finite() {
                return Err(SimError::OutOfBounds {
                    index,
                    kind: e.kind,
                });
            }
            if e.windows.iter().any(|w| !(w[0] < w[1])) {
                return invalid("entity windows must have start < end");
            }
        }
        if let Some(nb) = &self.newborn {
            if !inside(nb.center, nb.radii) || !nb.temp.is_finite() {
                return Err(SimError::NewbornOutOfBounds);
            }
            if let Some(adult) = self.adult_skin_temp() {
                if nb.temp <= adult {
                    return invalid("newborn must be warmer than adult skin");
                }
            }
            if !(nb.tob_s >= 0.0 && nb.tob_s < self.duration_s) {
                return invalid("birth time must lie within the video");
            }
            if frame_at(nb.tob_s, self.frame_rate) >= self.n_frames() {
                return invalid("birth frame lies past the last frame");
            }
            match nb.visibility.first() {
                Some(w) if w[0] == nb.tob_s => {}
                _ => return invalid("first visibility window must start at the birth"),
            }
            for w in &nb.visibility {
                if frame_at(w[0], self.frame_rate) >= frame_at(w[1], self.frame_rate) {
                    return invalid("visibility window covers no frame");
                }
            }
            if nb.visibility.windows(2).any(|p| p[0][1] > p[1][0]) {
                return invalid("visibility windows must be sorted and disjoint");
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let s: Scenario =
            serde_json::from_str(text).map_err(|e| SimError::Invalid(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }
}

/// Center inside the unit square, radii positive.
fn inside(center: [f64; 2], radii: [f64; 2]) -> bool {
    center.iter().all(|c| (0.0..=1.0).contains(c))
        && radii.iter().all(|r| *r > 0.0 && r.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drift_interpolates_and_holds() {
        let d = DistortionConfig {
            noise_std: 0.0,
            drift: vec![[10.0, 1.0], [20.0, -1.0]],
            selfcal_jumps: vec![[15.0, 0.5]],
            miscalibration_offset: 2.0,
        };
        assert_eq!(d.offset_at(0.0), 3.0);
        assert_eq!(d.offset_at(12.5), 2.5);
        assert_eq!(d.offset_at(15.0), 2.5);
        assert_eq!(d.offset_at(99.0), 1.5);
        assert_eq!(DistortionConfig::none().offset_at(7.0), 0.0);
    }

    #[test]
    fn default_distortion_within_band() {
        let d = DistortionConfig::default();
        for i in 0..=1800 {
            assert!(d.offset_at(i as f64 / 10.0).abs() <= 1.5);
        }
    }
}
