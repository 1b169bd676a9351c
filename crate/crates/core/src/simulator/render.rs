use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{frame_at, Scenario, SimError};
use crate::thermal_io::{
    celsius_to_raw, AnnotationTrack, CalibrationMap, ThermalFrame, ThermalVideo,
};

/// Half-width of the soft edge, in units of the ellipse radius.
const EDGE: f64 = 0.15;

/// Exact labels of a rendered scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub tob_frame: Option<usize>,
    /// `floor(tob_frame / f_r)`.
    pub tob_s: Option<i64>,
    /// Per-frame newborn visibility.
    pub labels: Vec<bool>,
    /// Pixels where the newborn covers at least half the footprint. The
    /// newborn does not move, so one mask serves every visible frame.
    pub newborn_mask: Vec<bool>,
}

impl GroundTruth {
    /// Newborn pixel mask of `frame`, `None` when it is not in view.
    pub fn mask(&self, frame: usize) -> Option<&[bool]> {
        self.labels
            .get(frame)
            .copied()
            .unwrap_or(false)
            .then_some(self.newborn_mask.as_slice())
    }

    pub fn track(&self, frame_rate: f64) -> Result<AnnotationTrack, SimError> {
        Ok(AnnotationTrack::from_labels(
            frame_rate,
            &self.labels,
            self.tob_frame,
        )?)
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "tob_frame": self.tob_frame,
            "tob_s": self.tob_s,
            "vnb_frames": self.labels.iter().filter(|l| **l).count(),
            "mask_pixels": self.newborn_mask.iter().filter(|m| **m).count(),
        })
        .to_string()
    }
}

fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

/// Coverage of every pixel by an ellipse with a smooth rim: 1 inside
/// `r <= 1 - EDGE`, 0 outside `r >= 1 + EDGE`.
fn alpha_map(center: [f64; 2], radii: [f64; 2], width: usize, height: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(width * height);
    for y in 0..height {
        let dy = ((y as f64 + 0.5) / height as f64 - center[1]) / radii[1];
        for x in 0..width {
            let dx = ((x as f64 + 0.5) / width as f64 - center[0]) / radii[0];
            let r = (dx * dx + dy * dy).sqrt();
            out.push(smoothstep((1.0 + EDGE - r) / (2.0 * EDGE)));
        }
    }
    out
}

fn composite(img: &mut [f64], alpha: &[f64], temp: f64) {
    for (p, a) in img.iter_mut().zip(alpha) {
        if *a > 0.0 {
            *p += a * (temp - *p);
        }
    }
}

fn labels_of(scenario: &Scenario, n_frames: usize) -> (Vec<bool>, Option<usize>) {
    let mut labels = vec![false; n_frames];
    let Some(nb) = &scenario.newborn else {
        return (labels, None);
    };
    for w in &nb.visibility {
        let a = frame_at(w[0], scenario.frame_rate).min(n_frames);
        let b = frame_at(w[1], scenario.frame_rate).min(n_frames);
        labels[a..b].iter_mut().for_each(|l| *l = true);
    }
    (labels, Some(frame_at(nb.tob_s, scenario.frame_rate)))
}

/// Noise-free scene temperatures of one frame, before any distortion.
pub(crate) fn clean_frame(
    scenario: &Scenario,
    alphas: &[Vec<f64>],
    newborn_alpha: Option<&[f64]>,
    t: f64,
    newborn_visible: bool,
) -> Vec<f64> {
    let (w, h) = (scenario.width as usize, scenario.height as usize);
    let mut img = vec![scenario.background_temp; w * h];
    for (e, a) in scenario.entities.iter().zip(alphas) {
        if e.active_at(t) {
            composite(&mut img, a, e.temp);
        }
    }
    if let (Some(nb), Some(a), true) = (&scenario.newborn, newborn_alpha, newborn_visible) {
        composite(&mut img, a, nb.temp);
    }
    img
}

pub(crate) struct SceneCache {
    pub alphas: Vec<Vec<f64>>,
    pub newborn_alpha: Option<Vec<f64>>,
}

impl SceneCache {
    pub fn new(scenario: &Scenario) -> Self {
        let (w, h) = (scenario.width as usize, scenario.height as usize);
        Self {
            alphas: scenario
                .entities
                .iter()
                .map(|e| alpha_map(e.center, e.radii, w, h))
                .collect(),
            newborn_alpha: scenario
                .newborn
                .as_ref()
                .map(|nb| alpha_map(nb.center, nb.radii, w, h)),
        }
    }
}

/// Renders every frame and its labels. Only the sensor noise depends on
/// `scenario.seed`.
pub fn render_scene(scenario: &Scenario) -> Result<(ThermalVideo, GroundTruth), SimError> {
    scenario.validate()?;
    let n_frames = scenario.n_frames();
    let (w, h) = (scenario.width, scenario.height);
    let cal = CalibrationMap::default();
    let cache = SceneCache::new(scenario);
    let (labels, tob_frame) = labels_of(scenario, n_frames);

    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let noise = Normal::new(0.0, scenario.distortion.noise_std)
        .map_err(|e| SimError::Invalid(e.to_string()))?;

    let mut frames = Vec::with_capacity(n_frames);
    for (n, &visible) in labels.iter().enumerate() {
        let t = n as f64 / scenario.frame_rate;
        let img = clean_frame(
            scenario,
            &cache.alphas,
            cache.newborn_alpha.as_deref(),
            t,
            visible,
        );
        let offset = scenario.distortion.offset_at(t);
        let data = img
            .iter()
            .map(|&c| {
                let eps = if scenario.distortion.noise_std > 0.0 {
                    noise.sample(&mut rng)
                } else {
                    0.0
                };
                celsius_to_raw(c + offset + eps, &cal)
            })
            .collect();
        frames.push(ThermalFrame::new(w, h, data)?);
    }
    let video = ThermalVideo::new(frames, scenario.frame_rate, scenario.room_type, cal)?;

    let newborn_mask = match &cache.newborn_alpha {
        Some(a) => a.iter().map(|&v| v >= 0.5).collect(),
        None => vec![false; (w * h) as usize],
    };
    let truth = GroundTruth {
        tob_frame,
        tob_s: tob_frame.map(|f| (f as f64 / scenario.frame_rate).floor() as i64),
        labels,
        newborn_mask,
    };
    Ok((video, truth))
}

/// Shifts every pixel by `offset_c` °C and re-quantizes, clamping to the raw
/// range.
pub fn apply_miscalibration(video: &ThermalVideo, offset_c: f64) -> ThermalVideo {
    let cal = video.calibration;
    let frames = video
        .frames
        .iter()
        .map(|f| ThermalFrame {
            width: f.width,
            height: f.height,
            data: f
                .data
                .iter()
                .map(|&r| celsius_to_raw(cal.celsius(r) + offset_c, &cal))
                .collect(),
        })
        .collect();
    ThermalVideo {
        frames,
        frame_rate: video.frame_rate,
        room_type: video.room_type,
        calibration: cal,
    }
}
