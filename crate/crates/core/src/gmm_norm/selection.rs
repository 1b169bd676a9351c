//! Skin-component selection, range of interest and room-profile calibration.

use serde::{Deserialize, Serialize};

use super::{GmmError, GmmModel};
use crate::stats;
use crate::thermal_io::RoomType;

/// Summary of the temperature vector a mixture was fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub mean: f64,
    pub variance: f64,
    pub max: f64,
    pub min: f64,
    pub count: usize,
}

impl SampleStats {
    pub fn from_samples(v: &[f64]) -> Result<Self, GmmError> {
        if v.is_empty() {
            return Err(GmmError::TooFewSamples { got: 0, need: 1 });
        }
        let (min, max) = v
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            });
        Ok(Self {
            mean: stats::mean(v),
            variance: stats::variance(v),
            max,
            min,
            count: v.len(),
        })
    }
}

/// Constraint on eligible skin components: `variance <= variance_factor *
/// var(v)` and `weight >= min_weight`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkinConstraints {
    pub variance_factor: f64,
    pub min_weight: f64,
}

impl Default for SkinConstraints {
    fn default() -> Self {
        Self {
            variance_factor: 2.0,
            min_weight: 0.15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentCheck {
    pub index: usize,
    pub variance_ok: bool,
    pub weight_ok: bool,
}

impl ComponentCheck {
    pub fn passes(&self) -> bool {
        self.variance_ok && self.weight_ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkinSelection {
    pub mu_hat: f64,
    pub chosen_index: usize,
    pub fallback_used: bool,
    pub diagnostics: Vec<ComponentCheck>,
}

/// Highest-mean component among those satisfying `constraints`. When none
/// qualifies the highest-mean component overall is used and
/// `fallback_used` is set. Equal means resolve to the lowest index.
pub fn select_skin_component(
    model: &GmmModel,
    sample: &SampleStats,
    constraints: &SkinConstraints,
) -> SkinSelection {
    let diagnostics: Vec<ComponentCheck> = model
        .components
        .iter()
        .enumerate()
        .map(|(index, c)| ComponentCheck {
            index,
            variance_ok: c.variance <= constraints.variance_factor * sample.variance,
            weight_ok: c.weight >= constraints.min_weight,
        })
        .collect();

    let argmax = |eligible: &dyn Fn(usize) -> bool| {
        model
            .components
            .iter()
            .enumerate()
            .filter(|(i, _)| eligible(*i))
            .fold(None::<(usize, f64)>, |best, (i, c)| match best {
                Some((_, m)) if m >= c.mean => best,
                _ => Some((i, c.mean)),
            })
    };

    match argmax(&|i| diagnostics[i].passes()) {
        Some((chosen_index, mu_hat)) => SkinSelection {
            mu_hat,
            chosen_index,
            fallback_used: false,
            diagnostics,
        },
        None => {
            let (chosen_index, mu_hat) =
                argmax(&|_| true).expect("model has at least one component");
            log::warn!(
                "no mixture component satisfies the skin constraints; falling back to component {chosen_index} (mean {mu_hat:.2} °C)"
            );
            SkinSelection {
                mu_hat,
                chosen_index,
                fallback_used: true,
                diagnostics,
            }
        }
    }
}

/// Offsets of the range of interest around the skin mean, °C.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoomProfile {
    pub lower_offset: f64,
    pub upper_offset: f64,
}

impl RoomProfile {
    pub fn new(lower_offset: f64, upper_offset: f64) -> Result<Self, GmmError> {
        if lower_offset <= 0.0 && upper_offset > 0.0 && (upper_offset - lower_offset).is_finite() {
            Ok(Self {
                lower_offset,
                upper_offset,
            })
        } else {
            Err(GmmError::InvalidProfile {
                lower_offset,
                upper_offset,
            })
        }
    }

    /// `[mu - 5, mu + 10]`.
    pub fn delivery() -> Self {
        Self {
            lower_offset: -5.0,
            upper_offset: 10.0,
        }
    }

    /// `[mu - 2.5, mu + 12.5]`; the upper bound is widened so both rooms
    /// share a 15 °C span.
    pub fn theatre() -> Self {
        Self {
            lower_offset: -2.5,
            upper_offset: 12.5,
        }
    }

    pub fn for_room(room: RoomType) -> Self {
        match room {
            RoomType::DeliveryRoom => Self::delivery(),
            RoomType::OperationTheatre => Self::theatre(),
        }
    }

    pub fn span(&self) -> f64 {
        self.upper_offset - self.lower_offset
    }
}

pub fn roi_bounds(mu_hat: f64, profile: &RoomProfile) -> (f64, f64) {
    (mu_hat + profile.lower_offset, mu_hat + profile.upper_offset)
}

/// Rounds to the nearest multiple of `step`, halves upward.
pub fn round_to_step(x: f64, step: f64) -> f64 {
    step * (x / step + 0.5).floor()
}

pub const DEFAULT_ROUNDING_STEP: f64 = 2.5;

/// Derives a room profile from per-video `(stats, mu_hat)` pairs: the lower
/// offset is minus the rounded median of `mu_hat - mean`, the upper offset is
/// the rounded median of `max - mu_hat`.
pub fn calibrate_profile(
    corpus: &[(SampleStats, f64)],
    step: f64,
) -> Result<RoomProfile, GmmError> {
    if corpus.is_empty() {
        return Err(GmmError::EmptyCorpus);
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(GmmError::InvalidStep(step));
    }
    let below: Vec<f64> = corpus.iter().map(|(s, mu)| mu - s.mean).collect();
    let above: Vec<f64> = corpus.iter().map(|(s, mu)| s.max - mu).collect();
    let lower = -round_to_step(stats::median(&below), step);
    let upper = round_to_step(stats::median(&above), step);
    // -0.0 reads oddly in reports
    RoomProfile::new(lower + 0.0, upper)
}
