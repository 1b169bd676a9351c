//! Seeded corpora of randomized birth episodes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{render_scene, DistortionConfig, Entity, EntityKind, Newborn, Scenario, SimError};
use crate::thermal_io::{RoomType, DEFAULT_FRAME_RATE};
use crate::tob::{Corpus, LabeledVideo, PipelineError};

pub const SUITE_WIDTH: u32 = 64;
pub const SUITE_HEIGHT: u32 = 48;
pub const SUITE_DURATION_S: f64 = 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoomMix {
    /// Alternates delivery room and operation theatre.
    #[default]
    Mixed,
    Delivery,
    Theatre,
}

impl RoomMix {
    fn room(self, index: usize) -> RoomType {
        match self {
            RoomMix::Delivery => RoomType::DeliveryRoom,
            RoomMix::Theatre => RoomType::OperationTheatre,
            RoomMix::Mixed if index % 2 == 0 => RoomType::DeliveryRoom,
            RoomMix::Mixed => RoomType::OperationTheatre,
        }
    }
}

/// Random non-overlapping windows of the given length range, sorted.
fn windows(rng: &mut ChaCha8Rng, count: usize, len: (f64, f64), duration: f64) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = Vec::new();
    for _ in 0..count * 4 {
        if out.len() == count {
            break;
        }
        let l = rng.gen_range(len.0..len.1);
        let s = rng.gen_range(0.0..duration - l);
        let w = [s, s + l];
        if out.iter().all(|o| w[1] <= o[0] || w[0] >= o[1]) {
            out.push(w);
        }
    }
    out.sort_by(|a, b| a[0].total_cmp(&b[0]));
    out
}

fn round_ms(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

fn one_scenario(rng: &mut ChaCha8Rng, room: RoomType, seed: u64) -> Scenario {
    let dur = SUITE_DURATION_S;
    let theatre = room == RoomType::OperationTheatre;
    let background_temp = if theatre {
        rng.gen_range(19.0..21.0)
    } else {
        rng.gen_range(21.0..25.0)
    };
    // gowned staff and a cooler room: exposed skin reads lower in theatre
    let skin = if theatre {
        rng.gen_range(32.0..33.0)
    } else {
        rng.gen_range(34.5..35.5)
    };

    let mut entities = Vec::new();
    entities.push(Entity {
        kind: EntityKind::Drape,
        temp: rng.gen_range(28.0..30.0),
        center: [0.5 + rng.gen_range(-0.05..0.05), 0.85],
        radii: [0.45, 0.2],
        windows: vec![],
    });
    let mother_center = [0.5 + rng.gen_range(-0.05..0.05), 0.4];
    entities.push(Entity {
        kind: EntityKind::Mother,
        temp: skin,
        center: mother_center,
        radii: [0.36, 0.32],
        windows: vec![],
    });
    // a towel or sheet that hides the mother's skin for a while
    let n_cover = rng.gen_range(1..=2);
    entities.push(Entity {
        kind: EntityKind::Towel,
        temp: rng.gen_range(30.0..32.0),
        center: mother_center,
        radii: [0.39, 0.35],
        windows: windows(rng, n_cover, (8.0, 25.0), dur),
    });
    for _ in 0..2 {
        let left = rng.gen_bool(0.5);
        let x = if left {
            rng.gen_range(0.08..0.18)
        } else {
            rng.gen_range(0.82..0.92)
        };
        let n = rng.gen_range(2..=4);
        entities.push(Entity {
            kind: EntityKind::Provider,
            temp: skin - rng.gen_range(0.0..0.8),
            center: [x, rng.gen_range(0.2..0.7)],
            radii: [0.06, 0.08],
            windows: windows(rng, n, (10.0, 40.0), dur),
        });
    }
    let n_hot = rng.gen_range(1..=3);
    for _ in 0..n_hot {
        entities.push(Entity {
            kind: EntityKind::Distractor,
            temp: rng.gen_range(38.0..42.0),
            center: [rng.gen_range(0.25..0.75), rng.gen_range(0.65..0.9)],
            radii: [0.018, 0.024],
            windows: windows(rng, 1, (4.0, 12.0), dur),
        });
    }

    let tob_s = round_ms(rng.gen_range(0.2 * dur..0.8 * dur));
    let first_end = round_ms(tob_s + rng.gen_range(6.0..15.0));
    let mut visibility = vec![[tob_s, first_end]];
    let mut t = first_end;
    for _ in 0..rng.gen_range(1..=3) {
        let start = round_ms(t + rng.gen_range(3.0..20.0));
        let end = round_ms(start + rng.gen_range(1.0..5.0));
        if end >= dur {
            break;
        }
        visibility.push([start, end]);
        t = end;
    }
    let newborn = Newborn {
        temp: rng.gen_range(37.2..37.8),
        center: [mother_center[0] + rng.gen_range(-0.1..0.1), 0.45],
        radii: [0.07, 0.09],
        tob_s,
        visibility,
    };

    let knots = (0..=(dur / 30.0) as usize)
        .map(|k| [k as f64 * 30.0, rng.gen_range(-0.6..0.6)])
        .collect();
    let n_jumps = rng.gen_range(0..=2);
    let selfcal_jumps = (0..n_jumps)
        .map(|_| [rng.gen_range(0.0..dur), rng.gen_range(-0.4..0.4)])
        .collect();

    Scenario {
        duration_s: dur,
        frame_rate: DEFAULT_FRAME_RATE,
        room_type: room,
        width: SUITE_WIDTH,
        height: SUITE_HEIGHT,
        background_temp,
        entities,
        newborn: Some(newborn),
        distortion: DistortionConfig {
            noise_std: 0.15,
            drift: knots,
            selfcal_jumps,
            miscalibration_offset: rng.gen_range(-3.0..3.0),
        },
        seed,
    }
}

/// `n` randomized scenarios, deterministic in `seed`. Births fall uniformly
/// in the middle 60% of each video.
pub fn scenario_suite(n: usize, mix: RoomMix, seed: u64) -> Result<Vec<Scenario>, SimError> {
    if n == 0 {
        return Err(SimError::EmptySuite);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let noise_seed = rng.gen();
            let s = one_scenario(&mut rng, mix.room(i), noise_seed);
            s.validate()?;
            Ok(s)
        })
        .collect()
}

/// Renders scenarios on demand.
pub struct SimulatedCorpus {
    pub scenarios: Vec<Scenario>,
    pub prefix: String,
}

impl SimulatedCorpus {
    pub fn new(scenarios: Vec<Scenario>, prefix: &str) -> Self {
        Self {
            scenarios,
            prefix: prefix.to_string(),
        }
    }

    pub fn id(&self, index: usize) -> String {
        format!("{}{:03}", self.prefix, index)
    }
}

impl Corpus for SimulatedCorpus {
    fn len(&self) -> usize {
        self.scenarios.len()
    }

    fn load(&self, index: usize) -> Result<LabeledVideo, PipelineError> {
        let s = &self.scenarios[index];
        let (video, truth) = render_scene(s)?;
        let track = truth.track(s.frame_rate)?;
        Ok(LabeledVideo {
            id: self.id(index),
            video,
            track,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_distinct() {
        let a = scenario_suite(20, RoomMix::Mixed, 7).unwrap();
        let b = scenario_suite(20, RoomMix::Mixed, 7).unwrap();
        assert_eq!(a, b);
        let mut tobs: Vec<f64> = a.iter().map(|s| s.newborn.as_ref().unwrap().tob_s).collect();
        tobs.sort_by(f64::total_cmp);
        tobs.dedup();
        assert_eq!(tobs.len(), 20);
        let theatres = a
            .iter()
            .filter(|s| s.room_type == RoomType::OperationTheatre)
            .count();
        assert_eq!(theatres, 10);
    }

    #[test]
    fn single_birth_in_middle() {
        for seed in 0..50 {
            let s = &scenario_suite(1, RoomMix::Mixed, seed).unwrap()[0];
            let t = s.newborn.as_ref().unwrap().tob_s;
            assert!(t >= 0.2 * s.duration_s && t <= 0.8 * s.duration_s);
        }
    }

    #[test]
    fn room_profiles() {
        let s = scenario_suite(6, RoomMix::Theatre, 1).unwrap();
        assert!(s.iter().all(|s| s.room_type == RoomType::OperationTheatre));
        let s = scenario_suite(6, RoomMix::Delivery, 1).unwrap();
        assert!(s.iter().all(|s| s.room_type == RoomType::DeliveryRoom));
        assert!(matches!(
            scenario_suite(0, RoomMix::Mixed, 1),
            Err(SimError::EmptySuite)
        ));
    }

    #[test]
    fn corpus_ids() {
        let c = SimulatedCorpus::new(scenario_suite(2, RoomMix::Mixed, 3).unwrap(), "sim_");
        assert_eq!(c.id(1), "sim_001");
        assert_eq!(c.len(), 2);
    }
}
