//! Training-set construction from annotated videos.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{extract_features, DetectorError, FeatureVector};
use crate::gmm_norm::NormalizedVideo;
use crate::thermal_io::AnnotationTrack;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: FeatureVector,
    /// `true` for VNB, `false` for NNB.
    pub label: bool,
    pub video_id: String,
    pub frame: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    /// Sample count per class, indexed NNB = 0, VNB = 1.
    pub counts: [usize; 2],
}

/// Frames that enter the training set, with their labels.
///
/// Every VNB frame is kept. NNB frames before the annotated birth are
/// thinned to the first frame of every `floor(fps / nnb_hz)` within each
/// contiguous run; NNB frames at or after the birth are dropped. Without a
/// birth annotation every NNB frame counts as pre-birth.
pub fn select_training_frames(track: &AnnotationTrack, nnb_hz: f64) -> Vec<(usize, bool)> {
    let stride = ((track.fps / nnb_hz).floor() as usize).max(1);
    let tob = track.tob_frame.unwrap_or(usize::MAX);
    let labels = track.vnb_labels();
    let mut out = Vec::new();
    let mut run_start: Option<usize> = None;
    for (n, &vnb) in labels.iter().enumerate() {
        if vnb {
            run_start = None;
            out.push((n, true));
        } else if n < tob {
            let start = *run_start.get_or_insert(n);
            if (n - start) % stride == 0 {
                out.push((n, false));
            }
        } else {
            run_start = None;
        }
    }
    out
}

impl Dataset {
    pub fn push(&mut self, sample: Sample) {
        self.counts[sample.label as usize] += 1;
        self.samples.push(sample);
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Adds the selected frames of one video given its precomputed per-frame
    /// features.
    pub fn add_video_features(
        &mut self,
        video_id: &str,
        features: &[FeatureVector],
        track: &AnnotationTrack,
        nnb_hz: f64,
    ) -> Result<(), DetectorError> {
        track
            .check_length(features.len())
            .map_err(|_| DetectorError::LengthMismatch {
                what: "annotation vs video",
                left: track.n_frames,
                right: features.len(),
            })?;
        for (frame, label) in select_training_frames(track, nnb_hz) {
            self.push(Sample {
                features: features[frame],
                label,
                video_id: video_id.to_string(),
                frame,
            });
        }
        Ok(())
    }

    pub fn add_video(
        &mut self,
        video_id: &str,
        video: &NormalizedVideo,
        track: &AnnotationTrack,
        nnb_hz: f64,
    ) -> Result<(), DetectorError> {
        track
            .check_length(video.len())
            .map_err(|_| DetectorError::LengthMismatch {
                what: "annotation vs video",
                left: track.n_frames,
                right: video.len(),
            })?;
        let (w, h) = (video.width as usize, video.height as usize);
        for (frame, label) in select_training_frames(track, nnb_hz) {
            self.push(Sample {
                features: extract_features(&video.frames[frame], w, h),
                label,
                video_id: video_id.to_string(),
                frame,
            });
        }
        Ok(())
    }
}

/// Builds a dataset from paired videos and tracks; video ids are their
/// positions in the slice.
pub fn build_dataset(
    videos: &[NormalizedVideo],
    tracks: &[AnnotationTrack],
    nnb_hz: f64,
) -> Result<Dataset, DetectorError> {
    if videos.len() != tracks.len() {
        return Err(DetectorError::LengthMismatch {
            what: "videos vs tracks",
            left: videos.len(),
            right: tracks.len(),
        });
    }
    let mut ds = Dataset::default();
    for (i, (v, t)) in videos.iter().zip(tracks).enumerate() {
        ds.add_video(&i.to_string(), v, t, nnb_hz)?;
    }
    Ok(ds)
}

/// Splits ids into training and validation sets after a seeded shuffle;
/// `train_fraction` of them (rounded) go to training.
pub fn split_train_validation<T: Clone>(
    ids: &[T],
    train_fraction: f64,
    seed: u64,
) -> (Vec<T>, Vec<T>) {
    let mut shuffled = ids.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let k = ((ids.len() as f64 * train_fraction).round() as usize).min(ids.len());
    let validation = shuffled.split_off(k);
    (shuffled, validation)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strided_pre_birth_nnb() {
        let t = AnnotationTrack::new(8.33, 100, vec![[80, 99]], Some(80)).unwrap();
        let sel = select_training_frames(&t, 1.0);
        let vnb = sel.iter().filter(|s| s.1).count();
        let nnb: Vec<usize> = sel.iter().filter(|s| !s.1).map(|s| s.0).collect();
        assert_eq!(vnb, 20);
        assert_eq!(nnb, (0..80).step_by(8).collect::<Vec<_>>());
        assert_eq!(nnb.len(), 10);
    }

    #[test]
    fn all_nnb_and_all_vnb() {
        let t = AnnotationTrack::new(8.33, 20, vec![], None).unwrap();
        let sel = select_training_frames(&t, 1.0);
        assert_eq!(sel, vec![(0, false), (8, false), (16, false)]);
        let t = AnnotationTrack::new(8.33, 20, vec![[0, 19]], Some(0)).unwrap();
        assert!(select_training_frames(&t, 1.0).iter().all(|s| s.1));
    }

    #[test]
    fn post_birth_nnb_dropped_and_runs_restart() {
        // NNB run 0..=9, VNB 10..=12, NNB 13..=29 with birth at 10
        let t = AnnotationTrack::new(8.33, 30, vec![[10, 12]], Some(10)).unwrap();
        let sel = select_training_frames(&t, 1.0);
        assert!(sel.iter().all(|&(n, vnb)| vnb || n < 10));
        // pre-birth NNB with a VNB glimpse before the birth annotation
        let t = AnnotationTrack::new(8.33, 30, vec![[3, 4], [20, 25]], Some(20)).unwrap();
        let nnb: Vec<usize> = select_training_frames(&t, 1.0)
            .into_iter()
            .filter(|s| !s.1)
            .map(|s| s.0)
            .collect();
        assert_eq!(nnb, vec![0, 5, 13]);
    }

    #[test]
    fn mismatched_inputs() {
        let t = AnnotationTrack::new(8.33, 5, vec![], None).unwrap();
        let v = NormalizedVideo {
            width: 1,
            height: 1,
            frame_rate: 8.33,
            frames: vec![vec![0.0]; 4],
        };
        assert!(build_dataset(&[v.clone()], &[t.clone(), t.clone()], 1.0).is_err());
        assert!(build_dataset(&[v], &[t], 1.0).is_err());
    }

    #[test]
    fn split_is_seeded() {
        let ids: Vec<u32> = (0..20).collect();
        let (a, b) = split_train_validation(&ids, 0.85, 4);
        assert_eq!(a.len(), 17);
        assert_eq!(b.len(), 3);
        assert_eq!(split_train_validation(&ids, 0.85, 4), (a, b));
    }
}
