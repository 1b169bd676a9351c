//! Per-video VNB/NNB/ToB annotations.
//!
//! Only the visible-newborn intervals are stored; every other frame is NNB.
//! The on-disk form is a small JSON document:
//!
//! ```json
//! {"fps": 8.33, "n_frames": 1500, "vnb": [[100, 200]], "tob_frame": 100}
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("malformed annotation document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("interval [{start}, {end}] has start after end")]
    Reversed { start: usize, end: usize },
    #[error("interval [{start}, {end}] exceeds last frame {last}")]
    OutOfRange {
        start: usize,
        end: usize,
        last: usize,
    },
    #[error("intervals [{}, {}] and [{}, {}] overlap", a[0], a[1], b[0], b[1])]
    Overlap { a: [usize; 2], b: [usize; 2] },
    #[error("tob_frame {tob} outside [0, {last}]")]
    TobOutOfRange { tob: usize, last: usize },
    #[error("annotation needs n_frames >= 1 and a positive fps")]
    BadHeader,
    #[error("annotation covers {expected} frames, video has {actual}")]
    LengthMismatch { expected: usize, actual: usize },
}

#[derive(Debug, Serialize, Deserialize)]
struct Document {
    fps: f64,
    n_frames: usize,
    #[serde(default)]
    vnb: Vec<[usize; 2]>,
    #[serde(default)]
    tob_frame: Option<usize>,
}

/// Label of a single frame relative to the visible intervals and the birth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameClass {
    Vnb,
    NnbBeforeBirth,
    NnbAfterBirth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationTrack {
    pub fps: f64,
    pub n_frames: usize,
    /// Sorted, disjoint, non-adjacent inclusive frame ranges.
    pub vnb_intervals: Vec<[usize; 2]>,
    pub tob_frame: Option<usize>,
}

/// Sorts intervals and merges ones that touch end-to-start. Overlaps are an
/// error rather than being merged.
pub fn normalize_intervals(
    mut intervals: Vec<[usize; 2]>,
) -> Result<Vec<[usize; 2]>, AnnotationError> {
    for iv in &intervals {
        if iv[0] > iv[1] {
            return Err(AnnotationError::Reversed {
                start: iv[0],
                end: iv[1],
            });
        }
    }
    intervals.sort_unstable();
    let mut out: Vec<[usize; 2]> = Vec::with_capacity(intervals.len());
    for iv in intervals {
        match out.last_mut() {
            Some(prev) if iv[0] <= prev[1] => {
                return Err(AnnotationError::Overlap { a: *prev, b: iv });
            }
            Some(prev) if iv[0] == prev[1] + 1 => prev[1] = iv[1],
            _ => out.push(iv),
        }
    }
    Ok(out)
}

impl AnnotationTrack {
    pub fn new(
        fps: f64,
        n_frames: usize,
        vnb_intervals: Vec<[usize; 2]>,
        tob_frame: Option<usize>,
    ) -> Result<Self, AnnotationError> {
        if n_frames == 0 || !(fps > 0.0 && fps.is_finite()) {
            return Err(AnnotationError::BadHeader);
        }
        let last = n_frames - 1;
        let vnb_intervals = normalize_intervals(vnb_intervals)?;
        if let Some(iv) = vnb_intervals.iter().find(|iv| iv[1] > last) {
            return Err(AnnotationError::OutOfRange {
                start: iv[0],
                end: iv[1],
                last,
            });
        }
        if let Some(tob) = tob_frame {
            if tob > last {
                return Err(AnnotationError::TobOutOfRange { tob, last });
            }
        }
        Ok(Self {
            fps,
            n_frames,
            vnb_intervals,
            tob_frame,
        })
    }

    /// Builds a track from per-frame visibility flags.
    pub fn from_labels(
        fps: f64,
        labels: &[bool],
        tob_frame: Option<usize>,
    ) -> Result<Self, AnnotationError> {
        let mut intervals = Vec::new();
        let mut start = None;
        for (i, &v) in labels.iter().enumerate() {
            match (v, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    intervals.push([s, i - 1]);
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            intervals.push([s, labels.len() - 1]);
        }
        Self::new(fps, labels.len(), intervals, tob_frame)
    }

    /// Whole seconds from video start to the annotated birth.
    pub fn tob_seconds(&self) -> Option<i64> {
        self.tob_frame
            .map(|n| (n as f64 / self.fps).floor() as i64)
    }

    pub fn is_vnb(&self, frame: usize) -> bool {
        // intervals are sorted: binary search on starts
        let idx = self.vnb_intervals.partition_point(|iv| iv[0] <= frame);
        idx > 0 && frame <= self.vnb_intervals[idx - 1][1]
    }

    pub fn vnb_labels(&self) -> Vec<bool> {
        let mut labels = vec![false; self.n_frames];
        for iv in &self.vnb_intervals {
            labels[iv[0]..=iv[1]].iter_mut().for_each(|l| *l = true);
        }
        labels
    }

    pub fn frame_classes(&self) -> Vec<FrameClass> {
        let tob = self.tob_frame.unwrap_or(usize::MAX);
        self.vnb_labels()
            .into_iter()
            .enumerate()
            .map(|(n, vnb)| match (vnb, n < tob) {
                (true, _) => FrameClass::Vnb,
                (false, true) => FrameClass::NnbBeforeBirth,
                (false, false) => FrameClass::NnbAfterBirth,
            })
            .collect()
    }

    pub fn check_length(&self, n_frames: usize) -> Result<(), AnnotationError> {
        if self.n_frames == n_frames {
            Ok(())
        } else {
            Err(AnnotationError::LengthMismatch {
                expected: self.n_frames,
                actual: n_frames,
            })
        }
    }

    pub fn from_json(text: &str) -> Result<Self, AnnotationError> {
        let doc: Document = serde_json::from_str(text)?;
        Self::new(doc.fps, doc.n_frames, doc.vnb, doc.tob_frame)
    }

    pub fn to_json(&self) -> String {
        let doc = Document {
            fps: self.fps,
            n_frames: self.n_frames,
            vnb: self.vnb_intervals.clone(),
            tob_frame: self.tob_frame,
        };
        serde_json::to_string(&doc).expect("annotation serializes")
    }
}
