//! False-positive rate of smoothed scores across confidence thresholds.

use serde::{Deserialize, Serialize};

use super::TobError;
use crate::thermal_io::FrameClass;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FprPoint {
    pub gamma: f64,
    pub fpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FprSweep {
    pub points: Vec<FprPoint>,
    /// No pre-birth NNB frame was available; every FPR is reported as 0.
    pub degenerate: bool,
}

impl FprSweep {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gamma,fpr\n");
        for p in &self.points {
            out.push_str(&format!("{},{}\n", p.gamma, p.fpr));
        }
        out
    }
}

/// `0.10, 0.11, ..., 0.99` with 0.9 guaranteed to be present exactly.
pub fn default_threshold_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (10..=99).map(|i| i as f64 / 100.0).collect();
    if !grid.contains(&0.9) {
        grid.push(0.9);
        grid.sort_by(f64::total_cmp);
    }
    grid
}

/// FPR at each threshold over pre-birth NNB frames (VNB frames are the
/// positives and do not enter the rate; post-birth NNB frames are ignored).
/// A frame is predicted positive when its smoothed score is `>= gamma`.
pub fn fpr_sweep(
    videos: &[(&[f64], &[FrameClass])],
    thresholds: &[f64],
) -> Result<FprSweep, TobError> {
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(TobError::UnsortedThresholds);
    }
    let mut negatives = Vec::new();
    for (scores, classes) in videos {
        if scores.len() != classes.len() {
            return Err(TobError::LengthMismatch {
                scores: scores.len(),
                labels: classes.len(),
            });
        }
        negatives.extend(
            scores
                .iter()
                .zip(classes.iter())
                .filter(|(_, c)| **c == FrameClass::NnbBeforeBirth)
                .map(|(s, _)| *s),
        );
    }
    let degenerate = negatives.is_empty();
    negatives.sort_unstable_by(f64::total_cmp);
    let n = negatives.len() as f64;
    let points = thresholds
        .iter()
        .map(|&gamma| {
            // negatives below gamma are true negatives
            let tn = negatives.partition_point(|&s| s < gamma);
            let fp = negatives.len() - tn;
            FprPoint {
                gamma,
                fpr: if degenerate { 0.0 } else { fp as f64 / n },
            }
        })
        .collect();
    Ok(FprSweep { points, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use FrameClass::*;

    #[test]
    fn extremes() {
        let scores = [0.2, 0.4, 0.95, 0.6];
        let classes = [NnbBeforeBirth, NnbBeforeBirth, Vnb, NnbBeforeBirth];
        let s = fpr_sweep(&[(&scores, &classes)], &[0.0, 0.5, 0.61]).unwrap();
        assert_eq!(s.points[0].fpr, 1.0);
        assert!((s.points[1].fpr - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.points[2].fpr, 0.0);
        assert!(!s.degenerate);
    }

    #[test]
    fn post_birth_frames_ignored() {
        let scores = [0.2, 0.95, 0.99];
        let classes = [NnbBeforeBirth, Vnb, NnbAfterBirth];
        let s = fpr_sweep(&[(&scores, &classes)], &[0.9]).unwrap();
        assert_eq!(s.points[0].fpr, 0.0);
    }

    #[test]
    fn degenerate_and_errors() {
        let s = fpr_sweep(&[(&[0.9], &[Vnb])], &[0.5]).unwrap();
        assert!(s.degenerate);
        assert_eq!(s.points[0].fpr, 0.0);
        assert!(matches!(
            fpr_sweep(&[(&[0.9], &[Vnb])], &[0.5, 0.4]),
            Err(TobError::UnsortedThresholds)
        ));
        assert!(fpr_sweep(&[(&[0.9, 0.1], &[Vnb])], &[0.5]).is_err());
    }

    #[test]
    fn grid_contains_point_nine() {
        let g = default_threshold_grid();
        assert!(g.contains(&0.9));
        assert_eq!(g.first(), Some(&0.1));
        assert_eq!(g.last(), Some(&0.99));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        let csv = fpr_sweep(&[(&[0.3], &[NnbBeforeBirth])], &g).unwrap().to_csv();
        assert!(csv.starts_with("gamma,fpr\n"));
    }
}
