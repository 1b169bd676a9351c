//! Precision, recall and Matthews correlation with VNB as the positive class.

use serde::{Deserialize, Serialize};

use super::DetectorError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Confusion {
    pub fn from_predictions(predicted: &[bool], actual: &[bool]) -> Self {
        let mut c = Confusion::default();
        for (&p, &a) in predicted.iter().zip(actual) {
            match (p, a) {
                (true, true) => c.tp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }
}

/// A ratio whose denominator may vanish; `value` is 0 in that case and
/// `degenerate` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub value: f64,
    pub degenerate: bool,
}

impl Metric {
    fn ratio(num: f64, den: f64) -> Self {
        if den == 0.0 {
            Metric {
                value: 0.0,
                degenerate: true,
            }
        } else {
            Metric {
                value: num / den,
                degenerate: false,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionMetrics {
    pub confusion: Confusion,
    pub precision: Metric,
    pub recall: Metric,
    pub mcc: Metric,
}

impl DetectionMetrics {
    pub fn from_confusion(c: Confusion) -> Self {
        let (tp, tn, fp, fn_) = (c.tp as f64, c.tn as f64, c.fp as f64, c.fn_ as f64);
        let den = ((tn + fn_) * (fp + tp) * (tn + fp) * (fn_ + tp)).sqrt();
        Self {
            confusion: c,
            precision: Metric::ratio(tp, tp + fp),
            recall: Metric::ratio(tp, tp + fn_),
            mcc: Metric::ratio(tn * tp - fp * fn_, den),
        }
    }
}

/// Thresholds scores (`score >= threshold` is a positive) and compares them
/// with the labels.
pub fn evaluate_detector(
    scores: &[f64],
    labels: &[bool],
    threshold: f64,
) -> Result<DetectionMetrics, DetectorError> {
    if scores.len() != labels.len() {
        return Err(DetectorError::LengthMismatch {
            what: "scores vs labels",
            left: scores.len(),
            right: labels.len(),
        });
    }
    let predicted: Vec<bool> = scores.iter().map(|&s| s >= threshold).collect();
    Ok(DetectionMetrics::from_confusion(Confusion::from_predictions(
        &predicted, labels,
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect() {
        let m = evaluate_detector(&[0.9, 0.1, 0.8, 0.2], &[true, false, true, false], 0.5).unwrap();
        assert_eq!(m.precision.value, 1.0);
        assert_eq!(m.recall.value, 1.0);
        assert_eq!(m.mcc.value, 1.0);
    }

    #[test]
    fn hand_mcc() {
        let c = Confusion {
            tp: 2,
            tn: 2,
            fp: 1,
            fn_: 1,
        };
        let m = DetectionMetrics::from_confusion(c);
        assert!((m.mcc.value - 1.0 / 3.0).abs() < 1e-12);
        assert!((m.precision.value - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn one_sided_predictions_are_degenerate() {
        let m = evaluate_detector(&[0.9, 0.9, 0.9], &[true, false, true], 0.5).unwrap();
        assert!(m.mcc.degenerate);
        assert_eq!(m.mcc.value, 0.0);
        assert!(!m.precision.degenerate);
        let m = evaluate_detector(&[0.1, 0.1], &[false, false], 0.5).unwrap();
        assert!(m.precision.degenerate && m.recall.degenerate && m.mcc.degenerate);
    }

    #[test]
    fn length_mismatch() {
        assert!(evaluate_detector(&[0.1], &[true, false], 0.5).is_err());
    }
}
