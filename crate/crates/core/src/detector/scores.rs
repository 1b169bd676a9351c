//! Per-frame score series and their `frame,score` CSV form.

use std::fmt::Write as _;

use super::DetectorError;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSeries {
    pub video_id: String,
    pub frame_rate: f64,
    pub scores: Vec<f64>,
}

impl ScoreSeries {
    pub fn new(
        video_id: impl Into<String>,
        frame_rate: f64,
        scores: Vec<f64>,
    ) -> Result<Self, DetectorError> {
        if let Some((frame, &value)) = scores
            .iter()
            .enumerate()
            .find(|(_, s)| !(0.0..=1.0).contains(*s))
        {
            return Err(DetectorError::ScoreRange { frame, value });
        }
        Ok(Self {
            video_id: video_id.into(),
            frame_rate,
            scores,
        })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Writes `frame,score` rows. Scores use the shortest representation that
/// parses back to the same `f64`.
pub fn export_scores(series: &ScoreSeries) -> String {
    let mut out = String::with_capacity(16 * series.len() + 12);
    out.push_str("frame,score\n");
    for (i, s) in series.scores.iter().enumerate() {
        writeln!(out, "{i},{s}").unwrap();
    }
    out
}

/// Parses a `frame,score` CSV. Frames must run 0, 1, 2, ... without gaps and
/// every score must lie in `[0, 1]`.
pub fn import_scores(
    text: &str,
    video_id: &str,
    frame_rate: f64,
) -> Result<ScoreSeries, DetectorError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, header)) if header.trim().eq_ignore_ascii_case("frame,score") => {}
        Some((_, header)) => {
            return Err(DetectorError::ScoreParse {
                line: 1,
                message: format!("expected header \"frame,score\", got {header:?}"),
            })
        }
        None => {
            return Err(DetectorError::ScoreParse {
                line: 1,
                message: "empty score file".into(),
            })
        }
    }
    let mut scores = Vec::new();
    for (idx, line) in lines {
        let parse_err = |message: String| DetectorError::ScoreParse {
            line: idx + 1,
            message,
        };
        let (frame, score) = line
            .split_once(',')
            .ok_or_else(|| parse_err(format!("expected two columns in {line:?}")))?;
        let frame: usize = frame
            .trim()
            .parse()
            .map_err(|e| parse_err(format!("frame index: {e}")))?;
        let score: f64 = score
            .trim()
            .parse()
            .map_err(|e| parse_err(format!("score: {e}")))?;
        if frame != scores.len() {
            return Err(DetectorError::ScoreGap {
                expected: scores.len(),
                found: frame,
            });
        }
        if !(0.0..=1.0).contains(&score) {
            return Err(DetectorError::ScoreRange {
                frame,
                value: score,
            });
        }
        scores.push(score);
    }
    ScoreSeries::new(video_id, frame_rate, scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn three_rows() {
        let s = import_scores("frame,score\n0,0.1\n1,0.9\n2,0.5\n", "v", 8.33).unwrap();
        assert_eq!(s.scores, vec![0.1, 0.9, 0.5]);
    }

    #[test]
    fn gap_and_range_errors() {
        assert!(matches!(
            import_scores("frame,score\n0,0.1\n2,0.5\n", "v", 8.33),
            Err(DetectorError::ScoreGap {
                expected: 1,
                found: 2
            })
        ));
        assert!(matches!(
            import_scores("frame,score\n0,1.5\n", "v", 8.33),
            Err(DetectorError::ScoreRange { frame: 0, .. })
        ));
        assert!(matches!(
            import_scores("score\n0,0.5\n", "v", 8.33),
            Err(DetectorError::ScoreParse { line: 1, .. })
        ));
        assert!(matches!(
            import_scores("frame,score\n0;0.5\n", "v", 8.33),
            Err(DetectorError::ScoreParse { line: 2, .. })
        ));
    }

    proptest! {
        #[test]
        fn export_import_round_trip(scores in proptest::collection::vec(0.0f64..=1.0, 0..200)) {
            let s = ScoreSeries::new("v", 8.33, scores).unwrap();
            let back = import_scores(&export_scores(&s), "v", 8.33).unwrap();
            for (a, b) in s.scores.iter().zip(&back.scores) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
            prop_assert_eq!(back.len(), s.len());
        }
    }
}
