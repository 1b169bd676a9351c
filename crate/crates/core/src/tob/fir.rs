use super::TobError;
use crate::detector::ScoreSeries;

/// Causal FIR filter; samples before the start of the signal are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    coefficients: Vec<f64>,
}

impl FirFilter {
    /// `k` taps of `1/k`.
    pub fn moving_average(k: usize) -> Result<Self, TobError> {
        if k == 0 {
            return Err(TobError::FilterLength(k));
        }
        Ok(Self {
            coefficients: vec![1.0 / k as f64; k],
        })
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `out[n] = sum_k h[k] * x[n - k]`, same length as `x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..x.len())
            .map(|n| {
                self.coefficients
                    .iter()
                    .take(n + 1)
                    .enumerate()
                    .map(|(k, h)| h * x[n - k])
                    .sum()
            })
            .collect()
    }
}

/// Moving-average smoothing of a score series. Output stays within `[0, 1]`.
pub fn fir_smooth(series: &ScoreSeries, k: usize) -> Result<ScoreSeries, TobError> {
    let filter = FirFilter::moving_average(k)?;
    Ok(ScoreSeries {
        video_id: series.video_id.clone(),
        frame_rate: series.frame_rate,
        scores: filter
            .apply(&series.scores)
            .into_iter()
            .map(|v| v.clamp(0.0, 1.0))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(scores: Vec<f64>) -> ScoreSeries {
        ScoreSeries::new("t", 8.33, scores).unwrap()
    }

    #[test]
    fn constant_ramps_up_then_holds() {
        let out = fir_smooth(&series(vec![0.6; 60]), 25).unwrap();
        for (n, v) in out.scores.iter().enumerate() {
            let expect = if n >= 24 { 0.6 } else { 0.6 * (n + 1) as f64 / 25.0 };
            assert!((v - expect).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn unit_length_is_identity() {
        let x = vec![0.1, 0.7, 0.3];
        assert_eq!(fir_smooth(&series(x.clone()), 1).unwrap().scores, x);
    }

    #[test]
    fn impulse_response() {
        let mut x = vec![0.0; 40];
        x[0] = 1.0;
        let out = fir_smooth(&series(x), 25).unwrap();
        for (n, v) in out.scores.iter().enumerate() {
            let expect = if n < 25 { 1.0 / 25.0 } else { 0.0 };
            assert!((v - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_length_rejected() {
        assert!(matches!(
            fir_smooth(&series(vec![0.5]), 0),
            Err(TobError::FilterLength(0))
        ));
    }

    #[test]
    fn coefficients_sum_to_one() {
        let f = FirFilter::moving_average(25).unwrap();
        assert_eq!(f.len(), 25);
        assert!((f.coefficients().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
