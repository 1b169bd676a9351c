//! Logistic newborn scorer trained with a class-weighted cross-entropy.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    extract_features, Dataset, DetectorError, FeatureVector, ScoreSeries, FEATURE_LEN,
    FEATURE_VERSION,
};
use crate::gmm_norm::NormalizedVideo;

/// Scores are clamped to `[EPS, 1 - EPS]` before taking logs.
pub const EPS: f64 = 1e-7;

/// Inverse-frequency weights `S / (C * s_c)` for each class.
pub fn class_weights(counts: &[usize]) -> Result<Vec<f64>, DetectorError> {
    if let Some(class) = counts.iter().position(|&s| s == 0) {
        return Err(DetectorError::EmptyClass { class });
    }
    let total: usize = counts.iter().sum();
    let c = counts.len() as f64;
    Ok(counts
        .iter()
        .map(|&s| total as f64 / (c * s as f64))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassWeights {
    pub negative: f64,
    pub positive: f64,
}

impl ClassWeights {
    pub const UNIT: ClassWeights = ClassWeights {
        negative: 1.0,
        positive: 1.0,
    };

    pub fn from_counts(counts: [usize; 2]) -> Result<Self, DetectorError> {
        let w = class_weights(&counts)?;
        Ok(Self {
            negative: w[0],
            positive: w[1],
        })
    }
}

/// Weighted binary cross-entropy,
/// `-(w1 * y * ln(p) + w0 * (1 - y) * ln(1 - p))` with `p` clamped to
/// `[EPS, 1 - EPS]`.
pub fn weighted_bce(y: f64, y_hat: f64, w: ClassWeights) -> f64 {
    let p = y_hat.clamp(EPS, 1.0 - EPS);
    -(w.positive * y * p.ln() + w.negative * (1.0 - y) * (1.0 - p).ln())
}

/// Logistic function with the logit bounded so the result stays strictly
/// inside `(0, 1)`.
pub fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z.clamp(-36.0, 36.0)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub momentum: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            epochs: 30,
            batch_size: 16,
            momentum: 0.9,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingInfo {
    pub epochs: usize,
    pub learning_rate: f64,
    pub initial_loss: f64,
    pub final_loss: f64,
    /// Epoch whose parameters were kept (0 = initialization).
    pub best_epoch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub weights: [f64; FEATURE_LEN],
    pub bias: f64,
    pub feature_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<TrainingInfo>,
}

impl DetectorModel {
    pub fn zeros() -> Self {
        Self {
            weights: [0.0; FEATURE_LEN],
            bias: 0.0,
            feature_version: FEATURE_VERSION,
            training: None,
        }
    }

    pub fn logit(&self, f: &FeatureVector) -> f64 {
        self.bias
            + self
                .weights
                .iter()
                .zip(&f.0)
                .map(|(w, x)| w * x)
                .sum::<f64>()
    }

    pub fn score_features(&self, f: &FeatureVector) -> Result<f64, DetectorError> {
        if !f.is_finite() {
            return Err(DetectorError::NonFiniteFeatures);
        }
        Ok(logistic(self.logit(f)))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DetectorError> {
        let model: Self =
            serde_json::from_str(text).map_err(|e| DetectorError::ModelFormat(e.to_string()))?;
        if model.feature_version != FEATURE_VERSION {
            return Err(DetectorError::FeatureVersion(model.feature_version));
        }
        Ok(model)
    }
}

/// Parameters laid out as `[w_0 .. w_5, bias]`.
pub type Params = [f64; FEATURE_LEN + 1];

fn params_logit(p: &Params, x: &[f64; FEATURE_LEN]) -> f64 {
    p[FEATURE_LEN] + p[..FEATURE_LEN].iter().zip(x).map(|(w, x)| w * x).sum::<f64>()
}

/// Mean weighted loss of a logistic model over `(features, label)` pairs.
pub fn mean_loss(p: &Params, data: &[([f64; FEATURE_LEN], bool)], w: ClassWeights) -> f64 {
    data.iter()
        .map(|(x, y)| weighted_bce(*y as u8 as f64, logistic(params_logit(p, x)), w))
        .sum::<f64>()
        / data.len() as f64
}

/// Analytic gradient of [`mean_loss`] with respect to the parameters.
///
/// With `p = sigmoid(z)`, the per-sample derivative with respect to `z` is
/// `w0 * p` for a negative and `-w1 * (1 - p)` for a positive.
pub fn loss_gradient(p: &Params, data: &[([f64; FEATURE_LEN], bool)], w: ClassWeights) -> Params {
    let mut g = [0.0; FEATURE_LEN + 1];
    for (x, y) in data {
        let s = logistic(params_logit(p, x));
        let dz = if *y {
            -w.positive * (1.0 - s)
        } else {
            w.negative * s
        };
        for (gi, xi) in g.iter_mut().zip(x) {
            *gi += dz * xi;
        }
        g[FEATURE_LEN] += dz;
    }
    let n = data.len() as f64;
    g.iter_mut().for_each(|v| *v /= n);
    g
}

/// Minimizes the class-weighted mean loss with mini-batch SGD plus momentum.
///
/// Features are standardized internally and the weights folded back into
/// raw feature space. The parameters of the epoch with the lowest training
/// loss are kept, so the reported final loss never exceeds the initial one.
pub fn train_detector(ds: &Dataset, config: &TrainConfig) -> Result<DetectorModel, DetectorError> {
    if ds.counts[0] == 0 || ds.counts[1] == 0 {
        return Err(DetectorError::SingleClass {
            negatives: ds.counts[0],
            positives: ds.counts[1],
        });
    }
    let cw = ClassWeights::from_counts(ds.counts)?;

    let n = ds.len() as f64;
    let mut mu = [0.0; FEATURE_LEN];
    let mut sd = [0.0; FEATURE_LEN];
    for s in &ds.samples {
        for (m, x) in mu.iter_mut().zip(&s.features.0) {
            *m += x / n;
        }
    }
    for s in &ds.samples {
        for ((v, x), m) in sd.iter_mut().zip(&s.features.0).zip(&mu) {
            *v += (x - m) * (x - m) / n;
        }
    }
    for v in &mut sd {
        *v = if *v > 1e-24 { v.sqrt() } else { 1.0 };
    }
    let data: Vec<([f64; FEATURE_LEN], bool)> = ds
        .samples
        .iter()
        .map(|s| {
            let mut x = s.features.0;
            for ((xi, m), d) in x.iter_mut().zip(&mu).zip(&sd) {
                *xi = (*xi - m) / d;
            }
            (x, s.label)
        })
        .collect();

    let mut params: Params = [0.0; FEATURE_LEN + 1];
    let mut velocity: Params = [0.0; FEATURE_LEN + 1];
    let initial_loss = mean_loss(&params, &data, cw);
    let (mut best, mut best_loss, mut best_epoch) = (params, initial_loss, 0);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut batch = Vec::with_capacity(config.batch_size.max(1));
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size.max(1)) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| data[i]));
            let g = loss_gradient(&params, &batch, cw);
            for ((p, v), gi) in params.iter_mut().zip(&mut velocity).zip(&g) {
                *v = config.momentum * *v - config.learning_rate * gi;
                *p += *v;
            }
        }
        let loss = mean_loss(&params, &data, cw);
        log::debug!("epoch {epoch}: loss {loss:.6}");
        if loss < best_loss {
            (best, best_loss, best_epoch) = (params, loss, epoch);
        }
    }

    let mut weights = [0.0; FEATURE_LEN];
    let mut bias = best[FEATURE_LEN];
    for i in 0..FEATURE_LEN {
        weights[i] = best[i] / sd[i];
        bias -= best[i] * mu[i] / sd[i];
    }
    Ok(DetectorModel {
        weights,
        bias,
        feature_version: FEATURE_VERSION,
        training: Some(TrainingInfo {
            epochs: config.epochs,
            learning_rate: config.learning_rate,
            initial_loss,
            final_loss: best_loss,
            best_epoch,
        }),
    })
}

/// Presence score of one normalized, row-major frame.
pub fn score_frame(
    model: &DetectorModel,
    frame: &[f64],
    width: usize,
    height: usize,
) -> Result<f64, DetectorError> {
    model.score_features(&extract_features(frame, width, height))
}

pub fn score_video(
    model: &DetectorModel,
    video: &NormalizedVideo,
    video_id: &str,
) -> Result<ScoreSeries, DetectorError> {
    let (w, h) = (video.width as usize, video.height as usize);
    let scores = video
        .frames
        .par_iter()
        .map(|f| score_frame(model, f, w, h))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ScoreSeries {
        video_id: video_id.to_string(),
        frame_rate: video.frame_rate,
        scores,
    })
}

/// Same as [`score_video`] for features that were already extracted.
pub fn score_feature_series(
    model: &DetectorModel,
    features: &[FeatureVector],
    frame_rate: f64,
    video_id: &str,
) -> Result<ScoreSeries, DetectorError> {
    let scores = features
        .iter()
        .map(|f| model.score_features(f))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ScoreSeries {
        video_id: video_id.to_string(),
        frame_rate,
        scores,
    })
}
