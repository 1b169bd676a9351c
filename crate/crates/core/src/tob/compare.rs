//! End-to-end runs over a corpus: normalize, score, smooth, estimate, and
//! summarize, for one or more normalization variants.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{error_stats, estimate_tob, fir_smooth, TobError, DEFAULT_FILTER_LEN, DEFAULT_GAMMA};
use crate::detector::{
    extract_features, score_feature_series, train_detector, Dataset, DetectorError, DetectorModel,
    FeatureVector, ScoreSeries, TrainConfig, DEFAULT_NNB_HZ,
};
use crate::gmm_norm::{maxmin_normalize, normalize_pipeline, GmmError, GmmNormConfig, NormalizedVideo};
use crate::simulator::SimError;
use crate::thermal_io::{AnnotationError, AnnotationTrack, ThermalIoError, ThermalVideo};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Io(#[from] ThermalIoError),
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
    #[error(transparent)]
    Gmm(#[from] GmmError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Tob(#[from] TobError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<PipelineError>,
    },
}

impl PipelineError {
    pub fn context(self, context: impl Into<String>) -> Self {
        PipelineError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

/// A recording and its annotations.
#[derive(Debug, Clone)]
pub struct LabeledVideo {
    pub id: String,
    pub video: ThermalVideo,
    pub track: AnnotationTrack,
}

/// Random access to labeled videos. Implementations may load or render
/// lazily so a corpus never has to sit in memory at once.
pub trait Corpus: Sync {
    fn len(&self) -> usize;

    fn load(&self, index: usize) -> Result<LabeledVideo, PipelineError>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub struct InMemoryCorpus(pub Vec<LabeledVideo>);

impl Corpus for InMemoryCorpus {
    fn len(&self) -> usize {
        self.0.len()
    }

    fn load(&self, index: usize) -> Result<LabeledVideo, PipelineError> {
        Ok(self.0[index].clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Gmm(GmmNormConfig),
    MaxMin,
}

impl Normalization {
    pub fn apply(&self, video: &ThermalVideo) -> Result<NormalizedVideo, PipelineError> {
        Ok(match self {
            Normalization::Gmm(cfg) => normalize_pipeline(video, cfg)?.video,
            Normalization::MaxMin => maxmin_normalize(video),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub name: String,
    pub normalization: Normalization,
}

impl Variant {
    pub fn gmm() -> Self {
        Self {
            name: "gmm".into(),
            normalization: Normalization::Gmm(GmmNormConfig::default()),
        }
    }

    pub fn maxmin() -> Self {
        Self {
            name: "maxmin".into(),
            normalization: Normalization::MaxMin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub filter_k: usize,
    pub gamma: f64,
    pub nnb_hz: f64,
    pub train: TrainConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            filter_k: DEFAULT_FILTER_LEN,
            gamma: DEFAULT_GAMMA,
            nnb_hz: DEFAULT_NNB_HZ,
            train: TrainConfig::default(),
        }
    }
}

/// Per-frame features of one normalized video, kept instead of the frames.
#[derive(Debug, Clone)]
pub struct VideoFeatures {
    pub id: String,
    pub frame_rate: f64,
    pub track: AnnotationTrack,
    pub features: Vec<FeatureVector>,
}

/// Features of every frame, in order.
pub fn features_of(video: &NormalizedVideo) -> Vec<FeatureVector> {
    let (w, h) = (video.width as usize, video.height as usize);
    video
        .frames
        .iter()
        .map(|f| extract_features(f, w, h))
        .collect()
}

/// Loads every video once and extracts features under each variant.
/// Result is indexed `[variant][video]`, videos in corpus order.
pub fn corpus_features(
    corpus: &dyn Corpus,
    variants: &[Variant],
) -> Result<Vec<Vec<VideoFeatures>>, PipelineError> {
    let per_video: Vec<Vec<VideoFeatures>> = (0..corpus.len())
        .into_par_iter()
        .map(|i| {
            let lv = corpus.load(i)?;
            lv.track
                .check_length(lv.video.len())
                .map_err(|e| PipelineError::from(e).context(lv.id.clone()))?;
            variants
                .iter()
                .map(|v| {
                    let norm = v
                        .normalization
                        .apply(&lv.video)
                        .map_err(|e| e.context(format!("{} ({})", lv.id, v.name)))?;
                    Ok(VideoFeatures {
                        id: lv.id.clone(),
                        frame_rate: lv.video.frame_rate,
                        track: lv.track.clone(),
                        features: features_of(&norm),
                    })
                })
                .collect()
        })
        .collect::<Result<_, PipelineError>>()?;

    let mut out: Vec<Vec<VideoFeatures>> = variants.iter().map(|_| Vec::new()).collect();
    for video in per_video {
        for (slot, f) in out.iter_mut().zip(video) {
            slot.push(f);
        }
    }
    Ok(out)
}

/// One row of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoResult {
    pub id: String,
    pub t_hat: Option<i64>,
    pub t_ann: Option<i64>,
    pub err: Option<i64>,
}

pub fn evaluate_video(
    id: &str,
    smoothed: &ScoreSeries,
    track: &AnnotationTrack,
    gamma: f64,
) -> VideoResult {
    let est = estimate_tob(smoothed, gamma);
    let t_ann = track.tob_seconds();
    VideoResult {
        id: id.to_string(),
        t_hat: est.seconds,
        t_ann,
        err: est.seconds.zip(t_ann).map(|(a, b)| a - b),
    }
}

/// Aggregate of one variant over a corpus. Quartiles and mean are over
/// `|err|` of the videos with both an estimate and an annotated birth, and
/// are absent when there is no such video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub variant: String,
    pub per_video: Vec<VideoResult>,
    pub q1: Option<f64>,
    pub q2: Option<f64>,
    pub q3: Option<f64>,
    pub mean: Option<f64>,
    pub found_fraction: f64,
}

impl VariantReport {
    /// Sorts rows by id and computes the aggregates.
    pub fn from_results(variant: &str, mut per_video: Vec<VideoResult>) -> Self {
        per_video.sort_by(|a, b| a.id.cmp(&b.id));
        let annotated = per_video.iter().filter(|r| r.t_ann.is_some()).count();
        let errors: Vec<f64> = per_video
            .iter()
            .filter_map(|r| r.err.map(|e| e as f64))
            .collect();
        let stats = error_stats(&errors, errors.len(), annotated).ok();
        Self {
            variant: variant.to_string(),
            q1: stats.as_ref().map(|s| s.q1),
            q2: stats.as_ref().map(|s| s.q2),
            q3: stats.as_ref().map(|s| s.q3),
            mean: stats.as_ref().map(|s| s.mean),
            found_fraction: if annotated == 0 {
                0.0
            } else {
                errors.len() as f64 / annotated as f64
            },
            per_video,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Flat per-video table; empty cells for missing values.
    pub fn to_csv(&self) -> String {
        fn cell(v: Option<i64>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        let mut out = String::from("variant,id,t_hat,t_ann,err\n");
        for r in &self.per_video {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.variant,
                r.id,
                cell(r.t_hat),
                cell(r.t_ann),
                cell(r.err)
            ));
        }
        out
    }
}

/// Raw and smoothed scores of every evaluated video plus the report.
#[derive(Debug, Clone)]
pub struct VariantRun {
    pub report: VariantReport,
    pub raw: Vec<ScoreSeries>,
    pub smoothed: Vec<ScoreSeries>,
}

pub fn run_variant(
    name: &str,
    model: &DetectorModel,
    videos: &[VideoFeatures],
    config: &PipelineConfig,
) -> Result<VariantRun, PipelineError> {
    let mut raw = Vec::with_capacity(videos.len());
    let mut smoothed = Vec::with_capacity(videos.len());
    let mut rows = Vec::with_capacity(videos.len());
    for v in videos {
        let scores = score_feature_series(model, &v.features, v.frame_rate, &v.id)?;
        let sm = fir_smooth(&scores, config.filter_k)?;
        rows.push(evaluate_video(&v.id, &sm, &v.track, config.gamma));
        raw.push(scores);
        smoothed.push(sm);
    }
    Ok(VariantRun {
        report: VariantReport::from_results(name, rows),
        raw,
        smoothed,
    })
}

pub fn dataset_from_features(videos: &[VideoFeatures], nnb_hz: f64) -> Result<Dataset, PipelineError> {
    let mut ds = Dataset::default();
    for v in videos {
        ds.add_video_features(&v.id, &v.features, &v.track, nnb_hz)?;
    }
    Ok(ds)
}

/// Trains a detector per variant on `train` and evaluates it on `eval`.
/// Every variant sees the same videos and the same training seed.
pub fn compare_normalizations(
    train: &dyn Corpus,
    eval: &dyn Corpus,
    variants: &[Variant],
    config: &PipelineConfig,
) -> Result<Vec<VariantReport>, PipelineError> {
    let train_features = corpus_features(train, variants)?;
    let eval_features = corpus_features(eval, variants)?;
    variants
        .iter()
        .zip(train_features.iter().zip(&eval_features))
        .map(|(variant, (tr, ev))| {
            let ds = dataset_from_features(tr, config.nnb_hz)?;
            let model = train_detector(&ds, &config.train)?;
            Ok(run_variant(&variant.name, &model, ev, config)?.report)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: &str, t_hat: Option<i64>, t_ann: Option<i64>) -> VideoResult {
        VideoResult {
            id: id.into(),
            t_hat,
            t_ann,
            err: t_hat.zip(t_ann).map(|(a, b)| a - b),
        }
    }

    #[test]
    fn report_aggregates() {
        let r = VariantReport::from_results(
            "gmm",
            vec![
                row("b", Some(12), Some(10)),
                row("a", Some(9), Some(10)),
                row("c", None, Some(10)),
                row("d", Some(5), None),
            ],
        );
        assert_eq!(r.per_video[0].id, "a");
        assert!((r.found_fraction - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.q2, Some(1.5));
        assert_eq!(r.mean, Some(1.5));
        let csv = r.to_csv();
        assert!(csv.contains("gmm,c,,10,\n"));
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in ["variant", "per_video", "q1", "q2", "q3", "mean", "found_fraction"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn nothing_found() {
        let r = VariantReport::from_results("x", vec![row("a", None, Some(3))]);
        assert_eq!(r.q2, None);
        assert_eq!(r.found_fraction, 0.0);
    }
}
