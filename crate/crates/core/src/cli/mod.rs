//! The `thermotob` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 some videos failed
//! while the rest were processed.

mod corpus;

pub use corpus::{DiskCorpus, ANNOTATION_SUFFIX, VIDEO_EXT};

use std::ffi::OsString;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use thiserror::Error;

use crate::detector::{
    export_scores, import_scores, score_feature_series, train_detector, DetectorModel,
    ScoreSeries, TrainConfig, DEFAULT_NNB_HZ,
};
use crate::gmm_norm::{
    calibrate_profile, estimate_skin, GmmNormConfig, RoomProfile, DEFAULT_ROUNDING_STEP,
};
use crate::simulator::{render_scene, scenario_suite, RoomMix};
use crate::thermal_io::{write_video, FrameClass, RoomType};
use crate::tob::{
    dataset_from_features, default_threshold_grid, evaluate_video, features_of, fir_smooth,
    fpr_sweep, Corpus, Normalization, PipelineError, VariantReport, VideoFeatures, VideoResult,
    DEFAULT_FILTER_LEN, DEFAULT_GAMMA,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

/// Environment variable holding the log filter, e.g. `THERMOTOB_LOG=debug`.
pub const LOG_ENV: &str = "THERMOTOB_LOG";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "thermotob", version, about = "Time-of-birth detection from thermal video")]
pub struct Cli {
    /// Worker threads for per-video processing (default: one per core).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a seeded corpus of synthetic birth episodes.
    Simulate(SimulateArgs),
    /// Derive a range-of-interest profile from a corpus.
    Calibrate(CalibrateArgs),
    /// Train the reference detector on an annotated corpus.
    Train(TrainArgs),
    /// Write raw per-frame scores for every video.
    Score(ScoreArgs),
    /// Estimate the time of birth for every video and summarize the errors.
    Run(RunArgs),
    /// False-positive rate of smoothed scores across thresholds.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RoomsArg {
    Mixed,
    Delivery,
    Theatre,
}

impl From<RoomsArg> for RoomMix {
    fn from(r: RoomsArg) -> Self {
        match r {
            RoomsArg::Mixed => RoomMix::Mixed,
            RoomsArg::Delivery => RoomMix::Delivery,
            RoomsArg::Theatre => RoomMix::Theatre,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    Gmm,
    Maxmin,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of videos.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "mixed")]
    pub rooms: RoomsArg,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct NormArgs {
    #[arg(long, value_enum, default_value = "gmm")]
    pub norm: NormArg,
    /// Range-of-interest offsets around the skin mean, `LOWER,UPPER` in °C.
    /// Overrides the per-room default.
    #[arg(long, value_parser = parse_profile, allow_hyphen_values = true)]
    pub room_profile: Option<RoomProfile>,
}

impl NormArgs {
    pub fn normalization(&self) -> Normalization {
        match self.norm {
            NormArg::Gmm => Normalization::Gmm(GmmNormConfig {
                profile: self.room_profile,
                ..GmmNormConfig::default()
            }),
            NormArg::Maxmin => Normalization::MaxMin,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.norm {
            NormArg::Gmm => "gmm",
            NormArg::Maxmin => "maxmin",
        }
    }
}

fn parse_profile(s: &str) -> Result<RoomProfile, String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| "expected LOWER,UPPER".to_string())?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("{e}"))?;
    RoomProfile::new(lo, hi).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Only use videos from this room.
    #[arg(long, value_enum)]
    pub room: Option<RoomsArg>,
    #[arg(long, default_value_t = DEFAULT_ROUNDING_STEP)]
    pub step: f64,
    /// Output profile JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub norm: NormArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    pub epochs: usize,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    pub learning_rate: f64,
    /// Sampling rate of NNB training frames.
    #[arg(long, default_value_t = DEFAULT_NNB_HZ)]
    pub nnb_hz: f64,
    /// Output model JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub norm: NormArgs,
    /// Output directory for `<id>.scores.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Detector model JSON; required unless --scores is given.
    #[arg(long, required_unless_present = "scores")]
    pub model: Option<PathBuf>,
    /// Directory of precomputed `<id>.scores.csv` files.
    #[arg(long, conflicts_with = "model")]
    pub scores: Option<PathBuf>,
    #[command(flatten)]
    pub norm: NormArgs,
    #[arg(long, default_value_t = DEFAULT_FILTER_LEN)]
    pub filter_k: usize,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub eval: EvalArgs,
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    pub gamma: f64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub eval: EvalArgs,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<i32, CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Data(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Calibrate(a) => cmd_calibrate(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Score(a) => cmd_score(&a),
        Command::Run(a) => cmd_run(&a),
        Command::Sweep(a) => cmd_sweep(&a),
    })
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .map_err(|e| CliError::Data(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Logs every failure and returns the exit code for the run.
fn report_failures(failures: &[(String, String)]) -> i32 {
    for (id, msg) in failures {
        log::error!("{id}: {msg}");
        eprintln!("failed: {id}: {msg}");
    }
    if failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_PARTIAL
    }
}

fn failures_json(failures: &[(String, String)]) -> String {
    let rows: Vec<_> = failures
        .iter()
        .map(|(id, error)| serde_json::json!({ "id": id, "error": error }))
        .collect();
    serde_json::to_string_pretty(&rows).expect("failures serialize")
}

/// Applies `f` to every video in parallel, keeping corpus order.
fn map_videos<T: Send>(
    corpus: &DiskCorpus,
    f: impl Fn(usize) -> Result<T, PipelineError> + Sync,
) -> Result<(Vec<(String, T)>, Vec<(String, String)>), CliError> {
    let results: Vec<_> = (0..corpus.len()).into_par_iter().map(&f).collect();
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (id, r) in corpus.ids.iter().zip(results) {
        match r {
            Ok(v) => ok.push((id.clone(), v)),
            Err(e) => failed.push((id.clone(), e.to_string())),
        }
    }
    if ok.is_empty() {
        report_failures(&failed);
        return Err(CliError::Data("every video in the corpus failed".into()));
    }
    Ok((ok, failed))
}

fn video_features(
    corpus: &DiskCorpus,
    norm: &Normalization,
) -> Result<(Vec<VideoFeatures>, Vec<(String, String)>), CliError> {
    let (ok, failed) = map_videos(corpus, |i| {
        let lv = corpus.load(i)?;
        let normalized = norm
            .apply(&lv.video)
            .map_err(|e| e.context(lv.id.clone()))?;
        Ok(VideoFeatures {
            id: lv.id,
            frame_rate: lv.video.frame_rate,
            track: lv.track,
            features: features_of(&normalized),
        })
    })?;
    Ok((ok.into_iter().map(|(_, v)| v).collect(), failed))
}

fn load_model(path: &Path) -> Result<DetectorModel, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    DetectorModel::from_json(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<i32, CliError> {
    if a.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let scenarios = scenario_suite(a.n, a.rooms.into(), a.seed)
        .map_err(|e| CliError::Data(e.to_string()))?;
    create_dir(&a.out)?;
    let rendered: Vec<Result<serde_json::Value, CliError>> = scenarios
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let id = format!("sim_{i:03}");
            let (video, truth) = render_scene(s).map_err(|e| CliError::Data(format!("{id}: {e}")))?;
            let track = truth
                .track(s.frame_rate)
                .map_err(|e| CliError::Data(format!("{id}: {e}")))?;
            let video_path = a.out.join(format!("{id}.{VIDEO_EXT}"));
            let file = fs::File::create(&video_path)
                .map_err(|e| CliError::Data(format!("{}: {e}", video_path.display())))?;
            write_video(&video, BufWriter::new(file))
                .map_err(|e| CliError::Data(format!("{}: {e}", video_path.display())))?;
            write_file(&a.out.join(format!("{id}{ANNOTATION_SUFFIX}")), track.to_json())?;
            write_file(&a.out.join(format!("{id}.scenario.json")), s.to_json())?;
            write_file(&a.out.join(format!("{id}.truth.json")), truth.to_json())?;
            Ok(serde_json::json!({
                "id": id,
                "room_type": s.room_type,
                "frames": video.len(),
                "tob_frame": truth.tob_frame,
                "tob_s": truth.tob_s,
            }))
        })
        .collect();
    let videos = rendered.into_iter().collect::<Result<Vec<_>, _>>()?;
    let manifest = serde_json::json!({
        "seed": a.seed,
        "n": a.n,
        "videos": videos,
    });
    write_file(
        &a.out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    log::info!("wrote {} videos to {}", a.n, a.out.display());
    Ok(EXIT_OK)
}

pub fn cmd_calibrate(a: &CalibrateArgs) -> Result<i32, CliError> {
    let corpus = DiskCorpus::open(&a.corpus)?;
    let wanted = a.room.map(|r| match r {
        RoomsArg::Delivery => Some(RoomType::DeliveryRoom),
        RoomsArg::Theatre => Some(RoomType::OperationTheatre),
        RoomsArg::Mixed => None,
    });
    let cfg = GmmNormConfig::default();
    let (ok, failed) = map_videos(&corpus, |i| {
        let lv = corpus.load(i)?;
        if wanted.flatten().is_some_and(|r| r != lv.video.room_type) {
            return Ok(None);
        }
        let (_, selection, stats) =
            estimate_skin(&lv.video, &cfg).map_err(|e| PipelineError::from(e).context(lv.id))?;
        Ok(Some((stats, selection.mu_hat)))
    })?;
    let pairs: Vec<_> = ok.into_iter().filter_map(|(_, p)| p).collect();
    let profile = calibrate_profile(&pairs, a.step).map_err(|e| CliError::Data(e.to_string()))?;
    let out = serde_json::json!({
        "lower_offset": profile.lower_offset,
        "upper_offset": profile.upper_offset,
        "videos": pairs.len(),
        "step": a.step,
    });
    write_file(&a.out, serde_json::to_string_pretty(&out).expect("profile serializes"))?;
    Ok(report_failures(&failed))
}

pub fn cmd_train(a: &TrainArgs) -> Result<i32, CliError> {
    if !(a.nnb_hz > 0.0 && a.nnb_hz.is_finite()) {
        return Err(CliError::Usage("--nnb-hz must be positive".into()));
    }
    if !(a.learning_rate > 0.0 && a.learning_rate.is_finite()) {
        return Err(CliError::Usage("--learning-rate must be positive".into()));
    }
    let corpus = DiskCorpus::open(&a.corpus)?;
    let (videos, failed) = video_features(&corpus, &a.norm.normalization())?;
    let ds = dataset_from_features(&videos, a.nnb_hz)?;
    let cfg = TrainConfig {
        epochs: a.epochs,
        learning_rate: a.learning_rate,
        seed: a.seed,
        ..TrainConfig::default()
    };
    let model = train_detector(&ds, &cfg).map_err(|e| CliError::Data(e.to_string()))?;
    log::info!(
        "trained on {} samples ({} NNB, {} VNB)",
        ds.len(),
        ds.counts[0],
        ds.counts[1]
    );
    write_file(&a.out, model.to_json())?;
    Ok(report_failures(&failed))
}

pub fn cmd_score(a: &ScoreArgs) -> Result<i32, CliError> {
    let model = load_model(&a.model)?;
    let corpus = DiskCorpus::open(&a.corpus)?;
    create_dir(&a.out)?;
    let (videos, mut failed) = video_features(&corpus, &a.norm.normalization())?;
    for v in &videos {
        match score_feature_series(&model, &v.features, v.frame_rate, &v.id) {
            Ok(s) => write_file(&a.out.join(format!("{}.scores.csv", v.id)), export_scores(&s))?,
            Err(e) => failed.push((v.id.clone(), e.to_string())),
        }
    }
    Ok(report_failures(&failed))
}

/// Raw scores, smoothed scores and labels of one evaluated video.
struct Scored {
    id: String,
    raw: ScoreSeries,
    smoothed: ScoreSeries,
    track: crate::thermal_io::AnnotationTrack,
}

fn validate_eval(e: &EvalArgs) -> Result<(), CliError> {
    if e.filter_k == 0 {
        return Err(CliError::Usage("--filter-k must be at least 1".into()));
    }
    Ok(())
}

fn score_corpus(e: &EvalArgs) -> Result<(Vec<Scored>, Vec<(String, String)>), CliError> {
    let corpus = DiskCorpus::open(&e.corpus)?;
    let smooth = |id: String, raw: ScoreSeries, track| -> Result<Scored, PipelineError> {
        let smoothed = fir_smooth(&raw, e.filter_k)?;
        Ok(Scored {
            id,
            raw,
            smoothed,
            track,
        })
    };
    if let Some(dir) = &e.scores {
        let (ok, failed) = map_videos(&corpus, |i| {
            let id = &corpus.ids[i];
            let track = corpus.load_track(id)?;
            let path = dir.join(format!("{id}.scores.csv"));
            let text = fs::read_to_string(&path).map_err(|source| PipelineError::File {
                path: path.display().to_string(),
                source,
            })?;
            let raw = import_scores(&text, id, track.fps)
                .map_err(|err| PipelineError::from(err).context(path.display().to_string()))?;
            if raw.len() != track.n_frames {
                return Err(PipelineError::from(crate::tob::TobError::LengthMismatch {
                    scores: raw.len(),
                    labels: track.n_frames,
                })
                .context(id.clone()));
            }
            smooth(id.clone(), raw, track)
        })?;
        return Ok((ok.into_iter().map(|(_, s)| s).collect(), failed));
    }
    let model_path = e
        .model
        .as_ref()
        .ok_or_else(|| CliError::Usage("--model or --scores is required".into()))?;
    let model = load_model(model_path)?;
    let (videos, mut failed) = video_features(&corpus, &e.norm.normalization())?;
    let mut scored = Vec::with_capacity(videos.len());
    for v in videos {
        let r = score_feature_series(&model, &v.features, v.frame_rate, &v.id)
            .map_err(PipelineError::from)
            .and_then(|raw| smooth(v.id.clone(), raw, v.track));
        match r {
            Ok(s) => scored.push(s),
            Err(err) => failed.push((v.id, err.to_string())),
        }
    }
    Ok((scored, failed))
}

fn timeline_csv(s: &Scored) -> String {
    let labels = s.track.vnb_labels();
    let mut out = String::from("frame,t_s,score,smoothed,vnb\n");
    for (n, (raw, sm)) in s.raw.scores.iter().zip(&s.smoothed.scores).enumerate() {
        out.push_str(&format!(
            "{n},{},{raw},{sm},{}\n",
            n as f64 / s.raw.frame_rate,
            labels[n] as u8
        ));
    }
    out
}

pub fn cmd_run(a: &RunArgs) -> Result<i32, CliError> {
    validate_eval(&a.eval)?;
    if !(a.gamma > 0.0 && a.gamma <= 1.0) {
        return Err(CliError::Usage("--gamma must lie in (0, 1]".into()));
    }
    let (scored, failed) = score_corpus(&a.eval)?;
    create_dir(&a.out)?;
    let timelines = a.out.join("timelines");
    create_dir(&timelines)?;
    let mut rows: Vec<VideoResult> = Vec::with_capacity(scored.len());
    for s in &scored {
        rows.push(evaluate_video(&s.id, &s.smoothed, &s.track, a.gamma));
        write_file(&timelines.join(format!("{}.csv", s.id)), timeline_csv(s))?;
    }
    let variant = if a.eval.scores.is_some() {
        "imported"
    } else {
        a.eval.norm.name()
    };
    let report = VariantReport::from_results(variant, rows);
    write_file(&a.out.join("report.json"), report.to_json())?;
    write_file(&a.out.join("report.csv"), report.to_csv())?;
    if !failed.is_empty() {
        write_file(&a.out.join("failures.json"), failures_json(&failed))?;
    }
    log::info!(
        "{} videos, found fraction {}, median |err| {:?}",
        report.per_video.len(),
        report.found_fraction,
        report.q2
    );
    Ok(report_failures(&failed))
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<i32, CliError> {
    validate_eval(&a.eval)?;
    let (scored, failed) = score_corpus(&a.eval)?;
    let classes: Vec<Vec<FrameClass>> = scored.iter().map(|s| s.track.frame_classes()).collect();
    let pairs: Vec<(&[f64], &[FrameClass])> = scored
        .iter()
        .zip(&classes)
        .map(|(s, c)| (s.smoothed.scores.as_slice(), c.as_slice()))
        .collect();
    let sweep = fpr_sweep(&pairs, &default_threshold_grid())
        .map_err(|e| CliError::Data(e.to_string()))?;
    if sweep.degenerate {
        log::warn!("no pre-birth NNB frames; FPR column is all zeros");
    }
    write_file(&a.out, sweep.to_csv())?;
    Ok(report_failures(&failed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_parser() {
        let p = parse_profile("-5,10").unwrap();
        assert_eq!((p.lower_offset, p.upper_offset), (-5.0, 10.0));
        assert!(parse_profile("5,10").is_err());
        assert!(parse_profile("x").is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["thermotob", "bogus"]), EXIT_USAGE);
        assert_eq!(run(["thermotob", "run", "--corpus", "x"]), EXIT_USAGE);
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("c");
        assert_eq!(
            run(["thermotob", "simulate", "--n", "0", "--out", out.to_str().unwrap()]),
            EXIT_USAGE
        );
        assert_eq!(run(["thermotob", "--help"]), EXIT_OK);
    }

    #[test]
    fn missing_model_is_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = dir.path().join("c");
        let c = corpus.to_str().unwrap();
        assert_eq!(
            run(["thermotob", "simulate", "--n", "1", "--seed", "3", "--out", c]),
            EXIT_OK
        );
        let model = dir.path().join("missing.json");
        let out = dir.path().join("s");
        assert_eq!(
            run([
                "thermotob",
                "score",
                "--corpus",
                c,
                "--model",
                model.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ]),
            EXIT_DATA
        );
    }
}
