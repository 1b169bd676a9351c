use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use crate::thermal_io::{read_video, AnnotationTrack};
use crate::tob::{Corpus, LabeledVideo, PipelineError};

use super::CliError;

pub const VIDEO_EXT: &str = "thv";
pub const ANNOTATION_SUFFIX: &str = ".ann.json";

/// A directory of `<id>.thv` videos, each with an `<id>.ann.json` beside it.
/// Ids are sorted so every listing is reproducible.
pub struct DiskCorpus {
    pub dir: PathBuf,
    pub ids: Vec<String>,
}

impl DiskCorpus {
    pub fn open(dir: &Path) -> Result<Self, CliError> {
        let entries = fs::read_dir(dir)
            .map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
        let mut ids = Vec::new();
        for entry in entries {
            let path = entry
                .map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?
                .path();
            if path.extension().and_then(|e| e.to_str()) == Some(VIDEO_EXT) {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    ids.push(stem.to_string());
                }
            }
        }
        if ids.is_empty() {
            return Err(CliError::Usage(format!(
                "no .{VIDEO_EXT} videos in {}",
                dir.display()
            )));
        }
        ids.sort();
        Ok(Self {
            dir: dir.to_path_buf(),
            ids,
        })
    }

    pub fn video_path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.{VIDEO_EXT}"))
    }

    pub fn annotation_path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}{ANNOTATION_SUFFIX}"))
    }

    pub fn load_track(&self, id: &str) -> Result<AnnotationTrack, PipelineError> {
        let path = self.annotation_path(id);
        let text = fs::read_to_string(&path).map_err(|source| PipelineError::File {
            path: path.display().to_string(),
            source,
        })?;
        AnnotationTrack::from_json(&text)
            .map_err(|e| PipelineError::from(e).context(path.display().to_string()))
    }
}

impl Corpus for DiskCorpus {
    fn len(&self) -> usize {
        self.ids.len()
    }

    fn load(&self, index: usize) -> Result<LabeledVideo, PipelineError> {
        let id = &self.ids[index];
        let path = self.video_path(id);
        let ctx = |e: PipelineError| e.context(path.display().to_string());
        let file = File::open(&path).map_err(|source| PipelineError::File {
            path: path.display().to_string(),
            source,
        })?;
        let video = read_video(BufReader::new(file)).map_err(|e| ctx(e.into()))?;
        let track = self.load_track(id)?;
        track
            .check_length(video.len())
            .map_err(|e| ctx(e.into()))?;
        Ok(LabeledVideo {
            id: id.clone(),
            video,
            track,
        })
    }
}
