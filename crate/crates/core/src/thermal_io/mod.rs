//! Thermal video data types, raw/Celsius conversion and temperature sampling.
//!
//! Frames hold raw 14-bit sensor counts. Temperatures are derived through an
//! affine [`CalibrationMap`] that travels with the video, so anything reading
//! a container converts counts exactly the way the writer intended.

mod annotation;
mod container;

pub use annotation::{AnnotationError, AnnotationTrack, FrameClass};
pub use container::{read_video, write_video, HEADER_LEN, MAGIC};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest value a 14-bit raw pixel may take.
pub const RAW_MAX: u16 = 16383;

/// Frame rate of the reference recordings, frames per second.
pub const DEFAULT_FRAME_RATE: f64 = 8.33;

#[derive(Debug, Error)]
pub enum ThermalIoError {
    #[error("video must contain at least one frame (N >= 1)")]
    EmptyVideo,
    #[error("frame {frame}: data length {len} does not match {width}x{height}")]
    FrameShape {
        frame: usize,
        width: u32,
        height: u32,
        len: usize,
    },
    #[error("frame {frame} is {got_w}x{got_h}, expected {width}x{height}")]
    ResolutionMismatch {
        frame: usize,
        width: u32,
        height: u32,
        got_w: u32,
        got_h: u32,
    },
    #[error("frame rate must be positive and finite, got {0}")]
    InvalidFrameRate(f64),
    #[error("calibration scale must be positive and finite (scale={scale}, offset={offset})")]
    InvalidCalibration { scale: f64, offset: f64 },
    #[error("raw value {value} exceeds {max} at frame {frame}, pixel ({x}, {y})", max = RAW_MAX)]
    RawOutOfRange {
        frame: usize,
        x: u32,
        y: u32,
        value: u16,
    },
    #[error("raw value {0} outside 0..=16383")]
    RawDomain(u32),
    #[error("sampling interval must be positive, got {0}")]
    InvalidInterval(f64),
    #[error("bad container magic {0:02x?}")]
    BadMagic([u8; 8]),
    #[error("unknown room type tag {0}")]
    UnknownRoomType(u8),
    #[error("truncated {what}: expected {expected} bytes, got {actual}")]
    Truncated {
        what: &'static str,
        expected: u64,
        actual: u64,
    },
    #[error("{0} trailing bytes after last frame")]
    TrailingBytes(u64),
    #[error("i/o error at byte offset {offset}: {source}")]
    Io {
        offset: u64,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoomType {
    #[serde(alias = "delivery")]
    DeliveryRoom,
    #[serde(alias = "theatre")]
    OperationTheatre,
}

impl RoomType {
    pub fn tag(self) -> u8 {
        match self {
            RoomType::DeliveryRoom => 0,
            RoomType::OperationTheatre => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self, ThermalIoError> {
        match tag {
            0 => Ok(RoomType::DeliveryRoom),
            1 => Ok(RoomType::OperationTheatre),
            t => Err(ThermalIoError::UnknownRoomType(t)),
        }
    }
}

/// Affine raw-count to Celsius map: `t = offset + scale * raw`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationMap {
    /// Degrees Celsius per raw unit.
    pub scale: f64,
    /// Degrees Celsius at raw value 0.
    pub offset: f64,
}

impl Default for CalibrationMap {
    /// Spans -40 °C (raw 0) to 125 °C (raw 16383).
    fn default() -> Self {
        Self {
            scale: 165.0 / RAW_MAX as f64,
            offset: -40.0,
        }
    }
}

impl CalibrationMap {
    pub fn new(scale: f64, offset: f64) -> Result<Self, ThermalIoError> {
        let map = Self { scale, offset };
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<(), ThermalIoError> {
        if self.scale > 0.0 && self.scale.is_finite() && self.offset.is_finite() {
            Ok(())
        } else {
            Err(ThermalIoError::InvalidCalibration {
                scale: self.scale,
                offset: self.offset,
            })
        }
    }

    /// Conversion without the domain check, for values already known valid.
    #[inline]
    pub fn celsius(&self, raw: u16) -> f64 {
        self.offset + self.scale * raw as f64
    }

    /// Lowest and highest representable temperature.
    pub fn span(&self) -> (f64, f64) {
        (self.celsius(0), self.celsius(RAW_MAX))
    }
}

/// Converts a raw count to degrees Celsius.
pub fn raw_to_celsius(raw: u32, cal: &CalibrationMap) -> Result<f64, ThermalIoError> {
    if raw > RAW_MAX as u32 {
        return Err(ThermalIoError::RawDomain(raw));
    }
    Ok(cal.celsius(raw as u16))
}

/// Nearest raw count for a temperature. Exact half steps go to the larger
/// count; anything outside the representable span clamps to 0 or 16383.
pub fn celsius_to_raw(t: f64, cal: &CalibrationMap) -> u16 {
    let x = (t - cal.offset) / cal.scale;
    if x.is_nan() || x <= 0.0 {
        return 0;
    }
    if x >= RAW_MAX as f64 {
        return RAW_MAX;
    }
    let lo = x.floor();
    // tolerance absorbs the rounding of midpoints computed in °C
    let r = if x - lo >= 0.5 - 1e-9 { lo + 1.0 } else { lo };
    (r as u32).min(RAW_MAX as u32) as u16
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ThermalFrame {
    pub width: u32,
    pub height: u32,
    /// Row-major raw counts.
    pub data: Vec<u16>,
}

impl ThermalFrame {
    pub fn new(width: u32, height: u32, data: Vec<u16>) -> Result<Self, ThermalIoError> {
        let frame = Self {
            width,
            height,
            data,
        };
        frame.validate(0)?;
        Ok(frame)
    }

    pub fn filled(width: u32, height: u32, value: u16) -> Self {
        Self {
            width,
            height,
            data: vec![value; width as usize * height as usize],
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    fn validate(&self, index: usize) -> Result<(), ThermalIoError> {
        if self.data.len() != self.pixel_count() {
            return Err(ThermalIoError::FrameShape {
                frame: index,
                width: self.width,
                height: self.height,
                len: self.data.len(),
            });
        }
        if let Some(pos) = self.data.iter().position(|&v| v > RAW_MAX) {
            return Err(ThermalIoError::RawOutOfRange {
                frame: index,
                x: (pos % self.width as usize) as u32,
                y: (pos / self.width as usize) as u32,
                value: self.data[pos],
            });
        }
        Ok(())
    }
}

/// A single-channel thermal recording.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalVideo {
    pub frames: Vec<ThermalFrame>,
    pub frame_rate: f64,
    pub room_type: RoomType,
    pub calibration: CalibrationMap,
}

impl ThermalVideo {
    pub fn new(
        frames: Vec<ThermalFrame>,
        frame_rate: f64,
        room_type: RoomType,
        calibration: CalibrationMap,
    ) -> Result<Self, ThermalIoError> {
        let video = Self {
            frames,
            frame_rate,
            room_type,
            calibration,
        };
        video.validate()?;
        Ok(video)
    }

    pub fn validate(&self) -> Result<(), ThermalIoError> {
        let first = self.frames.first().ok_or(ThermalIoError::EmptyVideo)?;
        if !(self.frame_rate > 0.0 && self.frame_rate.is_finite()) {
            return Err(ThermalIoError::InvalidFrameRate(self.frame_rate));
        }
        self.calibration.validate()?;
        for (i, f) in self.frames.iter().enumerate() {
            if f.width != first.width || f.height != first.height {
                return Err(ThermalIoError::ResolutionMismatch {
                    frame: i,
                    width: first.width,
                    height: first.height,
                    got_w: f.width,
                    got_h: f.height,
                });
            }
            f.validate(i)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> u32 {
        self.frames.first().map_or(0, |f| f.width)
    }

    pub fn height(&self) -> u32 {
        self.frames.first().map_or(0, |f| f.height)
    }

    pub fn duration_s(&self) -> f64 {
        self.frames.len() as f64 / self.frame_rate
    }

    /// Temperatures of one frame in °C, row-major.
    pub fn frame_celsius(&self, index: usize) -> Vec<f64> {
        self.frames[index]
            .data
            .iter()
            .map(|&r| self.calibration.celsius(r))
            .collect()
    }
}

/// Frame stride for a sampling interval: `floor(interval_s * frame_rate)`,
/// never below one frame.
pub fn frame_stride(interval_s: f64, frame_rate: f64) -> usize {
    ((interval_s * frame_rate).floor() as usize).max(1)
}

/// Indices of the frames picked by [`sample_temperatures`].
pub fn sample_indices(n_frames: usize, frame_rate: f64, interval_s: f64) -> Vec<usize> {
    (0..n_frames)
        .step_by(frame_stride(interval_s, frame_rate))
        .collect()
}

/// Flattens the frames at `0, s, 2s, ...` (with `s = floor(interval_s * f_r)`)
/// into one temperature vector, frame order then row-major.
pub fn sample_temperatures(
    video: &ThermalVideo,
    interval_s: f64,
) -> Result<Vec<f64>, ThermalIoError> {
    if !(interval_s > 0.0 && interval_s.is_finite()) {
        return Err(ThermalIoError::InvalidInterval(interval_s));
    }
    let idx = sample_indices(video.len(), video.frame_rate, interval_s);
    let cal = video.calibration;
    let mut out = Vec::with_capacity(idx.len() * video.frames[0].pixel_count());
    for i in idx {
        out.extend(video.frames[i].data.iter().map(|&r| cal.celsius(r)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn video(n: usize, w: u32, h: u32) -> ThermalVideo {
        ThermalVideo::new(
            vec![ThermalFrame::filled(w, h, 100); n],
            DEFAULT_FRAME_RATE,
            RoomType::DeliveryRoom,
            CalibrationMap::default(),
        )
        .unwrap()
    }

    #[test]
    fn default_map_endpoints() {
        let cal = CalibrationMap::default();
        assert_eq!(raw_to_celsius(0, &cal).unwrap(), -40.0);
        assert!((raw_to_celsius(16383, &cal).unwrap() - 125.0).abs() < 1e-12);
        let id = CalibrationMap::new(1.0, 0.0).unwrap();
        assert_eq!(raw_to_celsius(5, &id).unwrap(), 5.0);
        assert!(matches!(
            raw_to_celsius(16384, &cal),
            Err(ThermalIoError::RawDomain(16384))
        ));
    }

    #[test]
    fn inverse_and_clamp() {
        let cal = CalibrationMap::default();
        assert_eq!(celsius_to_raw(cal.celsius(100), &cal), 100);
        assert_eq!(celsius_to_raw(-100.0, &cal), 0);
        assert_eq!(celsius_to_raw(500.0, &cal), RAW_MAX);
    }

    #[test]
    fn midpoint_rounds_up_across_one_step() {
        // walk one raw step in fine increments: below the midpoint goes to
        // r, at or above it goes to r + 1
        let cal = CalibrationMap::default();
        let r = 6000u16;
        let lo = cal.celsius(r);
        let hi = cal.celsius(r + 1);
        let mid = 0.5 * (lo + hi);
        assert_eq!(celsius_to_raw(mid, &cal), r + 1);
        for k in 0..=100 {
            let t = lo + (hi - lo) * k as f64 / 100.0;
            let expect = if k < 50 { r } else { r + 1 };
            assert_eq!(celsius_to_raw(t, &cal), expect, "k={k}");
        }
    }

    #[test]
    fn sampling_single_frame_and_degenerate_interval() {
        let v = video(1, 4, 3);
        assert_eq!(sample_temperatures(&v, 30.0).unwrap().len(), 12);
        let v = video(20, 2, 2);
        assert_eq!(sample_temperatures(&v, 1000.0).unwrap().len(), 4);
        assert!(sample_temperatures(&v, 0.0).is_err());
    }

    #[test]
    fn sampling_indices_thirty_seconds() {
        let idx = sample_indices(15000, 8.33, 30.0);
        assert_eq!(frame_stride(30.0, 8.33), 249);
        assert_eq!(idx.len(), 61);
        assert_eq!(&idx[..3], &[0, 249, 498]);
        assert_eq!(*idx.last().unwrap(), 14940);
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            ThermalVideo::new(
                vec![],
                8.33,
                RoomType::DeliveryRoom,
                CalibrationMap::default()
            ),
            Err(ThermalIoError::EmptyVideo)
        ));
        let frames = vec![ThermalFrame::filled(2, 2, 0), ThermalFrame::filled(3, 2, 0)];
        assert!(matches!(
            ThermalVideo::new(
                frames,
                8.33,
                RoomType::DeliveryRoom,
                CalibrationMap::default()
            ),
            Err(ThermalIoError::ResolutionMismatch { frame: 1, .. })
        ));
        let mut f = ThermalFrame::filled(3, 2, 0);
        f.data[4] = 16384;
        assert!(matches!(
            ThermalFrame::new(3, 2, f.data),
            Err(ThermalIoError::RawOutOfRange { x: 1, y: 1, .. })
        ));
        assert!(CalibrationMap::new(0.0, 1.0).is_err());
    }
}
