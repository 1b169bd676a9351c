//! `.thv` container.
//!
//! Layout, all little-endian:
//!
//! | bytes | field                         |
//! |-------|-------------------------------|
//! | 8     | magic `THERMV01`              |
//! | 4     | width (u32)                   |
//! | 4     | height (u32)                  |
//! | 4     | frame count (u32)             |
//! | 8     | frame rate (f64)              |
//! | 1     | room type (0 delivery, 1 theatre) |
//! | 8     | calibration scale (f64)       |
//! | 8     | calibration offset (f64)      |
//!
//! followed by `count * height * width` u16 pixels, frame by frame, row-major.

use std::io::{Read, Write};

use super::{CalibrationMap, RoomType, ThermalFrame, ThermalIoError, ThermalVideo};

pub const MAGIC: [u8; 8] = *b"THERMV01";
pub const HEADER_LEN: usize = 8 + 4 * 3 + 8 + 1 + 8 + 8;

struct Counting<W> {
    inner: W,
    written: u64,
}

impl<W: Write> Counting<W> {
    fn put(&mut self, bytes: &[u8]) -> Result<(), ThermalIoError> {
        self.inner
            .write_all(bytes)
            .map_err(|source| ThermalIoError::Io {
                offset: self.written,
                source,
            })?;
        self.written += bytes.len() as u64;
        Ok(())
    }
}

/// Serializes `video` and returns the number of bytes written.
pub fn write_video<W: Write>(video: &ThermalVideo, sink: W) -> Result<u64, ThermalIoError> {
    video.validate()?;
    let mut out = Counting {
        inner: sink,
        written: 0,
    };

    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(&MAGIC);
    header.extend_from_slice(&video.width().to_le_bytes());
    header.extend_from_slice(&video.height().to_le_bytes());
    header.extend_from_slice(&(video.len() as u32).to_le_bytes());
    header.extend_from_slice(&video.frame_rate.to_le_bytes());
    header.push(video.room_type.tag());
    header.extend_from_slice(&video.calibration.scale.to_le_bytes());
    header.extend_from_slice(&video.calibration.offset.to_le_bytes());
    debug_assert_eq!(header.len(), HEADER_LEN);
    out.put(&header)?;

    let mut buf = Vec::with_capacity(2 * video.frames[0].pixel_count());
    for frame in &video.frames {
        buf.clear();
        for &px in &frame.data {
            buf.extend_from_slice(&px.to_le_bytes());
        }
        out.put(&buf)?;
    }
    out.inner.flush().map_err(|source| ThermalIoError::Io {
        offset: out.written,
        source,
    })?;
    Ok(out.written)
}

fn read_exact_or_truncated<R: Read>(
    src: &mut R,
    buf: &mut [u8],
    what: &'static str,
) -> Result<(), ThermalIoError> {
    let mut got = 0usize;
    while got < buf.len() {
        match src.read(&mut buf[got..]) {
            Ok(0) => {
                return Err(ThermalIoError::Truncated {
                    what,
                    expected: buf.len() as u64,
                    actual: got as u64,
                })
            }
            Ok(n) => got += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(source) => {
                return Err(ThermalIoError::Io {
                    offset: got as u64,
                    source,
                })
            }
        }
    }
    Ok(())
}

fn le_u32(b: &[u8]) -> u32 {
    u32::from_le_bytes(b.try_into().unwrap())
}

fn le_f64(b: &[u8]) -> f64 {
    f64::from_le_bytes(b.try_into().unwrap())
}

/// Parses a container produced by [`write_video`] and validates the result.
pub fn read_video<R: Read>(mut source: R) -> Result<ThermalVideo, ThermalIoError> {
    let mut header = [0u8; HEADER_LEN];
    read_exact_or_truncated(&mut source, &mut header, "header")?;
    let magic: [u8; 8] = header[0..8].try_into().unwrap();
    if magic != MAGIC {
        return Err(ThermalIoError::BadMagic(magic));
    }
    let width = le_u32(&header[8..12]);
    let height = le_u32(&header[12..16]);
    let count = le_u32(&header[16..20]) as usize;
    let frame_rate = le_f64(&header[20..28]);
    let room_type = RoomType::from_tag(header[28])?;
    let calibration = CalibrationMap {
        scale: le_f64(&header[29..37]),
        offset: le_f64(&header[37..45]),
    };
    if count == 0 {
        return Err(ThermalIoError::EmptyVideo);
    }

    let pixels = width as usize * height as usize;
    let expected = 2 * (count as u64) * pixels as u64;
    let mut payload = Vec::new();
    source
        .by_ref()
        .take(expected)
        .read_to_end(&mut payload)
        .map_err(|source| ThermalIoError::Io {
            offset: HEADER_LEN as u64 + payload.len() as u64,
            source,
        })?;
    if (payload.len() as u64) < expected {
        return Err(ThermalIoError::Truncated {
            what: "payload",
            expected,
            actual: payload.len() as u64,
        });
    }
    let mut rest = Vec::new();
    source
        .read_to_end(&mut rest)
        .map_err(|source| ThermalIoError::Io {
            offset: HEADER_LEN as u64 + expected,
            source,
        })?;
    if !rest.is_empty() {
        return Err(ThermalIoError::TrailingBytes(rest.len() as u64));
    }

    let frames = payload
        .chunks_exact(2 * pixels.max(1))
        .take(count)
        .map(|chunk| ThermalFrame {
            width,
            height,
            data: chunk
                .chunks_exact(2)
                .map(|b| u16::from_le_bytes([b[0], b[1]]))
                .collect(),
        })
        .collect::<Vec<_>>();
    ThermalVideo::new(frames, frame_rate, room_type, calibration)
}
